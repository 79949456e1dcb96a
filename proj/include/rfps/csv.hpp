#pragma once

#include "rfps/types.hpp"

#include <fstream>
#include <istream>
#include <string>
#include <vector>

namespace rfps {

struct CsvTable {
  std::vector<std::string> header;
  Matrix data;  // rows x header.size()

  /// Column position by name; throws Parse naming the column when absent.
  Index column(const std::string& name) const;
};

/// Numeric CSV with a header row. Errors carry the data row and line number.
/// Throws Io and Parse.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in, const std::string& source = "<input>");

/// Header plus raw string cells; every record must match the header width.
struct CsvText {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvText read_csv_text(const std::string& path);
CsvText parse_csv_text(std::istream& in, const std::string& source = "<input>");

/// Splits one CSV record (RFC 4180 quoting).
std::vector<std::string> split_csv_line(const std::string& line);

/// Shortest round-trip decimal representation ("%.17g").
std::string format_double(double value);

class CsvWriter {
 public:
  /// Throws Io.
  explicit CsvWriter(const std::string& path);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace rfps
