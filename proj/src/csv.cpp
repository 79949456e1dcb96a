#include "rfps/csv.hpp"
#include "rfps/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace rfps {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& text, double& value) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && std::isfinite(value);
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<Index>(j);
  throw Error(ErrorCode::Parse, "column '" + name + "' not found in the header");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!have_header) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      if (trim(line).empty()) continue;
      for (auto& f : split_csv_line(line)) table.header.push_back(trim(f));
      have_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const std::size_t data_row = rows.size() + 1;
    const std::string where = source + ": row " + std::to_string(data_row) + " (line " + std::to_string(line_no) + ")";
    if (fields.size() != table.header.size())
      throw Error(ErrorCode::Parse, where + " has " + std::to_string(fields.size()) + " fields, header has " +
                                        std::to_string(table.header.size()));
    std::vector<double> values(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j)
      if (!parse_number(fields[j], values[j]))
        throw Error(ErrorCode::Parse,
                    where + ", column '" + table.header[j] + "': '" + trim(fields[j]) + "' is not a finite number");
    rows.push_back(std::move(values));
  }
  if (!have_header) throw Error(ErrorCode::Parse, source + ": missing header row");
  table.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) table.data(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return parse_csv(in, path);
}

CsvText parse_csv_text(std::istream& in, const std::string& source) {
  CsvText out;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      out.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != out.header.size())
      throw Error(ErrorCode::Parse, source + ": line " + std::to_string(line_no) + " has " +
                                        std::to_string(fields.size()) + " fields, header has " +
                                        std::to_string(out.header.size()));
    out.rows.push_back(std::move(fields));
  }
  if (!have_header) throw Error(ErrorCode::Parse, source + ": missing header row");
  return out;
}

CsvText read_csv_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return parse_csv_text(in, path);
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << quote(fields[i]);
  }
  out_ << '\n';
  if (!out_) throw Error(ErrorCode::Io, "write to '" + path_ + "' failed");
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw Error(ErrorCode::Io, "closing '" + path_ + "' failed");
}

}  // namespace rfps
