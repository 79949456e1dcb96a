#include "rfps/error.hpp"
#include "rfps/types.hpp"

#include <numeric>

namespace rfps {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonpositiveTuning: return "NonpositiveTuning";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateScatter: return "DegenerateScatter";
    case ErrorCode::BadSubsetSize: return "BadSubsetSize";
    case ErrorCode::BadTrim: return "BadTrim";
    case ErrorCode::RankDeficientSubset: return "RankDeficientSubset";
    case ErrorCode::ZeroScale: return "ZeroScale";
    case ErrorCode::AllFlagged: return "AllFlagged";
    case ErrorCode::SingularScatter: return "SingularScatter";
    case ErrorCode::NoValidDimension: return "NoValidDimension";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NoValidStart: return "NoValidStart";
    case ErrorCode::RankDeficientWeighted: return "RankDeficientWeighted";
    case ErrorCode::ZeroVarianceColumn: return "ZeroVarianceColumn";
    case ErrorCode::TooFewRegularRows: return "TooFewRegularRows";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::TrueModelNotInPath: return "TrueModelNotInPath";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

IndexSet all_indices(Index n) {
  IndexSet out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

Matrix select_rows(const Matrix& m, const IndexSet& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Vector select_rows(const Vector& v, const IndexSet& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

}  // namespace rfps
