#pragma once

#include "rfps/model_selection.hpp"
#include "rfps/screening.hpp"
#include "rfps/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rfps {

enum class LeverageKind { None, PcGood, PcBad, OcGood, OcBad };
enum class TrueLabel { Regular, Vertical, PcGood, PcBad, OcGood, OcBad };

const char* to_string(LeverageKind kind);
const char* to_string(TrueLabel label);
LeverageKind parse_leverage_kind(const std::string& name);

struct SimulationSpec {
  Index n = 200;
  Index p = 1000;
  Index d = 2;
  double c = 5.0;
  double eps_leverage = 0.0;
  double eps_vertical = 0.0;
  LeverageKind leverage_kind = LeverageKind::None;
  std::uint64_t seed = 0;
  Index m_true = 8;
};

/// Throws SpecInvalid.
void validate(const SimulationSpec& spec);

struct SimulatedDataset {
  Matrix X;
  Vector y;
  Vector theta0;
  IndexSet true_model;
  std::vector<TrueLabel> labels;
  Matrix Z;       // latent scores used for X (PC rows shifted)
  Vector errors;  // eps = Z alpha0 + eps_tilde, before response replacement
  double sigma_eps = 0.0;
};

/// One dataset; `replicate` selects independent RNG streams.
SimulatedDataset generate(const SimulationSpec& spec, std::uint64_t replicate = 0);

/// MMS(m), m = 1..|true_model|. Throws TrueModelNotInPath.
std::vector<Index> minimal_model_size(const std::vector<Index>& order, const IndexSet& true_model);

struct ExperimentOptions {
  std::vector<ScreeningMethod> methods = {ScreeningMethod::Sis, ScreeningMethod::Fpsis, ScreeningMethod::Rfpsis};
  Index n_replicates = 1;
  std::optional<Index> d;  // nullopt: estimate
  Index d_max = 10;
  // FPSIS profiles with the generating dimension when d is not forced.
  bool fpsis_true_d = true;
  // Criteria evaluated on the RFPSIS path; empty skips model selection.
  std::vector<Criterion> criteria;
  Index k_max = 0;  // 0: default_k_max
  int threads = 1;
};

struct ReplicateResult {
  std::uint64_t replicate = 0;
  bool failed = false;
  std::string error;
  std::map<ScreeningMethod, std::vector<Index>> mms;
  std::map<ScreeningMethod, Index> d_hat;
  std::map<Criterion, Index> tp;
  std::map<Criterion, Index> fp;
  std::map<Criterion, Index> selected_size;
  double seconds = 0.0;
};

struct MmsSummary {
  ScreeningMethod method;
  Index m = 0;
  double median = 0.0;
  double q95 = 0.0;
};

struct CriterionSummary {
  Criterion criterion;
  double mean_tp = 0.0;
  double mean_fp = 0.0;
};

struct SimulationReport {
  SimulationSpec spec;
  std::vector<ReplicateResult> replicates;
  std::vector<MmsSummary> mms;
  std::vector<CriterionSummary> criteria;
};

ReplicateResult run_replicate(const SimulationSpec& spec, const ExperimentOptions& options, std::uint64_t replicate);

/// Replicates run concurrently; failures are recorded, not thrown.
SimulationReport run_experiment(const SimulationSpec& spec, const ExperimentOptions& options);

/// Recomputes the aggregate rows from report.replicates.
void summarize(SimulationReport& report, const ExperimentOptions& options);

}  // namespace rfps
