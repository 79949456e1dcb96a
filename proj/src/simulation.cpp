#include "rfps/simulation.hpp"
#include "rfps/error.hpp"
#include "rfps/parallel.hpp"
#include "rfps/rng.hpp"
#include "rfps/robust_stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace rfps {

namespace {

enum Purpose : std::uint64_t { kZ = 1, kB, kXTilde, kTheta, kRows, kPc, kOc, kEps, kYOut, kMethod };

std::uint64_t purpose_key(const SimulationSpec& spec, std::uint64_t replicate, Purpose purpose) {
  return stream_key(spec.seed, replicate, purpose);
}

bool is_leverage(TrueLabel l) { return l != TrueLabel::Regular && l != TrueLabel::Vertical; }

}  // namespace

const char* to_string(LeverageKind kind) {
  switch (kind) {
    case LeverageKind::None: return "none";
    case LeverageKind::PcGood: return "pc_good";
    case LeverageKind::PcBad: return "pc_bad";
    case LeverageKind::OcGood: return "oc_good";
    case LeverageKind::OcBad: return "oc_bad";
  }
  return "unknown";
}

const char* to_string(TrueLabel label) {
  switch (label) {
    case TrueLabel::Regular: return "regular";
    case TrueLabel::Vertical: return "vertical";
    case TrueLabel::PcGood: return "pc_good";
    case TrueLabel::PcBad: return "pc_bad";
    case TrueLabel::OcGood: return "oc_good";
    case TrueLabel::OcBad: return "oc_bad";
  }
  return "unknown";
}

LeverageKind parse_leverage_kind(const std::string& name) {
  for (auto k : {LeverageKind::None, LeverageKind::PcGood, LeverageKind::PcBad, LeverageKind::OcGood,
                 LeverageKind::OcBad})
    if (name == to_string(k)) return k;
  throw Error(ErrorCode::SpecInvalid, "unknown leverage kind '" + name + "'");
}

void validate(const SimulationSpec& spec) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::SpecInvalid, msg); };
  if (spec.d < 1) fail("d must be positive");
  if (spec.n <= 2 * spec.d) fail("n must exceed 2d");
  if (spec.m_true < 1 || spec.m_true > spec.p) fail("m_true must lie in [1, p]");
  if (!(spec.c > 0.0)) fail("signal-to-noise ratio c must be positive");
  if (!(spec.eps_leverage >= 0.0 && spec.eps_leverage < 1.0)) fail("eps_leverage must lie in [0, 1)");
  if (!(spec.eps_vertical >= 0.0 && spec.eps_vertical < 1.0)) fail("eps_vertical must lie in [0, 1)");
  if (!(spec.eps_leverage + spec.eps_vertical < 0.5)) fail("eps_leverage + eps_vertical must be below 0.5");
  if (spec.leverage_kind == LeverageKind::None && spec.eps_leverage > 0.0)
    fail("eps_leverage > 0 needs a leverage kind");
}

SimulatedDataset generate(const SimulationSpec& spec, std::uint64_t replicate) {
  validate(spec);
  const Index n = spec.n;
  const Index p = spec.p;
  const Index d = spec.d;

  SimulatedDataset data;
  data.labels.assign(static_cast<std::size_t>(n), TrueLabel::Regular);

  // Contaminated rows: a random permutation, first the leverage rows, then the
  // vertical outliers, so the two sets are disjoint.
  const auto n_lev = static_cast<Index>(std::lround(spec.eps_leverage * static_cast<double>(n)));
  const auto n_vert = static_cast<Index>(std::lround(spec.eps_vertical * static_cast<double>(n)));
  {
    CounterRng rng(purpose_key(spec, replicate, kRows));
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < n_lev + n_vert; ++i) {
      const Index j = i + rng.uniform_index(n - i);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    TrueLabel lev = TrueLabel::Regular;
    switch (spec.leverage_kind) {
      case LeverageKind::None: break;
      case LeverageKind::PcGood: lev = TrueLabel::PcGood; break;
      case LeverageKind::PcBad: lev = TrueLabel::PcBad; break;
      case LeverageKind::OcGood: lev = TrueLabel::OcGood; break;
      case LeverageKind::OcBad: lev = TrueLabel::OcBad; break;
    }
    for (Index i = 0; i < n_lev; ++i) data.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = lev;
    for (Index i = n_lev; i < n_lev + n_vert; ++i)
      data.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = TrueLabel::Vertical;
  }

  {
    CounterRng rng(purpose_key(spec, replicate, kZ));
    data.Z = normal_matrix(rng, n, d);
  }
  {
    CounterRng rng(purpose_key(spec, replicate, kPc));
    for (Index i = 0; i < n; ++i) {
      const TrueLabel l = data.labels[static_cast<std::size_t>(i)];
      if (l != TrueLabel::PcGood && l != TrueLabel::PcBad) continue;
      for (Index k = 0; k < d; ++k) data.Z(i, k) = 5.0 + rng.normal();
    }
  }
  Matrix B;
  {
    CounterRng rng(purpose_key(spec, replicate, kB));
    B = normal_matrix(rng, p, d);
  }
  {
    CounterRng rng(purpose_key(spec, replicate, kXTilde));
    data.X = normal_matrix(rng, n, p);
  }
  data.X.noalias() += data.Z * B.transpose();
  {
    CounterRng rng(purpose_key(spec, replicate, kOc));
    const auto n_shift = static_cast<Index>(std::lround(0.2 * static_cast<double>(p)));
    for (Index i = 0; i < n; ++i) {
      const TrueLabel l = data.labels[static_cast<std::size_t>(i)];
      if (l != TrueLabel::OcGood && l != TrueLabel::OcBad) continue;
      for (Index j = 0; j < p; ++j) data.X(i, j) = (j < n_shift ? 10.0 : 0.0) + rng.normal();
    }
  }

  data.theta0 = Vector::Zero(p);
  {
    CounterRng rng(purpose_key(spec, replicate, kTheta));
    const double nd = static_cast<double>(n);
    const double floor_mag = 4.0 / std::sqrt(nd) * std::log(nd);
    for (Index j = 0; j < spec.m_true; ++j) {
      const bool flip = rng.uniform() < 0.4;
      const double mag = floor_mag + std::abs(rng.normal());
      data.theta0(j) = flip ? -mag : mag;
      data.true_model.push_back(j);
    }
  }

  const Vector signal = data.X * data.theta0;
  {
    std::vector<double> clean;
    for (Index i = 0; i < n; ++i)
      if (!is_leverage(data.labels[static_cast<std::size_t>(i)])) clean.push_back(signal(i));
    double mean = 0.0;
    for (double v : clean) mean += v;
    mean /= static_cast<double>(clean.size());
    double ss = 0.0;
    for (double v : clean) ss += (v - mean) * (v - mean);
    data.sigma_eps = std::sqrt(ss / static_cast<double>(clean.size() - 1) / spec.c);
  }
  const Vector alpha0 = Vector::Constant(d, 0.8 * data.sigma_eps * std::sqrt(2.0));
  {
    CounterRng rng(purpose_key(spec, replicate, kEps));
    data.errors = data.Z * alpha0;
    for (Index i = 0; i < n; ++i) data.errors(i) += 0.6 * data.sigma_eps * rng.normal();
  }
  data.y = signal + data.errors;

  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    if (data.labels[static_cast<std::size_t>(i)] != TrueLabel::Regular) continue;
    ymin = std::min(ymin, data.y(i));
    ymax = std::max(ymax, data.y(i));
  }
  const double mid = 0.5 * (ymin + ymax);
  {
    CounterRng rng(purpose_key(spec, replicate, kYOut));
    for (Index i = 0; i < n; ++i) {
      const TrueLabel l = data.labels[static_cast<std::size_t>(i)];
      if (l != TrueLabel::Vertical && l != TrueLabel::PcBad && l != TrueLabel::OcBad) continue;
      const double target = data.y(i) <= mid ? ymax : ymin;
      data.y(i) = target + rng.normal();
    }
  }
  return data;
}

std::vector<Index> minimal_model_size(const std::vector<Index>& order, const IndexSet& true_model) {
  std::vector<Index> out;
  out.reserve(true_model.size());
  std::size_t found = 0;
  for (std::size_t k = 0; k < order.size() && found < true_model.size(); ++k) {
    if (std::binary_search(true_model.begin(), true_model.end(), order[k])) {
      ++found;
      out.push_back(static_cast<Index>(k + 1));
    }
  }
  if (found < true_model.size()) throw Error(ErrorCode::TrueModelNotInPath, "path does not contain every true predictor");
  return out;
}

ReplicateResult run_replicate(const SimulationSpec& spec, const ExperimentOptions& options, std::uint64_t replicate) {
  const auto t0 = std::chrono::steady_clock::now();
  ReplicateResult res;
  res.replicate = replicate;
  try {
    const SimulatedDataset data = generate(spec, replicate);
    const std::uint64_t method_seed = purpose_key(spec, replicate, kMethod);
    for (ScreeningMethod method : options.methods) {
      ScreeningOptions sopt;
      sopt.method = method;
      sopt.d = options.d;
      if (method == ScreeningMethod::Fpsis && !sopt.d && options.fpsis_true_d) sopt.d = spec.d;
      sopt.d_max = options.d_max;
      sopt.seed = method_seed;
      sopt.threads = 1;
      const SolutionPath path = screen(data.X, data.y, sopt);
      res.mms[method] = minimal_model_size(path.order, data.true_model);
      res.d_hat[method] = path.d;
      if (method != ScreeningMethod::Rfpsis || options.criteria.empty()) continue;

      const Index k_max = options.k_max > 0 ? options.k_max : default_k_max(spec.n, spec.p);
      const PathRefits refits = refit_path(path, std::min(k_max, static_cast<Index>(path.i2.size()) / 2), method_seed);
      for (Criterion crit : options.criteria) {
        const CriterionValue sel = select_model(path, refits, crit, spec.n, spec.p);
        Index tp = 0;
        for (Index j : sel.model)
          if (std::binary_search(data.true_model.begin(), data.true_model.end(), j)) ++tp;
        res.tp[crit] = tp;
        res.fp[crit] = static_cast<Index>(sel.model.size()) - tp;
        res.selected_size[crit] = static_cast<Index>(sel.model.size());
      }
    }
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

void summarize(SimulationReport& report, const ExperimentOptions& options) {
  report.mms.clear();
  report.criteria.clear();
  const auto m_true = static_cast<std::size_t>(report.spec.m_true);
  for (ScreeningMethod method : options.methods) {
    for (std::size_t m = 0; m < m_true; ++m) {
      std::vector<double> values;
      for (const auto& r : report.replicates) {
        if (r.failed) continue;
        auto it = r.mms.find(method);
        if (it != r.mms.end()) values.push_back(static_cast<double>(it->second[m]));
      }
      if (values.empty()) continue;
      report.mms.push_back({method, static_cast<Index>(m + 1), quantile(values, 0.5), quantile(values, 0.95)});
    }
  }
  for (Criterion crit : options.criteria) {
    double tp = 0.0;
    double fp = 0.0;
    double count = 0.0;
    for (const auto& r : report.replicates) {
      if (r.failed || !r.tp.count(crit)) continue;
      tp += static_cast<double>(r.tp.at(crit));
      fp += static_cast<double>(r.fp.at(crit));
      count += 1.0;
    }
    if (count > 0.0) report.criteria.push_back({crit, tp / count, fp / count});
  }
}

SimulationReport run_experiment(const SimulationSpec& spec, const ExperimentOptions& options) {
  validate(spec);
  if (options.n_replicates < 1) throw Error(ErrorCode::PreconditionViolated, "n_replicates must be at least 1");
  SimulationReport report;
  report.spec = spec;
  report.replicates.resize(static_cast<std::size_t>(options.n_replicates));
  parallel_for(report.replicates.size(), options.threads,
               [&](std::size_t r) { report.replicates[r] = run_replicate(spec, options, r); });
  summarize(report, options);
  return report;
}

}  // namespace rfps
