#include "CLI11.hpp"
#include "json.hpp"

#include "rfps/csv.hpp"
#include "rfps/error.hpp"
#include "rfps/factor_model.hpp"
#include "rfps/model_selection.hpp"
#include "rfps/parallel.hpp"
#include "rfps/rng.hpp"
#include "rfps/robust_stats.hpp"
#include "rfps/screening.hpp"
#include "rfps/simulation.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace {

using json = nlohmann::ordered_json;
using rfps::Error;
using rfps::ErrorCode;
using rfps::Index;

std::string stage = "startup";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return key;
}

// Options are held as strings so values from the command line and from a
// config file go through the same conversion.
class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& description,
          const std::vector<std::pair<std::string, std::string>>& keys)
      : sub_(app.add_subcommand(name, description)) {
    for (const auto& [key, help] : keys) {
      options_[key] = sub_->add_option("--" + key, values_[key], help);
    }
    sub_->add_option("--config", config_path_, "Flat key=value file; command-line flags win");
  }

  CLI::App* app() const { return sub_; }

  void merge_config() {
    if (config_path_.empty()) return;
    std::ifstream in(config_path_);
    if (!in) throw Error(ErrorCode::Io, "cannot open config '" + config_path_ + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      const std::string where = config_path_ + " line " + std::to_string(line_no);
      if (eq == std::string::npos) throw Error(ErrorCode::Parse, where + ": expected key=value");
      const std::string key = normalize_key(trim(line.substr(0, eq)));
      const auto it = options_.find(key);
      if (it == options_.end()) throw Error(ErrorCode::Parse, where + ": unknown key '" + key + "'");
      if (it->second->count() == 0) {
        values_[key] = trim(line.substr(eq + 1));
        from_config_.insert(key);
      }
    }
  }

  bool has(const std::string& key) const {
    return options_.at(key)->count() > 0 || from_config_.count(key) > 0;
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    return has(key) ? values_.at(key) : fallback;
  }

 private:
  CLI::App* sub_;
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> options_;
  std::set<std::string> from_config_;
  std::string config_path_;
};

template <class T>
T parse_integer(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw Error(ErrorCode::Parse, "--" + key + ": '" + text + "' is not a valid integer");
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  double value = 0.0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(value))
    throw Error(ErrorCode::Parse, "--" + key + ": '" + text + "' is not a valid number");
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',' || c == ';') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

std::uint64_t resolve_seed(const Command& cmd) {
  if (cmd.has("seed")) return parse_integer<std::uint64_t>("seed", cmd.get("seed", "0"));
  if (const char* env = std::getenv("RFPS_SEED")) return parse_integer<std::uint64_t>("seed (RFPS_SEED)", env);
  return 0;
}

int resolve_threads_flag(const Command& cmd) {
  const int t = parse_integer<int>("threads", cmd.get("threads", "0"));
  if (t < 0) throw Error(ErrorCode::Parse, "--threads must be nonnegative");
  return rfps::resolve_threads(t);
}

std::optional<Index> parse_d(const Command& cmd) {
  const std::string text = cmd.get("d", "auto");
  if (text == "auto") return std::nullopt;
  const auto d = parse_integer<Index>("d", text);
  if (d < 0) throw Error(ErrorCode::Parse, "--d must be 'auto' or a nonnegative integer");
  return d;
}

std::vector<rfps::Criterion> parse_criteria(const std::string& text) {
  if (text == "all") return {rfps::kAllCriteria.begin(), rfps::kAllCriteria.end()};
  std::vector<rfps::Criterion> out;
  for (const auto& name : split_list(text)) out.push_back(rfps::parse_criterion(name));
  if (out.empty()) throw Error(ErrorCode::Parse, "--criteria is empty");
  return out;
}

std::filesystem::path output_dir(const Command& cmd) {
  const std::filesystem::path dir = cmd.get("out", ".");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw Error(ErrorCode::Io, "cannot create output directory '" + dir.string() + "'");
  return dir;
}

void write_json(const std::filesystem::path& file, const json& doc) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + file.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write to '" + file.string() + "' failed");
}

std::string fmt(double v) { return rfps::format_double(v); }

struct Dataset {
  rfps::Matrix x;
  rfps::Vector y;
  std::vector<std::string> names;
};

Dataset load(const Command& cmd, bool need_response) {
  stage = "reading input";
  if (!cmd.has("input")) throw Error(ErrorCode::Parse, "--input is required");
  const rfps::CsvTable table = rfps::read_csv(cmd.get("input", ""));
  Dataset data;
  Index response = -1;
  if (need_response || cmd.has("response")) response = table.column(cmd.get("response", "y"));
  std::vector<Index> cols;
  for (Index j = 0; j < static_cast<Index>(table.header.size()); ++j) {
    if (j == response) continue;
    cols.push_back(j);
    data.names.push_back(table.header[static_cast<std::size_t>(j)]);
  }
  if (table.data.rows() == 0) throw Error(ErrorCode::Parse, cmd.get("input", "") + ": no data rows");
  if (cols.empty()) throw Error(ErrorCode::Parse, cmd.get("input", "") + ": no predictor columns");
  data.x.resize(table.data.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) data.x.col(static_cast<Index>(j)) = table.data.col(cols[j]);
  if (response >= 0) data.y = table.data.col(response);
  return data;
}

rfps::ScreeningOptions screening_options(const Command& cmd) {
  rfps::ScreeningOptions o;
  o.method = rfps::parse_method(cmd.get("method", "rfpsis"));
  o.d = parse_d(cmd);
  o.d_max = parse_integer<Index>("d-max", cmd.get("d-max", "10"));
  o.h_frac = parse_real("h-frac", cmd.get("h-frac", "0"));
  if (o.h_frac < 0.0 || o.h_frac >= 1.0) throw Error(ErrorCode::Parse, "--h-frac must lie in [0, 1)");
  o.seed = resolve_seed(cmd);
  o.threads = resolve_threads_flag(cmd);
  return o;
}

json mu_summary(const rfps::Vector& mu) {
  return {{"min", mu.minCoeff()},
          {"max", mu.maxCoeff()},
          {"mean", mu.mean()},
          {"median", rfps::median(rfps::as_span(mu))}};
}

json factor_json(const rfps::SolutionPath& path, Index n, Index p) {
  json doc;
  doc["method"] = rfps::to_string(path.method);
  doc["n"] = n;
  doc["p"] = p;
  doc["d"] = path.d;
  doc["i1_size"] = path.i1.size();
  doc["i2_size"] = path.i2.size();
  if (path.factor) {
    const rfps::FactorFit& f = *path.factor;
    doc["h"] = f.h;
    doc["lambda_opt"] = f.lambda_opt;
    doc["od_cutoff"] = f.od_cutoff;
    doc["sd_cutoff"] = f.sd_cutoff;
    doc["mu"] = mu_summary(f.mu);
    doc["lts_objective"] = f.lts.objective;
    doc["flag_counts"] = {{"regular", f.rows_with(rfps::ObservationFlag::Regular).size()},
                          {"pc", f.rows_with(rfps::ObservationFlag::PcOutlier).size()},
                          {"oc", f.rows_with(rfps::ObservationFlag::OcOutlier).size()}};
    doc["pc_criterion"] = f.pc_criterion;
  }
  doc["warnings"] = path.warnings;
  return doc;
}

void write_path(const std::filesystem::path& dir, const rfps::SolutionPath& path, const std::vector<std::string>& names) {
  rfps::CsvWriter w((dir / "path.csv").string());
  w.row({"rank", "predictor", "slope"});
  for (std::size_t k = 0; k < path.order.size(); ++k) {
    const Index j = path.order[k];
    w.row({std::to_string(k + 1), names[static_cast<std::size_t>(j)], fmt(path.slopes(j))});
  }
  w.close();
}

void write_outliers(const std::filesystem::path& dir, const rfps::SolutionPath& path) {
  rfps::CsvWriter w((dir / "outliers.csv").string());
  w.row({"index", "label", "od", "sd", "t"});
  if (path.report) {
    const rfps::OutlierReport& r = *path.report;
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
      const auto ii = static_cast<Index>(i);
      w.row({std::to_string(i + 1), rfps::to_string(r.labels[i]), fmt(r.od(ii)), fmt(r.sd(ii)), fmt(r.t(ii))});
    }
  }
  w.close();
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "rfps: warning: " << w << '\n';
}

int cmd_screen(const Command& cmd) {
  const Dataset data = load(cmd, true);
  const rfps::ScreeningOptions opts = screening_options(cmd);
  const auto dir = output_dir(cmd);
  stage = "screening";
  std::cerr << "rfps: screening " << data.x.rows() << " x " << data.x.cols() << " with "
            << rfps::to_string(opts.method) << '\n';
  const rfps::SolutionPath path = rfps::screen(data.x, data.y, opts);
  print_warnings(path.warnings);
  stage = "writing output";
  write_path(dir, path, data.names);
  write_outliers(dir, path);
  write_json(dir / "factor.json", factor_json(path, data.x.rows(), data.x.cols()));
  return 0;
}

std::string join_names(const std::vector<Index>& model, const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (i) out += ';';
    out += names[static_cast<std::size_t>(model[i])];
  }
  return out;
}

std::string join_values(const rfps::Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(v(i));
  }
  return out;
}

int cmd_select(const Command& cmd) {
  const Dataset data = load(cmd, true);
  const rfps::ScreeningOptions opts = screening_options(cmd);
  const std::vector<rfps::Criterion> criteria = parse_criteria(cmd.get("criteria", "all"));
  const Index n = data.x.rows();
  const Index p = data.x.cols();
  stage = "checking options";
  std::optional<Index> k_max;
  if (cmd.has("k-max")) k_max = parse_integer<Index>("k-max", cmd.get("k-max", "0"));
  if (k_max && (*k_max < 1 || *k_max > std::min(n / 2, p)))
    throw Error(ErrorCode::PreconditionViolated, "k_max = " + std::to_string(*k_max) +
                                                     " must lie in [1, min(n/2, p)] = [1, " +
                                                     std::to_string(std::min(n / 2, p)) + "]");
  const auto dir = output_dir(cmd);

  stage = "screening";
  const rfps::SolutionPath path = rfps::screen(data.x, data.y, opts);
  print_warnings(path.warnings);

  stage = "model selection";
  const Index usable = std::min(static_cast<Index>(path.i2.size()) / 2, p);
  const Index k = k_max ? *k_max : std::min(rfps::default_k_max(n, p), usable);
  const rfps::PathRefits refits = rfps::refit_path(path, k, rfps::stream_key(opts.seed, 0x53454C));
  print_warnings(refits.warnings);

  stage = "writing output";
  rfps::CsvWriter w((dir / "selection.csv").string());
  w.row({"criterion", "size", "model", "coefficients", "intercept", "value", "wrss", "k", "l", "perfect_fit"});
  for (rfps::Criterion c : criteria) {
    const rfps::CriterionValue sel = rfps::select_model(path, refits, c, n, p);
    w.row({rfps::to_string(c), std::to_string(sel.model.size()), join_names(sel.model, data.names),
           join_values(sel.coefs), fmt(sel.intercept), fmt(sel.value), fmt(sel.wrss), std::to_string(sel.k),
           std::to_string(sel.l), sel.perfect_fit ? "1" : "0"});
  }
  w.close();

  rfps::CsvWriter t((dir / "criteria.csv").string());
  std::vector<std::string> header = {"k", "wrss"};
  for (rfps::Criterion c : rfps::kAllCriteria) header.emplace_back(rfps::to_string(c));
  t.row(header);
  for (const auto& row : rfps::criterion_table(path, refits, n, p)) {
    std::vector<std::string> fields = {std::to_string(row.k), fmt(row.wrss)};
    for (double v : row.values) fields.push_back(fmt(v));
    t.row(fields);
  }
  t.close();
  write_path(dir, path, data.names);
  return 0;
}

int cmd_simulate(const Command& cmd) {
  stage = "reading spec";
  rfps::SimulationSpec spec;
  spec.n = parse_integer<Index>("n", cmd.get("n", "200"));
  spec.p = parse_integer<Index>("p", cmd.get("p", "1000"));
  spec.d = parse_integer<Index>("d", cmd.get("d", "2"));
  spec.c = parse_real("c", cmd.get("c", "5"));
  spec.eps_leverage = parse_real("eps-leverage", cmd.get("eps-leverage", "0"));
  spec.eps_vertical = parse_real("eps-vertical", cmd.get("eps-vertical", "0"));
  spec.leverage_kind = rfps::parse_leverage_kind(cmd.get("leverage", "none"));
  spec.m_true = parse_integer<Index>("m-true", cmd.get("m-true", "8"));
  spec.seed = resolve_seed(cmd);
  rfps::validate(spec);

  rfps::ExperimentOptions opts;
  opts.n_replicates = parse_integer<Index>("replicates", cmd.get("replicates", "1"));
  if (opts.n_replicates < 1) throw Error(ErrorCode::SpecInvalid, "replicates must be at least 1");
  opts.methods.clear();
  for (const auto& name : split_list(cmd.get("methods", "sis,fpsis,rfpsis"))) opts.methods.push_back(rfps::parse_method(name));
  if (opts.methods.empty()) throw Error(ErrorCode::SpecInvalid, "methods is empty");
  const std::string fd = cmd.get("fpsis-d", "true");
  if (fd != "true" && fd != "auto") throw Error(ErrorCode::Parse, "--fpsis-d must be 'true' or 'auto'");
  opts.fpsis_true_d = fd == "true";
  opts.d_max = parse_integer<Index>("d-max", cmd.get("d-max", "10"));
  if (cmd.has("criteria")) opts.criteria = parse_criteria(cmd.get("criteria", "all"));
  opts.k_max = parse_integer<Index>("k-max", cmd.get("k-max", "0"));
  opts.threads = resolve_threads_flag(cmd);
  const auto dir = output_dir(cmd);

  stage = "simulation";
  std::cerr << "rfps: simulating " << opts.n_replicates << " replicate(s) on " << opts.threads << " thread(s)\n";
  const rfps::SimulationReport report = rfps::run_experiment(spec, opts);

  stage = "writing output";
  rfps::CsvWriter summary((dir / "report.csv").string());
  summary.row({"method", "m", "median", "q95"});
  for (const auto& s : report.mms)
    summary.row({rfps::to_string(s.method), std::to_string(s.m), fmt(s.median), fmt(s.q95)});
  summary.close();

  rfps::CsvWriter reps((dir / "replicates.csv").string());
  std::vector<std::string> header = {"replicate", "method", "failed", "d_hat"};
  for (Index m = 1; m <= spec.m_true; ++m) header.push_back("mms_" + std::to_string(m));
  header.emplace_back("error");
  reps.row(header);
  for (const auto& r : report.replicates) {
    for (rfps::ScreeningMethod method : opts.methods) {
      std::vector<std::string> fields = {std::to_string(r.replicate), rfps::to_string(method), r.failed ? "1" : "0"};
      const auto dh = r.d_hat.find(method);
      fields.push_back(dh == r.d_hat.end() ? "" : std::to_string(dh->second));
      const auto it = r.mms.find(method);
      for (Index m = 0; m < spec.m_true; ++m)
        fields.push_back(it == r.mms.end() ? "" : std::to_string(it->second[static_cast<std::size_t>(m)]));
      fields.push_back(r.error);
      reps.row(fields);
    }
  }
  reps.close();

  json doc;
  doc["spec"] = {{"n", spec.n},
                 {"p", spec.p},
                 {"d", spec.d},
                 {"c", spec.c},
                 {"eps_leverage", spec.eps_leverage},
                 {"eps_vertical", spec.eps_vertical},
                 {"leverage", rfps::to_string(spec.leverage_kind)},
                 {"m_true", spec.m_true},
                 {"seed", spec.seed}};
  json methods = json::array();
  for (auto m : opts.methods) methods.push_back(rfps::to_string(m));
  doc["options"] = {{"replicates", opts.n_replicates}, {"methods", methods}, {"d_max", opts.d_max},
                    {"fpsis_d", fd},                    {"k_max", opts.k_max}};
  json mms = json::array();
  for (const auto& s : report.mms)
    mms.push_back({{"method", rfps::to_string(s.method)}, {"m", s.m}, {"median", s.median}, {"q95", s.q95}});
  doc["mms"] = mms;

  if (!opts.criteria.empty()) {
    rfps::CsvWriter sel((dir / "selection.csv").string());
    sel.row({"replicate", "criterion", "size", "tp", "fp"});
    for (const auto& r : report.replicates)
      for (rfps::Criterion c : opts.criteria) {
        if (!r.tp.count(c)) continue;
        sel.row({std::to_string(r.replicate), rfps::to_string(c), std::to_string(r.selected_size.at(c)),
                 std::to_string(r.tp.at(c)), std::to_string(r.fp.at(c))});
      }
    sel.close();
    rfps::CsvWriter crit((dir / "criteria.csv").string());
    crit.row({"criterion", "mean_tp", "mean_fp"});
    json cs = json::array();
    for (const auto& c : report.criteria) {
      crit.row({rfps::to_string(c.criterion), fmt(c.mean_tp), fmt(c.mean_fp)});
      cs.push_back({{"criterion", rfps::to_string(c.criterion)}, {"mean_tp", c.mean_tp}, {"mean_fp", c.mean_fp}});
    }
    crit.close();
    doc["criteria"] = cs;
  }
  Index failed = 0;
  for (const auto& r : report.replicates) failed += r.failed ? 1 : 0;
  doc["failed_replicates"] = failed;
  write_json(dir / "report.json", doc);
  if (failed > 0) std::cerr << "rfps: warning: " << failed << " replicate(s) failed; see replicates.csv\n";
  return 0;
}

int cmd_diagnose(const Command& cmd) {
  const Dataset data = load(cmd, false);
  rfps::FactorOptions opts;
  opts.d = parse_d(cmd);
  opts.d_max = parse_integer<Index>("d-max", cmd.get("d-max", "10"));
  opts.h_frac = parse_real("h-frac", cmd.get("h-frac", "0"));
  if (opts.h_frac < 0.0 || opts.h_frac >= 1.0) throw Error(ErrorCode::Parse, "--h-frac must lie in [0, 1)");
  opts.seed = resolve_seed(cmd);
  opts.threads = resolve_threads_flag(cmd);
  const auto dir = output_dir(cmd);

  stage = "factor model";
  const rfps::Matrix xs = rfps::standardize_columns(data.x, rfps::ScaleEstimator::MedianQn);
  const rfps::FactorFit fit = rfps::fit_factor_model(xs, opts);

  stage = "writing output";
  rfps::CsvWriter w((dir / "diagnostics.csv").string());
  w.row({"index", "flag", "od", "transformed_od", "sd"});
  for (std::size_t i = 0; i < fit.flags.size(); ++i) {
    const auto ii = static_cast<Index>(i);
    w.row({std::to_string(i + 1), rfps::to_string(fit.flags[i]), fmt(fit.od(ii)), fmt(fit.transformed_od(ii)),
           fmt(fit.sd(ii))});
  }
  w.close();
  rfps::CsvWriter pc((dir / "pc.csv").string());
  pc.row({"d", "pc"});
  for (std::size_t d = 0; d < fit.pc_criterion.size(); ++d) pc.row({std::to_string(d + 1), fmt(fit.pc_criterion[d])});
  pc.close();

  json doc;
  doc["n"] = data.x.rows();
  doc["p"] = data.x.cols();
  doc["d"] = fit.d;
  doc["h"] = fit.h;
  doc["lambda_opt"] = fit.lambda_opt;
  doc["od_cutoff"] = fit.od_cutoff;
  doc["sd_cutoff"] = fit.sd_cutoff;
  doc["mu"] = mu_summary(fit.mu);
  doc["lts_objective"] = fit.lts.objective;
  doc["pc_criterion"] = fit.pc_criterion;
  write_json(dir / "factor.json", doc);
  return 0;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::Parse:
    case ErrorCode::PreconditionViolated:
    case ErrorCode::SpecInvalid: return 2;
    default: return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust factor profiled sure independence screening"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> data_keys = {
      {"input", "CSV file with a header row"},
      {"response", "Response column name (default y)"},
      {"method", "sis, fpsis or rfpsis (default rfpsis)"},
      {"d", "Factor dimension: auto or an integer"},
      {"d-max", "Largest dimension tried when d is auto (default 10)"},
      {"h-frac", "Raise the LTS subset size to floor(h_frac * n)"},
      {"seed", "Seed; RFPS_SEED is used when absent"},
      {"threads", "Worker threads (default: all cores)"},
      {"out", "Output directory (default .)"}};
  auto select_keys = data_keys;
  select_keys.push_back({"k-max", "Longest refitted path prefix"});
  select_keys.push_back({"criteria", "Comma-separated criteria or 'all'"});
  const std::vector<std::pair<std::string, std::string>> sim_keys = {
      {"n", "Observations"},
      {"p", "Predictors"},
      {"d", "Factors"},
      {"c", "Signal-to-noise ratio"},
      {"eps-leverage", "Leverage fraction"},
      {"eps-vertical", "Extra vertical-outlier fraction"},
      {"leverage", "none, pc_good, pc_bad, oc_good or oc_bad"},
      {"m-true", "True model size"},
      {"replicates", "Number of replicates"},
      {"methods", "Comma-separated screening methods"},
      {"fpsis-d", "FPSIS dimension: true (generating d) or auto"},
      {"d-max", "Largest dimension tried by RFPSIS"},
      {"criteria", "Criteria evaluated on the RFPSIS path"},
      {"k-max", "Longest refitted path prefix (0: default)"},
      {"seed", "Seed; RFPS_SEED is used when absent"},
      {"threads", "Worker threads (default: all cores)"},
      {"out", "Output directory (default .)"}};
  std::vector<std::pair<std::string, std::string>> diag_keys;
  for (const auto& kv : data_keys)
    if (kv.first != "method") diag_keys.push_back(kv);

  Command screen(app, "screen", "Screen predictors; writes path.csv, outliers.csv, factor.json", data_keys);
  Command select(app, "select", "Screen, refit and select a model; writes selection.csv, criteria.csv", select_keys);
  Command simulate(app, "simulate", "Run a simulation experiment; writes report.csv, replicates.csv, report.json",
                   sim_keys);
  Command diagnose(app, "diagnose", "Robust factor fit only; writes diagnostics.csv, pc.csv, factor.json", diag_keys);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (Command* cmd : {&screen, &select, &simulate, &diagnose}) {
      if (!cmd->app()->parsed()) continue;
      stage = "reading config";
      cmd->merge_config();
      if (cmd == &screen) return cmd_screen(*cmd);
      if (cmd == &select) return cmd_select(*cmd);
      if (cmd == &simulate) return cmd_simulate(*cmd);
      return cmd_diagnose(*cmd);
    }
  } catch (const Error& e) {
    std::cerr << "rfps: " << stage << ": " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rfps: " << stage << ": " << e.what() << '\n';
    return 3;
  }
  return 2;
}
