#pragma once

// SweepResult persistence: a versioned JSON document and a flat CSV export.
// Non-finite numbers (diverged GD runs) are written as the strings "inf",
// "-inf" and "nan" because JSON has no literal for them.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ddlab/sweep.hpp"

namespace ddlab {

namespace io_detail {

using nlohmann::json;

inline json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double to_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw json::type_error::create(302, "expected a number", &j);
}

inline json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }
inline std::optional<double> to_opt_num(const json& j) {
  if (j.is_null()) return std::nullopt;
  return to_num(j);
}

template <class T>
json num_array(const std::vector<T>& v) {
  json a = json::array();
  for (const auto& x : v) {
    if constexpr (std::is_floating_point_v<T>)
      a.push_back(num(x));
    else
      a.push_back(x);
  }
  return a;
}

template <class T>
std::vector<T> to_array(const json& j) {
  std::vector<T> out;
  for (const auto& x : j) {
    if constexpr (std::is_floating_point_v<T>)
      out.push_back(to_num(x));
    else
      out.push_back(x.get<T>());
  }
  return out;
}

inline json metrics_json(const Metrics& m) {
  return {{"mse", num(m.mse)}, {"classification_error", opt_num(m.classification_error)}};
}
inline Metrics metrics_from(const json& j) {
  return {to_num(j.at("mse")), to_opt_num(j.at("classification_error"))};
}

inline json stat_json(const std::optional<Stat>& s) {
  if (!s) return nullptr;
  return {{"mean", num(s->mean)}, {"std", num(s->std)}};
}
inline std::optional<Stat> stat_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return Stat{to_num(j.at("mean")), to_num(j.at("std"))};
}

inline json solver_json(const SolverSpec& s) {
  return {{"method", std::string(to_string(s.method))},
          {"ridge_lambda", num(s.ridge_lambda)},
          {"rank_tol", num(s.rank_tol)},
          {"step_size", num(s.step_size)},
          {"step_scale", s.step_scale == StepScale::absolute ? "absolute" : "spectral"},
          {"num_steps", s.num_steps},
          {"schedule", s.schedule.kind == ScheduleKind::constant ? "constant" : "inverse-sqrt"},
          {"schedule_period", s.schedule.period}};
}

inline SolverSpec solver_from(const json& j) {
  SolverSpec s;
  auto m = parse_solver_method(j.at("method").get<std::string>());
  if (!m) throw json::other_error::create(501, "unknown solver method", &j);
  s.method = *m;
  s.ridge_lambda = to_num(j.at("ridge_lambda"));
  s.rank_tol = to_num(j.at("rank_tol"));
  s.step_size = to_num(j.at("step_size"));
  s.step_scale = j.at("step_scale").get<std::string>() == "spectral" ? StepScale::spectral : StepScale::absolute;
  s.num_steps = j.at("num_steps").get<std::int64_t>();
  s.schedule.kind =
      j.at("schedule").get<std::string>() == "inverse-sqrt" ? ScheduleKind::inverse_sqrt : ScheduleKind::constant;
  s.schedule.period = j.at("schedule_period").get<std::int64_t>();
  return s;
}

inline json spec_json(const SweepSpec& s) {
  return {{"model_dims", num_array(s.model_dims)},
          {"sample_sizes", num_array(s.sample_sizes)},
          {"noise_levels", num_array(s.noise_levels)},
          {"step_counts", num_array(s.step_counts)},
          {"ridge_lambdas", num_array(s.ridge_lambdas)},
          {"dataset", s.dataset},
          {"synthetic",
           {{"input_dim", s.synthetic.input_dim},
            {"num_classes", s.synthetic.num_classes},
            {"teacher_dim", s.synthetic.teacher_dim},
            {"teacher_seed", s.synthetic.teacher_seed}}},
          {"variance", num(s.variance)},
          {"mode", std::string(to_string(s.mode))},
          {"solver", solver_json(s.solver)},
          {"test_size", s.test_size},
          {"replicates", s.replicates},
          {"base_seed", s.base_seed},
          {"ensemble_k", s.ensemble_k},
          {"ensemble_independent_noise", s.ensemble_independent_noise},
          {"ensemble_shared_features", s.ensemble_shared_features},
          {"share_replicate_seeds", s.share_replicate_seeds},
          {"report_noisy_test", s.report_noisy_test},
          {"emc",
           {{"enabled", s.emc.enabled},
            {"epsilon", num(s.emc.epsilon)},
            {"n_max", s.emc.n_max},
            {"trials", s.emc.trials},
            {"metric", s.emc.metric.kind == ErrorMetric::Kind::classification ? "classification" : "mse-threshold"},
            {"tau", num(s.emc.metric.tau)}}}};
}

inline SweepSpec spec_from(const json& j) {
  SweepSpec s;
  s.model_dims = to_array<Eigen::Index>(j.at("model_dims"));
  s.sample_sizes = to_array<Eigen::Index>(j.at("sample_sizes"));
  s.noise_levels = to_array<double>(j.at("noise_levels"));
  s.step_counts = to_array<std::int64_t>(j.at("step_counts"));
  s.ridge_lambdas = to_array<double>(j.at("ridge_lambdas"));
  s.dataset = j.at("dataset").get<std::string>();
  const auto& syn = j.at("synthetic");
  s.synthetic.input_dim = syn.at("input_dim").get<Eigen::Index>();
  s.synthetic.num_classes = syn.at("num_classes").get<int>();
  s.synthetic.teacher_dim = syn.at("teacher_dim").get<Eigen::Index>();
  s.synthetic.teacher_seed = syn.at("teacher_seed").get<std::uint64_t>();
  s.variance = to_num(j.at("variance"));
  auto mode = parse_feature_mode(j.at("mode").get<std::string>());
  if (!mode) throw json::other_error::create(501, "unknown feature mode", &j);
  s.mode = *mode;
  s.solver = solver_from(j.at("solver"));
  s.test_size = j.at("test_size").get<Eigen::Index>();
  s.replicates = j.at("replicates").get<int>();
  s.base_seed = j.at("base_seed").get<std::uint64_t>();
  s.ensemble_k = j.at("ensemble_k").get<int>();
  s.ensemble_independent_noise = j.at("ensemble_independent_noise").get<bool>();
  s.ensemble_shared_features = j.at("ensemble_shared_features").get<bool>();
  s.share_replicate_seeds = j.at("share_replicate_seeds").get<bool>();
  s.report_noisy_test = j.at("report_noisy_test").get<bool>();
  const auto& e = j.at("emc");
  s.emc.enabled = e.at("enabled").get<bool>();
  s.emc.epsilon = to_num(e.at("epsilon"));
  s.emc.n_max = e.at("n_max").get<Eigen::Index>();
  s.emc.trials = e.at("trials").get<int>();
  s.emc.metric.kind = e.at("metric").get<std::string>() == "mse-threshold" ? ErrorMetric::Kind::mse_threshold
                                                                           : ErrorMetric::Kind::classification;
  s.emc.metric.tau = to_num(e.at("tau"));
  return s;
}

inline json emc_json(const EMCEstimate& e) {
  json curve = json::array();
  for (const auto& p : e.curve) curve.push_back({{"n", p.n}, {"mean", num(p.mean)}, {"std_error", num(p.std_error)}});
  return {{"n_star", e.n_star},
          {"epsilon", num(e.epsilon)},
          {"trials_per_n", e.trials_per_n},
          {"n_lo", e.n_lo ? json(*e.n_lo) : json(nullptr)},
          {"n_hi", e.n_hi ? json(*e.n_hi) : json(nullptr)},
          {"curve", curve},
          {"monotonicity_flag", e.monotonicity_flag},
          {"censored", e.censored}};
}

inline EMCEstimate emc_from(const json& j) {
  EMCEstimate e;
  e.n_star = j.at("n_star").get<Eigen::Index>();
  e.epsilon = to_num(j.at("epsilon"));
  e.trials_per_n = j.at("trials_per_n").get<int>();
  if (!j.at("n_lo").is_null()) e.n_lo = j.at("n_lo").get<Eigen::Index>();
  if (!j.at("n_hi").is_null()) e.n_hi = j.at("n_hi").get<Eigen::Index>();
  for (const auto& p : j.at("curve"))
    e.curve.push_back({p.at("n").get<Eigen::Index>(), to_num(p.at("mean")), to_num(p.at("std_error"))});
  e.monotonicity_flag = j.at("monotonicity_flag").get<bool>();
  e.censored = j.at("censored").get<bool>();
  return e;
}

}  // namespace io_detail

inline nlohmann::json to_json(const SweepResult& r) {
  using namespace io_detail;
  json cells = json::array();
  for (const auto& c : r.cells) {
    json reps = json::array();
    for (const auto& m : c.replicates) {
      json rj = {{"train", metrics_json(m.train)}, {"test", metrics_json(m.test)}};
      if (m.noisy_test) rj["noisy_test"] = metrics_json(*m.noisy_test);
      reps.push_back(std::move(rj));
    }
    json cj = {{"model_dim", c.coord.model_dim},
               {"sample_size", c.coord.sample_size},
               {"noise", num(c.coord.noise)},
               {"steps", c.coord.steps},
               {"ridge_lambda", num(c.coord.ridge_lambda)},
               {"replicates", reps},
               {"summary",
                {{"train_mse", stat_json(c.summary.train_mse)},
                 {"train_err", stat_json(c.summary.train_err)},
                 {"test_mse", stat_json(c.summary.test_mse)},
                 {"test_err", stat_json(c.summary.test_err)},
                 {"noisy_test_mse", stat_json(c.summary.noisy_test_mse)},
                 {"noisy_test_err", stat_json(c.summary.noisy_test_err)}}}};
    if (c.emc) cj["emc"] = emc_json(*c.emc);
    cells.push_back(std::move(cj));
  }
  return {{"schema_version", r.schema_version},
          {"experiment", std::string(to_string(r.experiment))},
          {"spec", spec_json(r.spec)},
          {"cells", cells}};
}

/// Throws FormatError on malformed documents and on schema versions newer
/// than this build understands.
inline SweepResult from_json(const nlohmann::json& j) {
  using namespace io_detail;
  try {
    SweepResult r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version > kSchemaVersion)
      throw FormatError("result schema_version " + std::to_string(r.schema_version) + " is newer than supported " +
                            std::to_string(kSchemaVersion),
                        0);
    if (r.schema_version < 1) throw FormatError("invalid schema_version", 0);
    auto e = parse_experiment(j.at("experiment").get<std::string>());
    if (!e) throw FormatError("unknown experiment name", 0);
    r.experiment = *e;
    r.spec = spec_from(j.at("spec"));
    for (const auto& cj : j.at("cells")) {
      Cell c;
      c.coord = {cj.at("model_dim").get<Eigen::Index>(), cj.at("sample_size").get<Eigen::Index>(),
                 to_num(cj.at("noise")), cj.at("steps").get<std::int64_t>(), to_num(cj.at("ridge_lambda"))};
      for (const auto& rj : cj.at("replicates")) {
        ReplicateMetrics m{metrics_from(rj.at("train")), metrics_from(rj.at("test")), std::nullopt};
        if (rj.contains("noisy_test")) m.noisy_test = metrics_from(rj.at("noisy_test"));
        c.replicates.push_back(m);
      }
      const auto& s = cj.at("summary");
      c.summary.train_mse = stat_from(s.at("train_mse")).value_or(Stat{});
      c.summary.train_err = stat_from(s.at("train_err"));
      c.summary.test_mse = stat_from(s.at("test_mse")).value_or(Stat{});
      c.summary.test_err = stat_from(s.at("test_err"));
      c.summary.noisy_test_mse = stat_from(s.at("noisy_test_mse"));
      c.summary.noisy_test_err = stat_from(s.at("noisy_test_err"));
      if (cj.contains("emc")) c.emc = emc_from(cj.at("emc"));
      r.cells.push_back(std::move(c));
    }
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed result document: ") + ex.what(), 0);
  }
}

inline void persist(const SweepResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(r).dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

inline SweepResult load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open result file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& ex) {
    throw FormatError(path.string() + ": " + ex.what(), ex.byte);
  }
  return from_json(j);
}

namespace io_detail {

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : "NA"; }

}  // namespace io_detail

/// One row per cell x replicate.
inline std::string to_csv(const SweepResult& r) {
  using io_detail::fmt_num;
  using io_detail::fmt_opt;
  std::ostringstream os;
  os << "model_dim,sample_size,noise,steps,ridge_lambda,replicate,train_mse,train_err,test_mse,test_err\n";
  for (const auto& c : r.cells)
    for (std::size_t i = 0; i < c.replicates.size(); ++i) {
      const auto& m = c.replicates[i];
      os << c.coord.model_dim << ',' << c.coord.sample_size << ',' << fmt_num(c.coord.noise) << ','
         << c.coord.steps << ',' << fmt_num(c.coord.ridge_lambda) << ',' << i << ',' << fmt_num(m.train.mse) << ','
         << fmt_opt(m.train.classification_error) << ',' << fmt_num(m.test.mse) << ','
         << fmt_opt(m.test.classification_error) << '\n';
    }
  return os.str();
}

inline void write_csv(const SweepResult& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_csv(r);
}

}  // namespace ddlab
