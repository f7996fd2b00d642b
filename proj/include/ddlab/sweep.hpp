#pragma once

// Experiment harness over the linear random-feature laboratory.
//
// Seeding. Every random draw in a sweep comes from
//   derive_seed(base_seed, {role_tag(role), replicate, ...coordinates})
// (see random.hpp for the mixing rule) with these roles:
//   "data"      replicate                      train samples (prefix-nested in n)
//   "test"      replicate                      held-out samples
//   "noise"     replicate, bits(p), member     train label noise
//   "test-noise" replicate, bits(p)            noisy-test labels (optional)
//   "features"  replicate, D, member           feature map
//   "emc"       (none)                         EMC trials for a cell
// replicate is forced to 0 when share_replicate_seeds is set; member is 0
// for single models and for ensembles with shared noise. Nothing depends on
// the order in which cells run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddlab/data.hpp"
#include "ddlab/emc.hpp"
#include "ddlab/features.hpp"
#include "ddlab/parallel.hpp"
#include "ddlab/random.hpp"
#include "ddlab/solver.hpp"
#include "ddlab/task.hpp"

namespace ddlab {

enum class Experiment { model, samples, epochs, ridge, grid, emc, ensemble };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::model: return "model";
    case Experiment::samples: return "samples";
    case Experiment::epochs: return "epochs";
    case Experiment::ridge: return "ridge";
    case Experiment::grid: return "grid";
    case Experiment::emc: return "emc";
    case Experiment::ensemble: return "ensemble";
  }
  return "?";
}

inline std::optional<Experiment> parse_experiment(std::string_view s) {
  for (auto e : {Experiment::model, Experiment::samples, Experiment::epochs, Experiment::ridge, Experiment::grid,
                 Experiment::emc, Experiment::ensemble})
    if (to_string(e) == s) return e;
  return std::nullopt;
}

struct EmcRequest {
  bool enabled = false;
  double epsilon = 0.1;
  /// 0 selects 4 * D.
  Eigen::Index n_max = 0;
  int trials = 5;
  ErrorMetric metric{};

  bool operator==(const EmcRequest&) const = default;
};

struct SweepSpec {
  std::vector<Eigen::Index> model_dims{100};
  std::vector<Eigen::Index> sample_sizes{100};
  std::vector<double> noise_levels{0.0};
  std::vector<std::int64_t> step_counts{0};
  std::vector<double> ridge_lambdas{0.0};

  std::string dataset = "synthetic";
  SyntheticTaskConfig synthetic{};
  /// 0 selects 1 / input_dim.
  double variance = 0.0;
  FeatureMode mode = FeatureMode::cosine;
  SolverSpec solver{};
  Eigen::Index test_size = 2000;

  int replicates = 5;
  std::uint64_t base_seed = 0;
  int ensemble_k = 1;
  /// Ensemble members draw their own label noise instead of sharing it.
  bool ensemble_independent_noise = false;
  /// Every member reuses member 0's feature map (degenerate, for testing).
  bool ensemble_shared_features = false;
  /// Every replicate uses replicate 0's seeds (degenerate, for testing).
  bool share_replicate_seeds = false;
  bool report_noisy_test = false;
  EmcRequest emc{};
  /// Threads used by the runner; results do not depend on it.
  int workers = 1;
};

struct CellCoord {
  Eigen::Index model_dim = 0;
  Eigen::Index sample_size = 0;
  double noise = 0.0;
  std::int64_t steps = 0;
  double ridge_lambda = 0.0;

  bool operator==(const CellCoord&) const = default;
};

struct ReplicateMetrics {
  Metrics train;
  Metrics test;
  std::optional<Metrics> noisy_test;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;
};

struct CellSummary {
  Stat train_mse;
  std::optional<Stat> train_err;
  Stat test_mse;
  std::optional<Stat> test_err;
  std::optional<Stat> noisy_test_mse;
  std::optional<Stat> noisy_test_err;
};

struct Cell {
  CellCoord coord;
  std::vector<ReplicateMetrics> replicates;
  CellSummary summary;
  std::optional<EMCEstimate> emc;
};

inline constexpr int kSchemaVersion = 1;

struct SweepResult {
  int schema_version = kSchemaVersion;
  Experiment experiment = Experiment::model;
  SweepSpec spec;
  std::vector<Cell> cells;
};

enum class MetricField { train_mse, train_err, test_mse, test_err, noisy_test_mse, noisy_test_err };

inline std::string_view to_string(MetricField f) {
  switch (f) {
    case MetricField::train_mse: return "train_mse";
    case MetricField::train_err: return "train_err";
    case MetricField::test_mse: return "test_mse";
    case MetricField::test_err: return "test_err";
    case MetricField::noisy_test_mse: return "noisy_test_mse";
    case MetricField::noisy_test_err: return "noisy_test_err";
  }
  return "?";
}

inline std::optional<MetricField> parse_metric_field(std::string_view s) {
  for (auto f : {MetricField::train_mse, MetricField::train_err, MetricField::test_mse, MetricField::test_err,
                 MetricField::noisy_test_mse, MetricField::noisy_test_err})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

enum class Axis { model_dim, sample_size, noise, steps, ridge_lambda };

inline std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::model_dim: return "model_dim";
    case Axis::sample_size: return "sample_size";
    case Axis::noise: return "noise";
    case Axis::steps: return "steps";
    case Axis::ridge_lambda: return "ridge_lambda";
  }
  return "?";
}

inline double axis_value(const CellCoord& c, Axis a) {
  switch (a) {
    case Axis::model_dim: return static_cast<double>(c.model_dim);
    case Axis::sample_size: return static_cast<double>(c.sample_size);
    case Axis::noise: return c.noise;
    case Axis::steps: return static_cast<double>(c.steps);
    case Axis::ridge_lambda: return c.ridge_lambda;
  }
  return 0.0;
}

/// The axis a single-axis experiment varies.
inline Axis primary_axis(Experiment e) {
  switch (e) {
    case Experiment::samples: return Axis::sample_size;
    case Experiment::epochs: return Axis::steps;
    case Experiment::ridge: return Axis::ridge_lambda;
    default: return Axis::model_dim;
  }
}

inline std::optional<double> metric_value(const ReplicateMetrics& r, MetricField f) {
  switch (f) {
    case MetricField::train_mse: return r.train.mse;
    case MetricField::train_err: return r.train.classification_error;
    case MetricField::test_mse: return r.test.mse;
    case MetricField::test_err: return r.test.classification_error;
    case MetricField::noisy_test_mse:
      return r.noisy_test ? std::optional<double>(r.noisy_test->mse) : std::nullopt;
    case MetricField::noisy_test_err:
      return r.noisy_test ? r.noisy_test->classification_error : std::nullopt;
  }
  return std::nullopt;
}

inline std::optional<Stat> cell_stat(const Cell& c, MetricField f) {
  switch (f) {
    case MetricField::train_mse: return c.summary.train_mse;
    case MetricField::train_err: return c.summary.train_err;
    case MetricField::test_mse: return c.summary.test_mse;
    case MetricField::test_err: return c.summary.test_err;
    case MetricField::noisy_test_mse: return c.summary.noisy_test_mse;
    case MetricField::noisy_test_err: return c.summary.noisy_test_err;
  }
  return std::nullopt;
}

/// Mean and sample standard deviation (n - 1; zero for a single value).
inline Stat summarize(std::span<const double> v) {
  Stat s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi) return {*lo, 0.0};
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  // Rounding in the mean must not push it outside the replicate range.
  s.mean = std::clamp(s.mean, *lo, *hi);
  return s;
}

inline std::optional<Stat> summarize_field(const std::vector<ReplicateMetrics>& reps, MetricField f) {
  std::vector<double> vals;
  for (const auto& r : reps) {
    auto v = metric_value(r, f);
    if (!v) return std::nullopt;
    vals.push_back(*v);
  }
  if (vals.empty()) return std::nullopt;
  return summarize(vals);
}

inline CellSummary summarize_cell(const std::vector<ReplicateMetrics>& reps) {
  CellSummary s;
  s.train_mse = summarize_field(reps, MetricField::train_mse).value_or(Stat{});
  s.train_err = summarize_field(reps, MetricField::train_err);
  s.test_mse = summarize_field(reps, MetricField::test_mse).value_or(Stat{});
  s.test_err = summarize_field(reps, MetricField::test_err);
  s.noisy_test_mse = summarize_field(reps, MetricField::noisy_test_mse);
  s.noisy_test_err = summarize_field(reps, MetricField::noisy_test_err);
  return s;
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t rep_key(const SweepSpec& spec, int replicate) {
  return spec.share_replicate_seeds ? 0 : static_cast<std::uint64_t>(replicate);
}

inline std::uint64_t data_seed(const SweepSpec& spec, int r) {
  return derive_seed(spec.base_seed, {role_tag("data"), rep_key(spec, r)});
}
inline std::uint64_t test_seed(const SweepSpec& spec, int r) {
  return derive_seed(spec.base_seed, {role_tag("test"), rep_key(spec, r)});
}
inline std::uint64_t noise_seed(const SweepSpec& spec, int r, double p, int member) {
  return derive_seed(spec.base_seed, {role_tag("noise"), rep_key(spec, r), seed_bits(p),
                                      static_cast<std::uint64_t>(member)});
}
inline std::uint64_t test_noise_seed(const SweepSpec& spec, int r, double p) {
  return derive_seed(spec.base_seed, {role_tag("test-noise"), rep_key(spec, r), seed_bits(p)});
}
inline std::uint64_t feature_seed(const SweepSpec& spec, int r, Eigen::Index d, int member) {
  return derive_seed(spec.base_seed, {role_tag("features"), rep_key(spec, r), static_cast<std::uint64_t>(d),
                                      static_cast<std::uint64_t>(member)});
}

template <class T>
void require_axis(const std::vector<T>& axis, std::string_view name, bool swept) {
  if (axis.empty()) throw InputError(std::string(name) + " axis is empty");
  if (!swept && axis.size() != 1)
    throw InputError(std::string(name) + " axis is not swept by this experiment and must hold one value");
  if (!std::is_sorted(axis.begin(), axis.end())) throw InputError(std::string(name) + " axis must be sorted");
}

inline void validate(const SweepSpec& spec, Experiment e, const TaskSource& source) {
  const bool grid = e == Experiment::grid;
  require_axis(spec.model_dims, "model_dims", e == Experiment::model || e == Experiment::ensemble ||
                                                  e == Experiment::emc || grid);
  require_axis(spec.sample_sizes, "sample_sizes", e == Experiment::samples || grid);
  require_axis(spec.noise_levels, "noise_levels", false);
  require_axis(spec.step_counts, "step_counts", e == Experiment::epochs);
  require_axis(spec.ridge_lambdas, "ridge_lambdas", e == Experiment::ridge);
  for (auto d : spec.model_dims)
    if (d < 1) throw InputError("model dimension must be positive, got " + std::to_string(d));
  for (auto n : spec.sample_sizes)
    if (n < 1) throw InputError("sample size must be positive, got " + std::to_string(n));
  for (auto p : spec.noise_levels)
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("noise level must lie in [0, 1]");
  for (auto t : spec.step_counts)
    if (t < 0) throw InputError("step counts must be >= 0");
  for (auto l : spec.ridge_lambdas)
    if (!(l >= 0.0)) throw InputError("ridge lambdas must be >= 0");
  if (spec.replicates < 1) throw InputError("replicates must be >= 1");
  if (spec.ensemble_k < 1) throw InputError("ensemble_k must be >= 1");
  if (spec.test_size < 1) throw InputError("test_size must be >= 1");
  spec.solver.validate();
  if (auto cap = source.train_capacity(); cap && spec.sample_sizes.back() > *cap)
    throw InputError("dataset holds " + std::to_string(*cap) + " training samples, sweep asks for " +
                     std::to_string(spec.sample_sizes.back()));
  if (auto cap = source.test_capacity(); cap && spec.test_size > *cap)
    throw InputError("dataset holds " + std::to_string(*cap) + " test samples");
}

inline double resolved_variance(const SweepSpec& spec, const TaskSource& source) {
  return spec.variance > 0.0 ? spec.variance : 1.0 / static_cast<double>(source.input_dim());
}

struct Samples {
  Dataset train;  // labels carry the train noise
  Dataset test;   // clean
  std::optional<Dataset> noisy_test;
};

inline Samples draw_samples(const SweepSpec& spec, const TaskSource& source, const CellCoord& c, int r,
                            int member = 0) {
  Samples s{source.draw_train(c.sample_size, data_seed(spec, r)), source.draw_test(spec.test_size, test_seed(spec, r)),
            std::nullopt};
  if (c.noise > 0.0) s.train = apply_label_noise(s.train, {c.noise, noise_seed(spec, r, c.noise, member)});
  if (spec.report_noisy_test)
    s.noisy_test = apply_label_noise(s.test, {c.noise, test_noise_seed(spec, r, c.noise)});
  return s;
}

inline ReplicateMetrics score(const Matrix& train_pred, const Matrix& test_pred, const Samples& s) {
  const int C = s.train.num_classes;
  ReplicateMetrics m;
  m.train = evaluate_predictions(train_pred, one_hot(s.train.labels, C));
  m.test = evaluate_predictions(test_pred, one_hot(s.test.clean_labels, C));
  if (s.noisy_test) m.noisy_test = evaluate_predictions(test_pred, one_hot(s.noisy_test->labels, C));
  return m;
}

/// Train/test predictions of the (possibly ensembled) model for one cell.
inline ReplicateMetrics run_cell_replicate(const SweepSpec& spec, const TaskSource& source, const CellCoord& c,
                                           int r, const SolverSpec& solver, int members) {
  const double variance = resolved_variance(spec, source);
  const Samples shared = draw_samples(spec, source, c, r);
  Matrix train_pred;
  Matrix test_pred;
  for (int m = 0; m < members; ++m) {
    const int feat_member = spec.ensemble_shared_features ? 0 : m;
    const auto map = FeatureMap::sample(source.input_dim(), c.model_dim, variance, spec.mode,
                                        feature_seed(spec, r, c.model_dim, feat_member));
    Samples own;
    const Samples* s = &shared;
    if (spec.ensemble_independent_noise && m > 0) {
      own = draw_samples(spec, source, c, r, m);
      s = &own;
    }
    const DesignMatrix phi = map.apply(s->train.inputs);
    const Fit f = fit(phi, one_hot(s->train.labels, s->train.num_classes), solver);
    Matrix tr = phi * f.beta;
    Matrix te = map.apply(shared.test.inputs) * f.beta;
    if (m == 0) {
      train_pred = std::move(tr);
      test_pred = std::move(te);
    } else {
      train_pred += tr;
      test_pred += te;
    }
  }
  if (members > 1) {
    train_pred /= static_cast<double>(members);
    test_pred /= static_cast<double>(members);
  }
  return score(train_pred, test_pred, shared);
}

inline TrainingProcedure procedure_for(const SweepSpec& spec, const CellCoord& c, const SolverSpec& solver) {
  TrainingProcedure t;
  t.feature_dim = c.model_dim;
  t.variance = spec.variance;
  t.mode = spec.mode;
  t.solver = solver;
  t.metric = spec.emc.metric;
  return t;
}

inline EMCEstimate cell_emc(const SweepSpec& spec, const TaskSource& source, const CellCoord& c,
                            const SolverSpec& solver) {
  DataSampler sampler{source, c.noise, false, 0};
  Eigen::Index n_max = spec.emc.n_max > 0 ? spec.emc.n_max : 4 * c.model_dim;
  if (auto cap = source.train_capacity()) n_max = std::min(n_max, *cap);
  return estimate_emc(procedure_for(spec, c, solver), sampler, spec.emc.epsilon, n_max, spec.emc.trials,
                      derive_seed(spec.base_seed, {role_tag("emc")}));
}

inline std::vector<CellCoord> cross(const SweepSpec& spec) {
  std::vector<CellCoord> out;
  for (auto n : spec.sample_sizes)
    for (auto d : spec.model_dims)
      for (auto p : spec.noise_levels)
        for (auto t : spec.step_counts)
          for (auto l : spec.ridge_lambdas) out.push_back({d, n, p, t, l});
  return out;
}

/// Cells x replicates, each a pure function of (spec, coordinates, replicate).
inline SweepResult run_independent_cells(const SweepSpec& spec, Experiment e, const TaskSource& source,
                                         int members) {
  validate(spec, e, source);
  SweepResult res;
  res.experiment = e;
  res.spec = spec;
  const auto coords = cross(spec);
  for (const auto& c : coords) {
    Cell cell;
    cell.coord = c;
    cell.replicates.resize(static_cast<std::size_t>(spec.replicates));
    res.cells.push_back(std::move(cell));
  }
  auto solver_for = [&](const CellCoord& c) {
    SolverSpec s = spec.solver;
    if (e == Experiment::ridge) {
      s.method = SolverMethod::ridge;
      s.ridge_lambda = c.ridge_lambda;
    }
    return s;
  };
  const std::size_t reps = static_cast<std::size_t>(spec.replicates);
  const std::size_t emc_tasks = spec.emc.enabled ? coords.size() : 0;
  parallel_for(coords.size() * reps + emc_tasks, spec.workers, [&](std::size_t task) {
    if (task < coords.size() * reps) {
      const std::size_t ci = task / reps;
      const int r = static_cast<int>(task % reps);
      const auto& c = coords[ci];
      res.cells[ci].replicates[static_cast<std::size_t>(r)] =
          run_cell_replicate(spec, source, c, r, solver_for(c), members);
    } else {
      const std::size_t ci = task - coords.size() * reps;
      res.cells[ci].emc = cell_emc(spec, source, coords[ci], solver_for(coords[ci]));
    }
  });
  for (auto& cell : res.cells) cell.summary = summarize_cell(cell.replicates);
  return res;
}

}  // namespace detail

inline TaskSource default_source(const SweepSpec& spec) {
  if (spec.dataset != "synthetic")
    throw InputError("dataset '" + spec.dataset + "' must be loaded by the caller and passed as a TaskSource");
  return TaskSource::synthetic(spec.synthetic);
}

/// D swept at fixed n; a fresh feature map per (D, replicate).
inline SweepResult run_model_wise(const SweepSpec& spec, const TaskSource& source) {
  return detail::run_independent_cells(spec, Experiment::model, source, 1);
}

/// n swept at fixed D over prefix-nested train sets.
inline SweepResult run_sample_wise(const SweepSpec& spec, const TaskSource& source) {
  return detail::run_independent_cells(spec, Experiment::samples, source, 1);
}

/// Full D x n cross product at fixed noise.
inline SweepResult run_grid(const SweepSpec& spec, const TaskSource& source) {
  return detail::run_independent_cells(spec, Experiment::grid, source, 1);
}

/// Ridge lambda swept at fixed (D, n, p). lambda = 0 (the min-norm solution)
/// is always the leftmost cell.
inline SweepResult run_ridge_sweep(SweepSpec spec, const TaskSource& source) {
  if (spec.ridge_lambdas.empty() || spec.ridge_lambdas.front() != 0.0)
    spec.ridge_lambdas.insert(spec.ridge_lambdas.begin(), 0.0);
  return detail::run_independent_cells(spec, Experiment::ridge, source, 1);
}

/// Average the predictions of ensemble_k models with independent feature maps
/// (shared train data; shared noise unless ensemble_independent_noise).
inline SweepResult ensemble_run(const SweepSpec& spec, const TaskSource& source) {
  return detail::run_independent_cells(spec, Experiment::ensemble, source, spec.ensemble_k);
}

/// Model-wise sweep with an EMC estimate attached to every cell.
inline SweepResult run_emc_sweep(SweepSpec spec, const TaskSource& source) {
  spec.emc.enabled = true;
  return detail::run_independent_cells(spec, Experiment::emc, source, 1);
}

/// Gradient descent snapshots at each step count: one feature map and one
/// train set per replicate, one GD run recorded at every requested step.
/// GD settings come from spec.solver (step size, scale, schedule). When
/// spec.emc.enabled, each step count also gets an EMC estimate of the GD
/// procedure stopped at that step.
inline SweepResult run_epoch_wise(const SweepSpec& spec, const TaskSource& source) {
  detail::validate(spec, Experiment::epochs, source);
  SweepResult res;
  res.experiment = Experiment::epochs;
  res.spec = spec;
  const Eigen::Index d = spec.model_dims.front();
  const Eigen::Index n = spec.sample_sizes.front();
  const double p = spec.noise_levels.front();
  for (auto t : spec.step_counts) {
    Cell cell;
    cell.coord = {d, n, p, t, spec.ridge_lambdas.front()};
    cell.replicates.resize(static_cast<std::size_t>(spec.replicates));
    res.cells.push_back(std::move(cell));
  }
  SolverSpec gd = spec.solver;
  gd.method = SolverMethod::gd_iterative;
  gd.num_steps = spec.step_counts.back();

  const std::size_t reps = static_cast<std::size_t>(spec.replicates);
  const std::size_t emc_tasks = spec.emc.enabled ? res.cells.size() : 0;
  parallel_for(reps + emc_tasks, spec.workers, [&](std::size_t task) {
    if (task < reps) {
      const int r = static_cast<int>(task);
      const auto& c0 = res.cells.front().coord;
      const auto s = detail::draw_samples(spec, source, c0, r);
      const auto map = FeatureMap::sample(source.input_dim(), d, detail::resolved_variance(spec, source), spec.mode,
                                          detail::feature_seed(spec, r, d, 0));
      const DesignMatrix phi = map.apply(s.train.inputs);
      const DesignMatrix phi_test = map.apply(s.test.inputs);
      const auto run = gd_iterative(phi, one_hot(s.train.labels, s.train.num_classes), gd, spec.step_counts);
      for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
        const auto& snap = run.snapshots[i];
        res.cells[i].replicates[task] = detail::score(phi * snap.beta, phi_test * snap.beta, s);
      }
    } else {
      const std::size_t ci = task - reps;
      SolverSpec proc_solver = spec.solver;
      proc_solver.method = spec.solver.schedule.kind == ScheduleKind::constant ? SolverMethod::gd_closed_form
                                                                                : SolverMethod::gd_iterative;
      proc_solver.num_steps = res.cells[ci].coord.steps;
      res.cells[ci].emc = detail::cell_emc(spec, source, res.cells[ci].coord, proc_solver);
    }
  });
  for (auto& cell : res.cells) cell.summary = summarize_cell(cell.replicates);
  return res;
}

inline SweepResult run_experiment(Experiment e, const SweepSpec& spec, const TaskSource& source) {
  switch (e) {
    case Experiment::model: return run_model_wise(spec, source);
    case Experiment::samples: return run_sample_wise(spec, source);
    case Experiment::epochs: return run_epoch_wise(spec, source);
    case Experiment::ridge: return run_ridge_sweep(spec, source);
    case Experiment::grid: return run_grid(spec, source);
    case Experiment::emc: return run_emc_sweep(spec, source);
    case Experiment::ensemble: return ensemble_run(spec, source);
  }
  throw InputError("unknown experiment");
}

// ---------------------------------------------------------------------------
// Curves and peaks

struct CurvePoint {
  double x = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

struct Peak {
  double x = 0.0;
  double height = 0.0;
  std::size_t index = 0;
};

/// Mean/std of one metric along the experiment's swept axis. For grids, pass
/// the row's sample size to take one model-wise slice.
inline std::vector<CurvePoint> curve_along(const SweepResult& r, Axis axis, MetricField f,
                                           std::optional<Eigen::Index> fixed_sample_size = std::nullopt) {
  std::vector<CurvePoint> out;
  for (const auto& c : r.cells) {
    if (fixed_sample_size && c.coord.sample_size != *fixed_sample_size) continue;
    auto s = cell_stat(c, f);
    if (!s) continue;
    out.push_back({axis_value(c.coord, axis), s->mean, s->std});
  }
  return out;
}

/// Centered moving average of the means; near the ends the window shrinks
/// symmetrically, so the endpoints themselves stay unsmoothed. The
/// smoothed interior argmax is reported when it exceeds both smoothed
/// endpoints by at least one pooled standard deviation, where the pooled
/// value is sqrt((a^2 + b^2) / 2) of the two points' window-RMS stds.
inline std::optional<Peak> locate_peak(std::span<const CurvePoint> curve, int window = 3) {
  if (window < 1 || window % 2 == 0) throw InputError("smoothing window must be a positive odd number");
  const std::size_t n = curve.size();
  if (n < 3) return std::nullopt;
  const std::size_t half = static_cast<std::size_t>(window / 2);
  std::vector<double> mean(n), rms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = std::min({half, i, n - 1 - i});
    const std::size_t lo = i - h;
    const std::size_t hi = i + h;
    double m = 0.0, v = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      m += curve[j].mean;
      v += curve[j].std * curve[j].std;
    }
    const double cnt = static_cast<double>(hi - lo + 1);
    mean[i] = m / cnt;
    rms[i] = std::sqrt(v / cnt);
  }
  std::size_t best = 1;
  for (std::size_t i = 2; i + 1 < n; ++i)
    if (mean[i] > mean[best]) best = i;
  auto pooled = [&](std::size_t e) { return std::sqrt(0.5 * (rms[best] * rms[best] + rms[e] * rms[e])); };
  if (mean[best] - mean.front() < pooled(0)) return std::nullopt;
  if (mean[best] - mean.back() < pooled(n - 1)) return std::nullopt;
  if (mean[best] <= mean.front() || mean[best] <= mean.back()) return std::nullopt;
  return Peak{curve[best].x, mean[best], best};
}

}  // namespace ddlab
