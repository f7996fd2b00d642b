#pragma once

// Effective Model Complexity: the largest sample count n for which a training
// procedure reaches expected train error <= epsilon, estimated by Monte Carlo
// over independent sample draws.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "ddlab/data.hpp"
#include "ddlab/features.hpp"
#include "ddlab/solver.hpp"
#include "ddlab/task.hpp"

namespace ddlab {

enum class FeatureSeedPolicy { fixed, fresh_per_trial };

struct ErrorMetric {
  enum class Kind {
    classification,  ///< fraction of rows whose argmax is wrong
    mse_threshold,   ///< fraction of rows whose squared residual exceeds tau
  };
  Kind kind = Kind::classification;
  double tau = 1e-10;

  bool operator==(const ErrorMetric&) const = default;
};

/// A training procedure: sample a feature map, fit the second layer, report
/// train error.
struct TrainingProcedure {
  Eigen::Index feature_dim = 1;
  /// 0 selects 1 / input_dim.
  double variance = 0.0;
  FeatureMode mode = FeatureMode::cosine;
  FeatureSeedPolicy seed_policy = FeatureSeedPolicy::fresh_per_trial;
  std::uint64_t feature_seed = 0;
  SolverSpec solver{};
  ErrorMetric metric{};

  double resolved_variance(Eigen::Index input_dim) const {
    return variance > 0.0 ? variance : 1.0 / static_cast<double>(input_dim);
  }

  double train_error(const Dataset& train, std::uint64_t map_seed) const {
    if (feature_dim < 1) throw InputError("feature dimension must be >= 1");
    const auto map = FeatureMap::sample(train.input_dim(), feature_dim, resolved_variance(train.input_dim()), mode,
                                        map_seed);
    const DesignMatrix phi = map.apply(train.inputs);
    const TargetMatrix y = one_hot(train.labels, train.num_classes);
    const Fit f = fit(phi, y, solver);
    const Matrix pred = phi * f.beta;

    Eigen::Index bad = 0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      if (!pred.row(i).allFinite()) {
        ++bad;
        continue;
      }
      if (metric.kind == ErrorMetric::Kind::classification) {
        if (row_argmax(pred, i) != row_argmax(y, i)) ++bad;
      } else if ((pred.row(i) - y.row(i)).squaredNorm() > metric.tau) {
        ++bad;
      }
    }
    return static_cast<double>(bad) / static_cast<double>(pred.rows());
  }
};

/// Draws noisy training sets for Monte-Carlo trials.
struct DataSampler {
  TaskSource source;
  double noise_p = 0.0;
  /// Use noise_seed for every trial instead of a fresh per-trial noise draw.
  bool frozen_noise = false;
  std::uint64_t noise_seed = 0;

  Dataset draw(Eigen::Index n, std::uint64_t trial_seed) const {
    if (n < 1) throw InputError("sample count must be >= 1");
    if (auto cap = source.train_capacity(); cap && n > *cap)
      throw InputError("data source holds " + std::to_string(*cap) + " samples, " + std::to_string(n) +
                       " requested");
    Dataset ds = source.draw_train(n, derive_seed(trial_seed, {role_tag("data")}));
    if (noise_p > 0.0) {
      const std::uint64_t ns = frozen_noise ? noise_seed : derive_seed(trial_seed, {role_tag("noise")});
      ds = apply_label_noise(ds, {noise_p, ns});
    }
    return ds;
  }
};

struct ErrorEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Seed of one Monte-Carlo trial; independent of the procedure so different
/// procedures see the same samples.
inline std::uint64_t emc_trial_seed(std::uint64_t base_seed, Eigen::Index n, int trial) {
  return derive_seed(base_seed, {role_tag("emc-trial"), static_cast<std::uint64_t>(n),
                                 static_cast<std::uint64_t>(trial)});
}

inline ErrorEstimate expected_train_error(const TrainingProcedure& proc, const DataSampler& sampler, Eigen::Index n,
                                          int trials, std::uint64_t base_seed) {
  if (trials < 1) throw InputError("trials must be >= 1");
  if (n < 1) throw InputError("sample count must be >= 1");
  std::vector<double> errs(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    const auto seed = emc_trial_seed(base_seed, n, t);
    const Dataset ds = sampler.draw(n, seed);
    const std::uint64_t map_seed = proc.seed_policy == FeatureSeedPolicy::fixed
                                       ? proc.feature_seed
                                       : derive_seed(seed, {role_tag("features")});
    errs[static_cast<std::size_t>(t)] = proc.train_error(ds, map_seed);
  }
  ErrorEstimate e;
  for (double v : errs) e.mean += v;
  e.mean /= trials;
  if (trials > 1) {
    double ss = 0.0;
    for (double v : errs) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / (trials - 1)) / std::sqrt(static_cast<double>(trials));
  }
  return e;
}

struct EmcCurvePoint {
  Eigen::Index n = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct EMCEstimate {
  Eigen::Index n_star = 0;
  double epsilon = 0.1;
  int trials_per_n = 0;
  /// Largest probed n with error <= epsilon; absent when even n = 1 fails.
  std::optional<Eigen::Index> n_lo;
  /// Smallest probed n above n_lo with error > epsilon; absent when censored.
  std::optional<Eigen::Index> n_hi;
  /// Every probed n, ascending.
  std::vector<EmcCurvePoint> curve;
  bool monotonicity_flag = false;
  /// error(n_max) <= epsilon: the true EMC may exceed n_max.
  bool censored = false;
};

/// Exponential bracketing from n = 1 then bisection, under the assumption that
/// mean train error is non-decreasing in n. The assumption is checked on the
/// probed points afterwards: a drop larger than two combined standard errors
/// sets monotonicity_flag and the result is re-anchored on the first crossing.
inline EMCEstimate estimate_emc(const TrainingProcedure& proc, const DataSampler& sampler, double epsilon,
                                Eigen::Index n_max, int trials, std::uint64_t base_seed) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in [0, 1)");
  if (n_max < 1) throw InputError("n_max must be >= 1");
  if (trials < 1) throw InputError("trials must be >= 1");

  std::map<Eigen::Index, ErrorEstimate> probed;
  auto error_at = [&](Eigen::Index n) -> double {
    auto it = probed.find(n);
    if (it == probed.end()) it = probed.emplace(n, expected_train_error(proc, sampler, n, trials, base_seed)).first;
    return it->second.mean;
  };
  auto bisect = [&](Eigen::Index lo, Eigen::Index hi) {
    while (hi - lo > 1) {
      const Eigen::Index mid = lo + (hi - lo) / 2;
      if (error_at(mid) <= epsilon)
        lo = mid;
      else
        hi = mid;
    }
    return std::pair{lo, hi};
  };

  EMCEstimate est;
  est.epsilon = epsilon;
  est.trials_per_n = trials;

  std::optional<Eigen::Index> lo;
  std::optional<Eigen::Index> hi;
  if (error_at(1) > epsilon) {
    hi = 1;
  } else {
    Eigen::Index good = 1;
    while (true) {
      if (good == n_max) break;
      const Eigen::Index next = std::min(good * 2, n_max);
      if (error_at(next) <= epsilon) {
        good = next;
      } else {
        hi = next;
        break;
      }
    }
    lo = good;
    if (hi) {
      auto [l, h] = bisect(*lo, *hi);
      lo = l;
      hi = h;
    }
  }

  auto snapshot_curve = [&] {
    est.curve.clear();
    for (const auto& [n, e] : probed) est.curve.push_back({n, e.mean, e.std_error});
  };
  snapshot_curve();

  for (std::size_t a = 0; a < est.curve.size() && !est.monotonicity_flag; ++a)
    for (std::size_t b = a + 1; b < est.curve.size(); ++b) {
      const auto& pa = est.curve[a];
      const auto& pb = est.curve[b];
      const double combined = std::sqrt(pa.std_error * pa.std_error + pb.std_error * pb.std_error);
      if (pa.mean - pb.mean > 2.0 * combined) {
        est.monotonicity_flag = true;
        break;
      }
    }

  if (est.monotonicity_flag) {
    // First crossing among the probed points, ascending in n.
    for (std::size_t i = 0; i < est.curve.size(); ++i) {
      if (est.curve[i].mean > epsilon) {
        if (i == 0) {
          lo.reset();
          hi = est.curve[0].n;
        } else {
          auto [l, h] = bisect(est.curve[i - 1].n, est.curve[i].n);
          lo = l;
          hi = h;
        }
        break;
      }
    }
    snapshot_curve();
  }

  est.n_lo = lo;
  est.n_hi = hi;
  est.n_star = lo.value_or(0);
  est.censored = lo && !hi;
  return est;
}

enum class Regime { under, critical, over };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::under: return "under";
    case Regime::critical: return "critical";
    case Regime::over: return "over";
  }
  return "?";
}

/// under: emc < n / (1 + width); over: emc > n (1 + width); critical otherwise.
inline Regime classify_regime(double emc, double n, double width = 0.25) {
  if (!(width > 0.0)) throw InputError("regime width must be > 0");
  if (emc < n / (1.0 + width)) return Regime::under;
  if (emc > n * (1.0 + width)) return Regime::over;
  return Regime::critical;
}

}  // namespace ddlab
