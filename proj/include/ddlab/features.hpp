#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "ddlab/core.hpp"
#include "ddlab/random.hpp"

namespace ddlab {

enum class FeatureMode {
  cosine,        ///< scale * cos(<w_j, x> + b_j), D columns
  complex_pair,  ///< scale * (cos<w_j, x>, sin<w_j, x>), 2D columns
};

inline std::string_view to_string(FeatureMode m) {
  return m == FeatureMode::cosine ? "cosine" : "complex-pair";
}

inline std::optional<FeatureMode> parse_feature_mode(std::string_view s) {
  if (s == "cosine") return FeatureMode::cosine;
  if (s == "complex-pair") return FeatureMode::complex_pair;
  return std::nullopt;
}

/// Frozen random Fourier first layer. Immutable once built.
class FeatureMap {
public:
  /// Draw a map with W ~ N(0, variance) entries and, in cosine mode, phases
  /// uniform on [0, 2 pi). Column j depends only on (seed, j), so the first
  /// D' columns of a D-feature map equal a D'-feature map with the same seed.
  /// scale defaults to sqrt(2/D) in cosine mode and sqrt(1/D) in complex-pair
  /// mode, which gives both a unit kernel diagonal.
  static FeatureMap sample(Eigen::Index input_dim, Eigen::Index num_features, double variance,
                           FeatureMode mode, std::uint64_t seed, std::optional<double> scale = std::nullopt) {
    if (input_dim < 1) throw InputError("feature map input dimension must be >= 1");
    if (num_features < 1) throw InputError("feature count must be >= 1");
    if (!(variance > 0.0)) throw InputError("feature variance must be > 0");
    const double sd = std::sqrt(variance);
    Matrix w(input_dim, num_features);
    Vector b = Vector::Zero(num_features);
    for (Eigen::Index j = 0; j < num_features; ++j) {
      Rng col(derive_seed(seed, {role_tag("weights"), static_cast<std::uint64_t>(j)}));
      for (Eigen::Index i = 0; i < input_dim; ++i) w(i, j) = sd * col.normal();
      if (mode == FeatureMode::cosine) {
        Rng ph(derive_seed(seed, {role_tag("phase"), static_cast<std::uint64_t>(j)}));
        b(j) = 2.0 * std::numbers::pi * ph.uniform();
      }
    }
    const double s = scale.value_or(default_scale(num_features, mode));
    return FeatureMap(std::move(w), std::move(b), variance, mode, s, seed);
  }

  /// Build a map from explicit parameters (hand-set fixtures, teachers).
  static FeatureMap from_parameters(Matrix weights, Vector phases, FeatureMode mode, double scale,
                                    double variance = 1.0, std::uint64_t seed = 0) {
    if (weights.rows() < 1 || weights.cols() < 1) throw InputError("weights must be at least 1x1");
    if (phases.size() != weights.cols()) throw InputError("phase count must equal feature count");
    if (!(scale > 0.0)) throw InputError("scale must be > 0");
    require_finite(weights, "weights");
    require_finite(phases, "phases");
    return FeatureMap(std::move(weights), std::move(phases), variance, mode, scale, seed);
  }

  static double default_scale(Eigen::Index num_features, FeatureMode mode) {
    const double d = static_cast<double>(num_features);
    return mode == FeatureMode::cosine ? std::sqrt(2.0 / d) : std::sqrt(1.0 / d);
  }

  Eigen::Index input_dim() const { return weights_.rows(); }
  /// Number of random frequencies D.
  Eigen::Index num_features() const { return weights_.cols(); }
  /// Real columns produced by apply(): D in cosine mode, 2D in complex-pair mode.
  Eigen::Index output_dim() const {
    return mode_ == FeatureMode::cosine ? num_features() : 2 * num_features();
  }
  const Matrix& weights() const { return weights_; }
  const Vector& phases() const { return phases_; }
  double variance() const { return variance_; }
  FeatureMode mode() const { return mode_; }
  double scale() const { return scale_; }
  std::uint64_t seed() const { return seed_; }

  DesignMatrix apply(const Matrix& x) const {
    if (x.cols() != input_dim())
      throw InputError("input has " + std::to_string(x.cols()) + " columns, feature map expects " +
                       std::to_string(input_dim()));
    Matrix z = x * weights_;
    if (mode_ == FeatureMode::cosine) {
      z.rowwise() += phases_.transpose();
      return scale_ * z.array().cos().matrix();
    }
    DesignMatrix out(x.rows(), 2 * num_features());
    for (Eigen::Index j = 0; j < num_features(); ++j) {
      out.col(2 * j) = scale_ * z.col(j).array().cos().matrix();
      out.col(2 * j + 1) = scale_ * z.col(j).array().sin().matrix();
    }
    return out;
  }

private:
  FeatureMap(Matrix w, Vector b, double variance, FeatureMode mode, double scale, std::uint64_t seed)
      : weights_(std::move(w)), phases_(std::move(b)), variance_(variance), mode_(mode), scale_(scale),
        seed_(seed) {}

  Matrix weights_;
  Vector phases_;
  double variance_;
  FeatureMode mode_;
  double scale_;
  std::uint64_t seed_;
};

}  // namespace ddlab
