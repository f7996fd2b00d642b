#pragma once

// Least-squares engines for the frozen-feature linear model. Every engine
// solves the k output columns independently against one shared thin SVD
// of the design matrix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SVD>

#include "ddlab/core.hpp"

namespace ddlab {

enum class SolverMethod { min_norm_svd, ridge, gd_closed_form, gd_iterative };

enum class ScheduleKind { constant, inverse_sqrt };

/// How `SolverSpec::step_size` is interpreted.
enum class StepScale {
  absolute,  ///< used as given
  spectral,  ///< divided by the largest squared singular value of the design
};

/// Learning-rate schedule. inverse_sqrt gives base / sqrt(1 + floor(t / period))
/// at gradient step t, counted from 0.
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  std::int64_t period = 512;

  double rate(double base, std::int64_t step) const {
    if (kind == ScheduleKind::constant) return base;
    return base / std::sqrt(1.0 + static_cast<double>(step / period));
  }
};

struct SolverSpec {
  SolverMethod method = SolverMethod::min_norm_svd;
  double ridge_lambda = 0.0;
  double rank_tol = 1e-10;
  double step_size = 0.1;
  StepScale step_scale = StepScale::absolute;
  std::int64_t num_steps = 0;
  StepSchedule schedule{};

  void validate() const {
    if (!(ridge_lambda >= 0.0)) throw InputError("ridge_lambda must be >= 0");
    if (!(rank_tol > 0.0)) throw InputError("rank_tol must be > 0");
    if (!(step_size > 0.0)) throw InputError("step_size must be > 0");
    if (num_steps < 0) throw InputError("num_steps must be >= 0");
    if (schedule.period < 1) throw InputError("schedule period must be >= 1");
  }
};

struct Metrics {
  double mse = 0.0;
  /// Absent when the target has a single column.
  std::optional<double> classification_error;
};

inline std::string_view to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::min_norm_svd: return "min-norm-svd";
    case SolverMethod::ridge: return "ridge";
    case SolverMethod::gd_closed_form: return "gd-closed-form";
    case SolverMethod::gd_iterative: return "gd-iterative";
  }
  return "?";
}

inline std::optional<SolverMethod> parse_solver_method(std::string_view s) {
  for (auto m : {SolverMethod::min_norm_svd, SolverMethod::ridge, SolverMethod::gd_closed_form,
                 SolverMethod::gd_iterative}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

namespace detail {

inline void check_system(const DesignMatrix& phi, const TargetMatrix& y) {
  if (phi.rows() < 1 || phi.cols() < 1) throw ContractError("design matrix must be at least 1x1");
  if (phi.rows() != y.rows())
    throw ContractError("design has " + std::to_string(phi.rows()) + " rows but targets have " +
                        std::to_string(y.rows()));
  require_finite(phi, "design matrix");
  require_finite(y, "targets");
}

// (1 - (1 - a)^t) computed without cancellation when a is small.
inline double gd_filter_numerator(double a, std::int64_t t) {
  if (t == 0) return 0.0;
  if (a < 1.0) return -std::expm1(static_cast<double>(t) * std::log1p(-a));
  return 1.0 - std::pow(1.0 - a, static_cast<double>(t));
}

}  // namespace detail

/// Thin SVD of a design matrix, shared by every spectral solver.
class Spectrum {
public:
  explicit Spectrum(const DesignMatrix& phi) {
    if (phi.rows() < 1 || phi.cols() < 1) throw ContractError("design matrix must be at least 1x1");
    require_finite(phi, "design matrix");
    Eigen::BDCSVD<Matrix> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u_ = svd.matrixU();
    s_ = svd.singularValues();
    v_ = svd.matrixV();
    rows_ = phi.rows();
  }

  const Matrix& u() const { return u_; }
  const Vector& singular_values() const { return s_; }
  const Matrix& v() const { return v_; }
  Eigen::Index rows() const { return rows_; }
  double max_singular_value() const { return s_.size() ? s_(0) : 0.0; }

  /// Singular values at or below rank_tol * s_max count as zero.
  Eigen::Index rank(double rank_tol) const {
    const double cut = rank_tol * max_singular_value();
    Eigen::Index r = 0;
    while (r < s_.size() && s_(r) > cut) ++r;
    return r;
  }

  /// beta = V diag(filter(s_i)) U^T Y over the retained singular values.
  template <class Filter>
  Coefficients apply_filter(const TargetMatrix& y, double rank_tol, Filter&& filter) const {
    if (y.rows() != rows_) throw ContractError("target rows do not match design rows");
    const Eigen::Index r = rank(rank_tol);
    Vector g(r);
    for (Eigen::Index i = 0; i < r; ++i) g(i) = filter(s_(i));
    Matrix projected = u_.leftCols(r).transpose() * y;
    return v_.leftCols(r) * (g.asDiagonal() * projected);
  }

private:
  Matrix u_;
  Vector s_;
  Matrix v_;
  Eigen::Index rows_ = 0;
};

inline Coefficients min_norm_solve(const Spectrum& spectrum, const TargetMatrix& y, double rank_tol = 1e-10) {
  if (!(rank_tol > 0.0)) throw InputError("rank_tol must be > 0");
  return spectrum.apply_filter(y, rank_tol, [](double s) { return 1.0 / s; });
}

/// Minimum-Frobenius-norm least-squares solution through the SVD pseudo-inverse.
inline Coefficients min_norm_solve(const DesignMatrix& phi, const TargetMatrix& y, double rank_tol = 1e-10) {
  detail::check_system(phi, y);
  return min_norm_solve(Spectrum(phi), y, rank_tol);
}

/// argmin ||Phi beta - Y||^2 + lambda ||beta||^2 in spectral form. lambda = 0
/// takes the min_norm_solve path exactly.
inline Coefficients ridge_solve(const Spectrum& spectrum, const TargetMatrix& y, double lambda,
                                double rank_tol = 1e-10) {
  if (!(lambda >= 0.0)) throw InputError("ridge lambda must be >= 0");
  if (lambda == 0.0) return min_norm_solve(spectrum, y, rank_tol);
  return spectrum.apply_filter(y, rank_tol, [lambda](double s) { return s / (s * s + lambda); });
}

inline Coefficients ridge_solve(const DesignMatrix& phi, const TargetMatrix& y, double lambda,
                                double rank_tol = 1e-10) {
  if (!(lambda >= 0.0)) throw InputError("ridge lambda must be >= 0");
  detail::check_system(phi, y);
  return ridge_solve(Spectrum(phi), y, lambda, rank_tol);
}

struct GdClosedForm {
  Coefficients beta;
  /// |1 - eta s_max^2| > 1: the iteration would blow up along the top direction.
  bool divergent = false;
};

/// t steps of constant-step gradient descent on 0.5 ||Phi beta - Y||^2 from
/// beta = 0, evaluated in closed form:
///   beta_t = V diag((1 - (1 - eta s_i^2)^t) / s_i) U^T Y.
inline GdClosedForm gd_closed_form(const Spectrum& spectrum, const TargetMatrix& y, double eta, std::int64_t t,
                                   double rank_tol = 1e-10) {
  if (!(eta > 0.0)) throw InputError("step size must be > 0");
  if (t < 0) throw InputError("step count must be >= 0");
  const double smax = spectrum.max_singular_value();
  GdClosedForm out;
  out.divergent = std::abs(1.0 - eta * smax * smax) > 1.0;
  out.beta = spectrum.apply_filter(
      y, rank_tol, [eta, t](double s) { return detail::gd_filter_numerator(eta * s * s, t) / s; });
  return out;
}

inline GdClosedForm gd_closed_form(const DesignMatrix& phi, const TargetMatrix& y, double eta, std::int64_t t,
                                   double rank_tol = 1e-10) {
  detail::check_system(phi, y);
  return gd_closed_form(Spectrum(phi), y, eta, t, rank_tol);
}

inline double largest_singular_value(const DesignMatrix& phi) {
  Eigen::BDCSVD<Matrix> svd(phi);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

/// Base step size after applying the spec's StepScale.
inline double resolve_step_size(const SolverSpec& spec, double s_max) {
  if (spec.step_scale == StepScale::absolute) return spec.step_size;
  if (s_max <= 0.0) return spec.step_size;
  return spec.step_size / (s_max * s_max);
}

inline double train_mse(const DesignMatrix& phi, const Coefficients& beta, const TargetMatrix& y) {
  return (phi * beta - y).squaredNorm() / static_cast<double>(y.rows() * y.cols());
}

struct GdSnapshot {
  std::int64_t step = 0;
  Coefficients beta;
  double train_mse = 0.0;
};

struct GdRun {
  std::vector<GdSnapshot> snapshots;
  double base_step = 0.0;
  bool divergent = false;
};

/// Explicit full-batch gradient descent from beta = 0 with gradient
/// Phi^T (Phi beta - Y) and the spec's schedule; snapshots after each step
/// count in record_at.
inline GdRun gd_iterative(const DesignMatrix& phi, const TargetMatrix& y, const SolverSpec& spec,
                          std::span<const std::int64_t> record_at) {
  detail::check_system(phi, y);
  spec.validate();
  if (record_at.empty()) throw InputError("record_at must not be empty");
  if (!std::is_sorted(record_at.begin(), record_at.end()))
    throw InputError("record_at must be sorted ascending");
  if (record_at.front() < 0) throw InputError("record_at entries must be >= 0");
  if (record_at.back() != spec.num_steps) throw InputError("max(record_at) must equal num_steps");

  const double s_max = largest_singular_value(phi);
  GdRun run;
  run.base_step = resolve_step_size(spec, s_max);
  run.divergent = std::abs(1.0 - run.base_step * s_max * s_max) > 1.0;

  Coefficients beta = Coefficients::Zero(phi.cols(), y.cols());
  Matrix residual = -y;
  std::size_t next = 0;
  auto record = [&](std::int64_t step) {
    while (next < record_at.size() && record_at[next] == step) {
      run.snapshots.push_back(
          {step, beta, residual.squaredNorm() / static_cast<double>(y.rows() * y.cols())});
      ++next;
    }
  };
  record(0);
  for (std::int64_t t = 0; t < spec.num_steps; ++t) {
    const double eta = spec.schedule.rate(run.base_step, t);
    beta.noalias() -= eta * (phi.transpose() * residual);
    residual.noalias() = phi * beta;
    residual -= y;
    record(t + 1);
  }
  if (!beta.allFinite()) run.divergent = true;
  return run;
}

struct Fit {
  Coefficients beta;
  bool divergent = false;
};

/// Dispatch on spec.method; GD methods run spec.num_steps steps.
inline Fit fit(const Spectrum& spectrum, const DesignMatrix& phi, const TargetMatrix& y, const SolverSpec& spec) {
  spec.validate();
  switch (spec.method) {
    case SolverMethod::min_norm_svd: return {min_norm_solve(spectrum, y, spec.rank_tol), false};
    case SolverMethod::ridge: return {ridge_solve(spectrum, y, spec.ridge_lambda, spec.rank_tol), false};
    case SolverMethod::gd_closed_form: {
      const double eta = resolve_step_size(spec, spectrum.max_singular_value());
      auto r = gd_closed_form(spectrum, y, eta, spec.num_steps, spec.rank_tol);
      return {std::move(r.beta), r.divergent};
    }
    case SolverMethod::gd_iterative: {
      const std::int64_t last[] = {spec.num_steps};
      auto run = gd_iterative(phi, y, spec, last);
      return {std::move(run.snapshots.back().beta), run.divergent};
    }
  }
  throw InputError("unknown solver method");
}

inline Fit fit(const DesignMatrix& phi, const TargetMatrix& y, const SolverSpec& spec) {
  detail::check_system(phi, y);
  if (spec.method == SolverMethod::gd_iterative) {
    spec.validate();
    const std::int64_t last[] = {spec.num_steps};
    auto run = gd_iterative(phi, y, spec, last);
    return {std::move(run.snapshots.back().beta), run.divergent};
  }
  return fit(Spectrum(phi), phi, y, spec);
}

/// Row argmax, ties to the lowest column.
inline Eigen::Index row_argmax(const Matrix& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j)
    if (m(row, j) > m(row, best)) best = j;
  return best;
}

inline Metrics evaluate_predictions(const Matrix& predictions, const TargetMatrix& y) {
  if (predictions.rows() != y.rows() || predictions.cols() != y.cols())
    throw ContractError("prediction and target shapes differ");
  if (y.size() == 0) throw ContractError("empty target matrix");
  Metrics m;
  m.mse = (predictions - y).squaredNorm() / static_cast<double>(y.rows() * y.cols());
  if (y.cols() >= 2) {
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      if (row_argmax(predictions, i) != row_argmax(y, i)) ++wrong;
    m.classification_error = static_cast<double>(wrong) / static_cast<double>(y.rows());
  }
  return m;
}

inline Metrics evaluate(const Coefficients& beta, const DesignMatrix& phi, const TargetMatrix& y) {
  if (phi.cols() != beta.rows() || beta.cols() != y.cols() || phi.rows() != y.rows())
    throw ContractError("evaluate: shapes of beta, design and targets disagree");
  return evaluate_predictions(phi * beta, y);
}

}  // namespace ddlab
