#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ddlab/solver.hpp"

using namespace ddlab;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = z(gen);
  return m;
}

double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

// Dual formula for an underdetermined full-row-rank system, via Cholesky of
// the Gram matrix: beta = Phi^T (Phi Phi^T)^{-1} Y.
Matrix dual_oracle(const Matrix& phi, const Matrix& y) {
  const Matrix gram = phi * phi.transpose();
  return phi.transpose() * gram.llt().solve(y);
}

// Explicit GD loop written out by hand, independent of gd_iterative.
Matrix gd_loop(const Matrix& phi, const Matrix& y, double eta, int steps) {
  Matrix beta = Matrix::Zero(phi.cols(), y.cols());
  for (int t = 0; t < steps; ++t) beta -= eta * phi.transpose() * (phi * beta - y);
  return beta;
}

}  // namespace

TEST(MinNorm, IdentityDesign) {
  Matrix phi = Matrix::Identity(2, 2);
  Matrix y(2, 1);
  y << 3, 4;
  const Matrix beta = min_norm_solve(phi, y);
  EXPECT_NEAR(beta(0, 0), 3.0, 1e-14);
  EXPECT_NEAR(beta(1, 0), 4.0, 1e-14);
}

TEST(MinNorm, SingleRowSpreadsEvenly) {
  Matrix phi(1, 2);
  phi << 1, 1;
  Matrix y(1, 1);
  y << 2;
  const Matrix beta = min_norm_solve(phi, y);
  EXPECT_NEAR(beta(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(beta(1, 0), 1.0, 1e-14);
}

TEST(MinNorm, MatchesDualFormulaFiveByEight) {
  const Matrix phi = gaussian(5, 8, 1);
  const Matrix y = gaussian(5, 3, 2);
  EXPECT_LE(rel_err(min_norm_solve(phi, y), dual_oracle(phi, y)), 1e-10);
}

TEST(MinNorm, MatchesDualFormulaOnTwentyInstances) {
  for (unsigned s = 0; s < 20; ++s) {
    const Eigen::Index n = 3 + s % 7, d = n + 2 + s % 11;
    const Matrix phi = gaussian(n, d, 100 + s);
    const Matrix y = gaussian(n, 1 + s % 4, 200 + s);
    EXPECT_LE(rel_err(min_norm_solve(phi, y), dual_oracle(phi, y)), 1e-10) << "instance " << s;
  }
}

TEST(MinNorm, OverdeterminedMatchesNormalEquations) {
  const Matrix phi = gaussian(30, 6, 3);
  const Matrix y = gaussian(30, 2, 4);
  const Matrix oracle = (phi.transpose() * phi).ldlt().solve(phi.transpose() * y);
  EXPECT_LE(rel_err(min_norm_solve(phi, y), oracle), 1e-10);
}

TEST(MinNorm, NullSpacePerturbationIncreasesNorm) {
  const Matrix phi = gaussian(6, 10, 5);
  const Matrix y = gaussian(6, 2, 6);
  const Matrix beta = min_norm_solve(phi, y);
  Eigen::FullPivLU<Matrix> lu(phi);
  const Matrix null = lu.kernel();
  ASSERT_EQ(null.cols(), 4);
  for (Eigen::Index c = 0; c < null.cols(); ++c) {
    Matrix nu = Matrix::Zero(10, 2);
    nu.col(c % 2) = null.col(c);
    const Matrix other = beta + nu;
    EXPECT_NEAR((phi * other - y).norm(), (phi * beta - y).norm(), 1e-9);
    EXPECT_GT(other.norm(), beta.norm());
  }
}

TEST(MinNorm, ResidualOrthogonalToColumns) {
  for (unsigned s = 0; s < 5; ++s) {
    const Matrix phi = gaussian(40, 15, 10 + s);
    const Matrix y = gaussian(40, 3, 20 + s);
    const Matrix beta = min_norm_solve(phi, y);
    const Matrix g = phi.transpose() * (phi * beta - y);
    EXPECT_LE(g.norm() / (phi.norm() * y.norm()), 1e-8);
  }
}

TEST(MinNorm, RankDeficientUsesTolerance) {
  Matrix phi(3, 3);
  phi << 1, 2, 3, 2, 4, 6, 1, 0, 1;  // row 2 = 2 * row 1
  Matrix y(3, 1);
  y << 1, 2, 3;
  const Matrix beta = min_norm_solve(phi, y);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(phi);
  EXPECT_LE(rel_err(beta, cod.pseudoInverse() * y), 1e-10);
}

TEST(MinNorm, Errors) {
  EXPECT_THROW(min_norm_solve(Matrix::Ones(3, 2), Matrix::Ones(4, 1)), ContractError);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(min_norm_solve(bad, Matrix::Ones(2, 1)), InputError);
  EXPECT_THROW(min_norm_solve(Matrix::Ones(2, 2), Matrix::Ones(2, 1), 0.0), InputError);
}

TEST(Ridge, ScalarShrinkage) {
  Matrix phi(1, 1), y(1, 1);
  phi << 1;
  y << 1;
  EXPECT_NEAR(ridge_solve(phi, y, 1.0)(0, 0), 0.5, 1e-15);
}

TEST(Ridge, ZeroLambdaFullColumnRankIsLeastSquares) {
  const Matrix phi = gaussian(25, 7, 30);
  const Matrix y = gaussian(25, 2, 31);
  const Matrix oracle = (phi.transpose() * phi).ldlt().solve(phi.transpose() * y);
  EXPECT_LE(rel_err(ridge_solve(phi, y, 0.0), oracle), 1e-10);
}

TEST(Ridge, ZeroLambdaRankDeficientIsMinNorm) {
  const Matrix phi = gaussian(4, 9, 32);
  const Matrix y = gaussian(4, 2, 33);
  EXPECT_EQ(ridge_solve(phi, y, 0.0), min_norm_solve(phi, y));
}

TEST(Ridge, MatchesDenseInverse) {
  const Matrix phi = gaussian(20, 10, 34);
  const Matrix y = gaussian(20, 3, 35);
  const double lambda = 0.3;
  const Matrix a = phi.transpose() * phi + lambda * Matrix::Identity(10, 10);
  const Matrix oracle = a.inverse() * phi.transpose() * y;
  EXPECT_LE(rel_err(ridge_solve(phi, y, lambda), oracle), 1e-9);
}

TEST(Ridge, LimitApproachesMinNormMonotonically) {
  const Matrix phi = gaussian(8, 20, 36);
  const Matrix y = gaussian(8, 2, 37);
  const Matrix mn = min_norm_solve(phi, y);
  double prev = INFINITY;
  for (double lambda : {1e-2, 1e-4, 1e-6}) {
    const double gap = (ridge_solve(phi, y, lambda) - mn).norm();
    EXPECT_LT(gap, prev) << "lambda " << lambda;
    prev = gap;
  }
  EXPECT_LT(prev, 1e-4 * mn.norm());
}

TEST(Ridge, NegativeLambdaRejected) {
  EXPECT_THROW(ridge_solve(Matrix::Ones(2, 2), Matrix::Ones(2, 1), -1e-3), InputError);
}

TEST(GdClosedForm, ZeroStepsIsZero) {
  const Matrix phi = gaussian(5, 4, 40);
  const auto r = gd_closed_form(phi, gaussian(5, 2, 41), 0.1, 0);
  EXPECT_TRUE(r.beta.isZero(0.0));
}

TEST(GdClosedForm, OneStepScalar) {
  Matrix phi(1, 1), y(1, 1);
  phi << 1;
  y << 1;
  const auto r = gd_closed_form(phi, y, 0.5, 1);
  EXPECT_NEAR(r.beta(0, 0), 0.5, 1e-15);
  EXPECT_FALSE(r.divergent);
}

TEST(GdClosedForm, MatchesHandLoop) {
  const Matrix phi = gaussian(12, 9, 42);
  const Matrix y = gaussian(12, 2, 43);
  const double smax = largest_singular_value(phi);
  const double eta = 0.5 / (smax * smax);
  for (int t : {1, 2, 7, 40}) {
    const auto r = gd_closed_form(phi, y, eta, t);
    EXPECT_LE((r.beta - gd_loop(phi, y, eta, t)).cwiseAbs().maxCoeff(), 1e-10) << "t=" << t;
  }
}

TEST(GdClosedForm, LongRunConvergesToMinNorm) {
  const Matrix phi = gaussian(6, 10, 44);
  const Matrix y = gaussian(6, 1, 45);
  const double smax = largest_singular_value(phi);
  const auto r = gd_closed_form(phi, y, 1.0 / (smax * smax), 1'000'000);
  EXPECT_LE(rel_err(r.beta, min_norm_solve(phi, y)), 1e-8);
}

TEST(GdClosedForm, DivergentStepIsFlaggedNotFatal) {
  const Matrix phi = gaussian(6, 4, 46);
  const double smax = largest_singular_value(phi);
  const auto r = gd_closed_form(phi, gaussian(6, 1, 47), 2.5 / (smax * smax), 5);
  EXPECT_TRUE(r.divergent);
  EXPECT_TRUE(r.beta.allFinite());
}

TEST(GdClosedForm, RejectsBadArguments) {
  EXPECT_THROW(gd_closed_form(Matrix::Ones(2, 2), Matrix::Ones(2, 1), 0.0, 3), InputError);
  EXPECT_THROW(gd_closed_form(Matrix::Ones(2, 2), Matrix::Ones(2, 1), 0.1, -1), InputError);
}

TEST(GdIterative, ZeroStepsGivesZeroSnapshot) {
  SolverSpec spec;
  spec.method = SolverMethod::gd_iterative;
  const std::vector<std::int64_t> at{0};
  const auto run = gd_iterative(gaussian(5, 3, 50), gaussian(5, 2, 51), spec, at);
  ASSERT_EQ(run.snapshots.size(), 1u);
  EXPECT_EQ(run.snapshots[0].step, 0);
  EXPECT_TRUE(run.snapshots[0].beta.isZero(0.0));
}

TEST(GdIterative, AgreesWithClosedFormThirtyByFifty) {
  const Matrix phi = gaussian(30, 50, 52);
  const Matrix y = gaussian(30, 3, 53);
  SolverSpec spec;
  spec.method = SolverMethod::gd_iterative;
  spec.step_size = 0.1;
  spec.step_scale = StepScale::spectral;
  spec.num_steps = 100;
  const std::vector<std::int64_t> at{50, 100};
  const auto run = gd_iterative(phi, y, spec, at);
  const double smax = largest_singular_value(phi);
  const double eta = 0.1 / (smax * smax);
  EXPECT_DOUBLE_EQ(run.base_step, eta);
  for (const auto& snap : run.snapshots) {
    const auto cf = gd_closed_form(phi, y, eta, snap.step);
    EXPECT_LE((snap.beta - cf.beta).cwiseAbs().maxCoeff(), 1e-8) << "step " << snap.step;
  }
}

TEST(GdIterative, SeededInstancesAgreeAtFifty) {
  for (unsigned s = 0; s < 10; ++s) {
    const Matrix phi = gaussian(10 + s, 8 + 2 * s, 60 + s);
    const Matrix y = gaussian(10 + s, 2, 80 + s);
    SolverSpec spec;
    spec.method = SolverMethod::gd_iterative;
    spec.step_size = 0.9;
    spec.step_scale = StepScale::spectral;
    spec.num_steps = 50;
    const std::vector<std::int64_t> at{50};
    const auto run = gd_iterative(phi, y, spec, at);
    const auto cf = gd_closed_form(phi, y, run.base_step, 50);
    EXPECT_LE((run.snapshots[0].beta - cf.beta).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(GdIterative, TrainMseNonIncreasing) {
  const Matrix phi = gaussian(40, 25, 90);
  const Matrix y = gaussian(40, 2, 91);
  SolverSpec spec;
  spec.method = SolverMethod::gd_iterative;
  spec.step_size = 1.9;
  spec.step_scale = StepScale::spectral;
  spec.num_steps = 500;
  std::vector<std::int64_t> at;
  for (int t = 0; t <= 500; t += 10) at.push_back(t);
  const auto run = gd_iterative(phi, y, spec, at);
  ASSERT_EQ(run.snapshots.size(), at.size());
  for (std::size_t i = 1; i < run.snapshots.size(); ++i) {
    EXPECT_LE(run.snapshots[i].train_mse, run.snapshots[i - 1].train_mse * (1 + 1e-12));
    EXPECT_NEAR(run.snapshots[i].train_mse, train_mse(phi, run.snapshots[i].beta, y), 1e-12);
  }
}

TEST(GdIterative, InverseSqrtScheduleSteps) {
  StepSchedule sched{ScheduleKind::inverse_sqrt, 512};
  EXPECT_DOUBLE_EQ(sched.rate(0.1, 0), 0.1);
  EXPECT_DOUBLE_EQ(sched.rate(0.1, 511), 0.1);
  EXPECT_DOUBLE_EQ(sched.rate(0.1, 512), 0.1 / std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(sched.rate(0.1, 1024), 0.1 / std::sqrt(3.0));
}

TEST(GdIterative, InverseSqrtScheduleMatchesHandLoop) {
  const Matrix phi = gaussian(8, 6, 92);
  const Matrix y = gaussian(8, 1, 93);
  SolverSpec spec;
  spec.method = SolverMethod::gd_iterative;
  spec.step_size = 0.05;
  spec.num_steps = 30;
  spec.schedule = {ScheduleKind::inverse_sqrt, 10};
  const std::vector<std::int64_t> at{30};
  const auto run = gd_iterative(phi, y, spec, at);
  Matrix beta = Matrix::Zero(6, 1);
  for (int t = 0; t < 30; ++t) beta -= 0.05 / std::sqrt(1.0 + t / 10) * phi.transpose() * (phi * beta - y);
  EXPECT_LE((run.snapshots[0].beta - beta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GdIterative, RecordAtValidation) {
  SolverSpec spec;
  spec.num_steps = 5;
  const Matrix phi = Matrix::Ones(2, 2), y = Matrix::Ones(2, 1);
  EXPECT_THROW(gd_iterative(phi, y, spec, std::span<const std::int64_t>{}), InputError);
  const std::vector<std::int64_t> unsorted{3, 1, 5}, short_of_end{1, 2}, negative{-1, 5};
  EXPECT_THROW(gd_iterative(phi, y, spec, unsorted), InputError);
  EXPECT_THROW(gd_iterative(phi, y, spec, short_of_end), InputError);
  EXPECT_THROW(gd_iterative(phi, y, spec, negative), InputError);
}

TEST(Evaluate, ExactInterpolantScoresZero) {
  const Matrix phi = gaussian(5, 12, 100);
  Matrix y = Matrix::Zero(5, 4);
  for (int i = 0; i < 5; ++i) y(i, i % 4) = 1.0;
  const auto m = evaluate(min_norm_solve(phi, y), phi, y);
  EXPECT_LT(m.mse, 1e-20);
  ASSERT_TRUE(m.classification_error);
  EXPECT_EQ(*m.classification_error, 0.0);
}

TEST(Evaluate, ZeroPredictionTieBreaksToClassZero) {
  const int n = 50, c = 10;
  Matrix y = Matrix::Zero(n, c);
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    const int label = (i * 7) % c;
    y(i, label) = 1.0;
    zeros += label == 0;
  }
  const auto m = evaluate(Matrix::Zero(4, c), Matrix::Ones(n, 4), y);
  ASSERT_TRUE(m.classification_error);
  EXPECT_DOUBLE_EQ(*m.classification_error, 1.0 - static_cast<double>(zeros) / n);
}

TEST(Evaluate, MatchesNaiveLoops) {
  const Matrix phi = gaussian(17, 9, 101);
  const Matrix beta = gaussian(9, 4, 102);
  const Matrix y = gaussian(17, 4, 103);
  double sum = 0.0;
  int wrong = 0;
  for (int i = 0; i < 17; ++i) {
    int arg_p = 0, arg_y = 0;
    double best_p = -INFINITY, best_y = -INFINITY;
    for (int k = 0; k < 4; ++k) {
      double p = 0.0;
      for (int j = 0; j < 9; ++j) p += phi(i, j) * beta(j, k);
      sum += (p - y(i, k)) * (p - y(i, k));
      if (p > best_p) best_p = p, arg_p = k;
      if (y(i, k) > best_y) best_y = y(i, k), arg_y = k;
    }
    wrong += arg_p != arg_y;
  }
  const auto m = evaluate(beta, phi, y);
  EXPECT_NEAR(m.mse, sum / (17 * 4), 1e-12);
  EXPECT_DOUBLE_EQ(*m.classification_error, wrong / 17.0);
}

TEST(Evaluate, SingleOutputHasNoClassificationError) {
  const auto m = evaluate(Matrix::Ones(2, 1), Matrix::Ones(3, 2), Matrix::Ones(3, 1));
  EXPECT_FALSE(m.classification_error);
}

TEST(Evaluate, ShapeMismatchIsContractError) {
  EXPECT_THROW(evaluate(Matrix::Ones(2, 1), Matrix::Ones(3, 3), Matrix::Ones(3, 1)), ContractError);
}

TEST(Fit, DispatchesEveryMethod) {
  const Matrix phi = gaussian(10, 6, 110);
  const Matrix y = gaussian(10, 2, 111);
  SolverSpec spec;
  EXPECT_EQ(fit(phi, y, spec).beta, min_norm_solve(phi, y));
  spec.method = SolverMethod::ridge;
  spec.ridge_lambda = 0.5;
  EXPECT_EQ(fit(phi, y, spec).beta, ridge_solve(phi, y, 0.5));
  spec.method = SolverMethod::gd_closed_form;
  spec.num_steps = 20;
  spec.step_scale = StepScale::spectral;
  spec.step_size = 0.5;
  const Matrix a = fit(phi, y, spec).beta;
  spec.method = SolverMethod::gd_iterative;
  const Matrix b = fit(phi, y, spec).beta;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SolverMethodNames, RoundTrip) {
  for (auto m : {SolverMethod::min_norm_svd, SolverMethod::ridge, SolverMethod::gd_closed_form,
                 SolverMethod::gd_iterative})
    EXPECT_EQ(parse_solver_method(to_string(m)), m);
  EXPECT_FALSE(parse_solver_method("sgd"));
}
