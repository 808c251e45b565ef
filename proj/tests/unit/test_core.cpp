#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "ptfa/core.hpp"

using namespace ptfa;
using ptfa::testing::gaussian;

TEST(Standardize, ThreePointColumn) {
  Matrix X(3, 1), Y(3, 1);
  X << 1, 2, 3;
  Y << 10, 10, 13;
  const DataPanel d = standardize(X, Y);
  const double s = std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(d.X(0, 0), -1.0 / s, 1e-14);
  EXPECT_NEAR(d.X(1, 0), 0.0, 1e-14);
  EXPECT_NEAR(d.X(2, 0), 1.0 / s, 1e-14);
  EXPECT_NEAR(d.scaler.mean_y(0), 11.0, 1e-14);
  EXPECT_NEAR(d.scaler.sd_y(0), std::sqrt(2.0), 1e-14);
  EXPECT_FALSE(d.has_missing());
}

TEST(Standardize, UnitMomentsAndRoundTrip) {
  std::mt19937_64 rng(3);
  const Matrix X = gaussian(50, 4, rng, 3.0).array() + 7.0;
  const Matrix Y = gaussian(50, 2, rng, 0.5).array() - 1.0;
  const DataPanel d = standardize(X, Y);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(d.X.col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(d.X.col(j).squaredNorm() / 50.0, 1.0, 1e-12);
  }
  EXPECT_LT((d.scaler.unscale_x(d.X) - X).norm(), 1e-10);
  EXPECT_LT((d.scaler.unscale_y(d.Y) - Y).norm(), 1e-10);
}

TEST(Standardize, Errors) {
  Matrix X(3, 2), Y(3, 1);
  X << 1, 5, 2, 5, 3, 5;
  Y << 1, 2, 4;
  try {
    standardize(X, Y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConstantColumn);
  }
  X(1, 1) = 6;
  X(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    standardize(X, Y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingValues);
  }
  const DataPanel d = standardize(X, Y, MissingPolicy::ZeroImpute);
  EXPECT_TRUE(d.mask_x(0, 0));
  EXPECT_EQ(d.X(0, 0), 0.0);
  EXPECT_NEAR(d.scaler.mean_x(0), 2.5, 1e-14);
  X.col(0).setConstant(std::numeric_limits<double>::quiet_NaN());
  try {
    standardize(X, Y, MissingPolicy::ZeroImpute);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllMissingColumn);
  }
}

TEST(LogLikelihood, MatchesPerPeriodGaussianDensity) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const int T = 30, p = 5, q = 2, k = 2;
    FactorParams th = ptfa::testing::random_params(p, q, k, rng);
    th.V_F = ptfa::testing::random_spd(k, rng);
    const Matrix X = gaussian(T, p, rng);
    const Matrix Y = gaussian(T, q, rng);
    Matrix L(p + q, k);
    L << th.P, th.Q;
    Matrix C = L * th.V_F * L.transpose();
    for (int i = 0; i < p; ++i) C(i, i) += th.sigma2_x;
    for (int i = p; i < p + q; ++i) C(i, i) += th.sigma2_y;
    double oracle = 0.0;
    for (int t = 0; t < T; ++t) {
      Vector z(p + q);
      z << X.row(t).transpose(), Y.row(t).transpose();
      oracle += ptfa::testing::gaussian_logpdf(z, C);
    }
    EXPECT_NEAR(marginal_log_likelihood(th, X, Y), oracle, 1e-9 * std::abs(oracle));
  }
}

TEST(LogLikelihood, InvariantToFactorRotation) {
  std::mt19937_64 rng(12);
  const DataPanel d = ptfa::testing::simple_panel(1);
  FactorParams th = ptfa::testing::random_params(d.p(), d.q(), 2, rng);
  const double angle = 0.7;
  Matrix R(2, 2);
  R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  FactorParams rot = th;
  rot.P = th.P * R;
  rot.Q = th.Q * R;
  EXPECT_NEAR(marginal_log_likelihood(th, d), marginal_log_likelihood(rot, d), 1e-8);
  EXPECT_NEAR(mle_foc_residual(th, d), mle_foc_residual(rot, d), 1e-8);
}

TEST(Predict, EqualsConditionalMeanOfJointGaussian) {
  std::mt19937_64 rng(13);
  const int p = 6, q = 2, k = 3;
  FactorParams th = ptfa::testing::random_params(p, q, k, rng);
  th.V_F = ptfa::testing::random_spd(k, rng);
  const Matrix Xn = gaussian(8, p, rng);
  Matrix Cxx = th.P * th.V_F * th.P.transpose();
  Cxx.diagonal().array() += th.sigma2_x;
  const Matrix Cyx = th.Q * th.V_F * th.P.transpose();
  const Matrix oracle = (Cyx * Cxx.ldlt().solve(Xn.transpose())).transpose();
  EXPECT_LT((predict_targets(th, Xn) - oracle).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Predict, LinearInFeatures) {
  std::mt19937_64 rng(14);
  const FactorParams th = ptfa::testing::random_params(4, 3, 2, rng);
  const Matrix a = gaussian(5, 4, rng), b = gaussian(5, 4, rng);
  const Matrix lhs = predict_targets(th, 2.0 * a - 3.0 * b);
  const Matrix rhs = 2.0 * predict_targets(th, a) - 3.0 * predict_targets(th, b);
  EXPECT_LT((lhs - rhs).norm(), 1e-10);
}

TEST(RSquared, HandExamples) {
  Matrix Y(4, 2), Yh(4, 2);
  Y << 1, 2, 2, 2, 3, 2, 4, 3;
  Yh << 1, 2, 2, 2, 3, 2, 5, 3;
  // column 0: SSE 1, SST 5; column 1: perfect fit.
  const RSquared r = r_squared(Y, Yh);
  EXPECT_NEAR(r.per_target(0), 0.8, 1e-14);
  EXPECT_NEAR(r.per_target(1), 1.0, 1e-14);
  EXPECT_NEAR(r.average, 0.9, 1e-14);
  Yh.col(0).setConstant(2.5);
  EXPECT_NEAR(r_squared(Y, Yh).per_target(0), 0.0, 1e-14);
  Y.col(1).setConstant(1.0);
  EXPECT_THROW(r_squared(Y, Yh), Error);
}

TEST(FactorParams, Validation) {
  FactorParams th;
  th.P = Matrix::Ones(3, 2);
  th.Q = Matrix::Ones(2, 2);
  th.V_F = Matrix::Identity(2, 2);
  EXPECT_NO_THROW(th.validate());
  th.sigma2_y = 0.0;
  EXPECT_THROW(th.validate(), Error);
  th.sigma2_y = 1.0;
  th.V_F(0, 1) = 0.5;
  EXPECT_THROW(th.validate(), Error);
  th.V_F = Matrix::Identity(3, 3);
  EXPECT_THROW(th.validate(), Error);
}
