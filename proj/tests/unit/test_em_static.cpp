#include <gtest/gtest.h>

#include "helpers.hpp"
#include "ptfa/em_static.hpp"
#include "ptfa/simulation.hpp"

using namespace ptfa;
using ptfa::testing::gaussian;

TEST(StaticPosterior, MatchesDenseConditioning) {
  std::mt19937_64 rng(21);
  const int T = 15, p = 5, q = 3, k = 2;
  FactorParams th = ptfa::testing::random_params(p, q, k, rng);
  th.V_F = ptfa::testing::random_spd(k, rng);
  const Matrix X = gaussian(T, p, rng), Y = gaussian(T, q, rng);
  Matrix L(p + q, k);
  L << th.P, th.Q;
  Matrix C = L * th.V_F * L.transpose();
  C.diagonal().head(p).array() += th.sigma2_x;
  C.diagonal().tail(q).array() += th.sigma2_y;
  const Matrix gain = th.V_F * L.transpose() * C.inverse();
  const Matrix omega = th.V_F - gain * L * th.V_F;
  Matrix Z(T, p + q);
  Z << X, Y;
  const Matrix M = Z * gain.transpose();
  const PosteriorMoments post = posterior_moments(th, X, Y);
  EXPECT_LT((post.Omega - omega).norm(), 1e-10);
  EXPECT_LT((post.M - M).norm(), 1e-10);
  EXPECT_LT((post.V - (T * omega + M.transpose() * M)).norm(), 1e-9);
}

TEST(StaticEm, LogLikelihoodNonDecreasing) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DataPanel d = ptfa::testing::simple_panel(100 + seed);
    EmConfig cfg;
    cfg.k = 2;
    cfg.seed = seed;
    cfg.track_loglik = true;
    cfg.max_iter = 300;
    const FitResult r = fit(d, cfg);
    ASSERT_EQ(r.loglik_path.size(), static_cast<size_t>(r.n_iter) + 1);
    for (size_t i = 1; i < r.loglik_path.size(); ++i) {
      EXPECT_GE(r.loglik_path[i] - r.loglik_path[i - 1], -1e-8 * std::abs(r.loglik_path[i])) << "iteration " << i;
    }
  }
}

TEST(StaticEm, FixedPointSatisfiesFirstOrderConditions) {
  const DataPanel d = ptfa::testing::simple_panel(7);
  EmConfig cfg;
  cfg.k = 2;
  cfg.tolerance = 1e-10;
  cfg.max_iter = 20000;
  const FitResult r = fit(d, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(r.foc_residual, 1e-4);
  EXPECT_NEAR(r.foc_residual, mle_foc_residual(r.params, d), 1e-12);

  // Central differences in every loading and both noise variances.
  const double h = 1e-5;
  auto ll = [&](const FactorParams& th) { return marginal_log_likelihood(th, d); };
  double worst = 0.0;
  for (int which = 0; which < 2; ++which) {
    const Matrix& base = which == 0 ? r.params.P : r.params.Q;
    for (Eigen::Index i = 0; i < base.rows(); ++i)
      for (Eigen::Index j = 0; j < base.cols(); ++j) {
        FactorParams up = r.params, dn = r.params;
        (which == 0 ? up.P : up.Q)(i, j) += h;
        (which == 0 ? dn.P : dn.Q)(i, j) -= h;
        worst = std::max(worst, std::abs(ll(up) - ll(dn)) / (2 * h));
      }
  }
  EXPECT_LT(worst, 1e-3);
  FactorParams up = r.params, dn = r.params;
  up.sigma2_x += h;
  dn.sigma2_x -= h;
  EXPECT_LT(std::abs(ll(up) - ll(dn)) / (2 * h), 1e-3);
}

TEST(StaticEm, StepIsEquivariantUnderRotation) {
  std::mt19937_64 rng(22);
  const DataPanel d = ptfa::testing::simple_panel(8);
  const FactorParams th = ptfa::testing::random_params(d.p(), d.q(), 2, rng);
  const double a = 1.1;
  Matrix R(2, 2);
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  FactorParams rot = th;
  rot.P = th.P * R;
  rot.Q = th.Q * R;
  const FactorParams s0 = em_step(th, d.X, d.Y);
  const FactorParams s1 = em_step(rot, d.X, d.Y);
  EXPECT_LT((s0.P * R - s1.P).norm(), 1e-9);
  EXPECT_NEAR(s0.sigma2_x, s1.sigma2_x, 1e-12);
  EXPECT_NEAR(s0.sigma2_y, s1.sigma2_y, 1e-12);
}

TEST(StaticEm, DeterministicForSeed) {
  const DataPanel d = ptfa::testing::simple_panel(9);
  EmConfig cfg;
  cfg.k = 2;
  cfg.seed = 5;
  const FitResult a = fit(d, cfg), b = fit(d, cfg);
  EXPECT_EQ(a.n_iter, b.n_iter);
  EXPECT_EQ((a.params.P - b.params.P).norm(), 0.0);
}

TEST(StaticEm, ConfigValidation) {
  const DataPanel d = ptfa::testing::simple_panel(10, 20, 4, 2, 1);
  EmConfig cfg;
  cfg.k = 0;
  EXPECT_THROW(fit(d, cfg), Error);
  cfg.k = 7;
  EXPECT_THROW(fit(d, cfg), Error);
  cfg.k = 1;
  cfg.tolerance = 0.0;
  EXPECT_THROW(fit(d, cfg), Error);
  cfg.tolerance = 1e-6;
  cfg.max_iter = 1;
  const FitResult r = fit(d, cfg);
  EXPECT_EQ(r.n_iter, 1);
  EXPECT_FALSE(r.converged);
}

TEST(StaticEm, VariancesStayAboveFloor) {
  // Noise-free rank-one panel drives the feature variance to the floor.
  std::mt19937_64 rng(23);
  const Vector f = gaussian(40, 1, rng);
  const Matrix X = f * gaussian(1, 3, rng);
  const Matrix Y = f * gaussian(1, 1, rng) + gaussian(40, 1, rng, 0.1);
  const DataPanel d = standardize(X, Y);
  EmConfig cfg;
  cfg.max_iter = 200;
  const FitResult r = fit(d, cfg);
  EXPECT_GE(r.params.sigma2_x, kVarianceFloor);
  EXPECT_LT(r.params.sigma2_x, 1e-3);
}

TEST(StaticEm, NoiselessPanelIsReproduced) {
  DgpSpec s;
  s.sigma_x = 0.0;
  s.sigma_y = 0.0;
  s.seed = 24;
  const SimulatedData sim = generate(s);
  const DataPanel d = standardize(sim.raw_X, sim.raw_Y);
  EmConfig cfg;
  cfg.k = 2;
  cfg.max_iter = 5000;
  const FitResult r = fit(d, cfg);
  EXPECT_GT(r_squared(d.Y, fitted_targets(r.params, r.posterior)).average, 0.999);
}
