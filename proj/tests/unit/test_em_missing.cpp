#include <gtest/gtest.h>

#include <limits>

#include "helpers.hpp"
#include "ptfa/em_missing.hpp"

using namespace ptfa;

TEST(MissingEm, NoMaskReproducesStaticBitwise) {
  const DataPanel d = ptfa::testing::simple_panel(31);
  EmConfig cfg;
  cfg.k = 2;
  cfg.seed = 4;
  cfg.track_loglik = true;
  const FitResult a = fit(d, cfg);
  const MissingFitResult b = fit_missing(d, cfg);
  EXPECT_EQ(a.n_iter, b.fit.n_iter);
  EXPECT_TRUE(a.params.P == b.fit.params.P);
  EXPECT_TRUE(a.params.Q == b.fit.params.Q);
  EXPECT_EQ(a.params.sigma2_x, b.fit.params.sigma2_x);
  EXPECT_EQ(a.loglik_path, b.fit.loglik_path);
}

TEST(MissingEm, ImputeTouchesOnlyMaskedCells) {
  std::mt19937_64 rng(32);
  DataPanel d = ptfa::testing::simple_panel(32, 30, 5, 2, 2);
  d.mask_x(3, 1) = true;
  d.mask_y(7, 0) = true;
  d.X(3, 1) = 0.0;
  d.Y(7, 0) = 0.0;
  const Matrix M = ptfa::testing::gaussian(30, 2, rng);
  const Matrix P = ptfa::testing::gaussian(5, 2, rng);
  const Matrix Q = ptfa::testing::gaussian(2, 2, rng);
  const DataPanel out = impute_step(d, M, P, Q);
  EXPECT_DOUBLE_EQ(out.X(3, 1), M.row(3).dot(P.row(1)));
  EXPECT_DOUBLE_EQ(out.Y(7, 0), M.row(7).dot(Q.row(0)));
  Matrix diff = out.X - d.X;
  diff(3, 1) = 0.0;
  EXPECT_EQ(diff.norm(), 0.0);
  EXPECT_TRUE(out.mask_x == d.mask_x);
}

TEST(MissingEm, RecoversSignalUnderModerateMasking) {
  DgpSpec spec;
  spec.seed = 33;
  const SimulatedData sim = generate(spec);
  std::mt19937_64 rng(34);
  const Matrix Xm = mask_at_random(sim.raw_X, 0.2, rng);
  const Matrix Ym = mask_at_random(sim.raw_Y, 0.2, rng);
  EXPECT_EQ((Xm.array().isNaN()).count(), 400);
  const DataPanel d = standardize(Xm, Ym, MissingPolicy::ZeroImpute);
  EmConfig cfg;
  cfg.k = 2;
  const MissingFitResult r = fit_missing(d, cfg);
  EXPECT_TRUE(r.fit.converged);
  EXPECT_TRUE(r.imputed.mask_x == d.mask_x);
  for (Eigen::Index t = 0; t < d.X.rows(); ++t)
    for (Eigen::Index j = 0; j < d.X.cols(); ++j)
      if (!d.mask_x(t, j)) EXPECT_EQ(r.imputed.X(t, j), d.X(t, j));
  const Matrix Y_true = d.scaler.scale_y(sim.raw_Y);
  const Matrix Yhat = fitted_targets(r.fit.params, r.fit.posterior);
  EXPECT_GT(r_squared(Y_true, Yhat).average, 0.2);
}

TEST(MissingEm, StaticRejectsMasks) {
  DataPanel d = ptfa::testing::simple_panel(35, 30, 4, 2, 1);
  d.mask_x(0, 0) = true;
  EmConfig cfg;
  try {
    fit(d, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingValues);
  }
}

TEST(MissingEm, HeldOutCellOfNoiselessPanel) {
  // Exactly rank 2 on the standardized scale.
  std::mt19937_64 rng(36);
  const Matrix F = ptfa::testing::gaussian(80, 2, rng);
  const Matrix X = F * ptfa::testing::gaussian(2, 6, rng);
  const Matrix Y = F * ptfa::testing::gaussian(2, 2, rng);
  DataPanel d = DataPanel::from_standardized(X, Y);
  d.mask_x(10, 3) = true;
  d.X(10, 3) = 0.0;
  EmConfig cfg;
  cfg.k = 2;
  cfg.tolerance = 1e-10;
  cfg.max_iter = 20000;
  const MissingFitResult r = fit_missing(d, cfg);
  EXPECT_NEAR(r.imputed.X(10, 3), X(10, 3), 1e-3);
}
