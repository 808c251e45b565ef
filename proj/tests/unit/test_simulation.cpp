#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"
#include "ptfa/simulation.hpp"

using namespace ptfa;

namespace {

DgpSpec big(DgpKind kind, std::uint64_t seed) {
  DgpSpec s;
  s.kind = kind;
  s.T = 40000;
  s.p = 4;
  s.q = 2;
  s.k = 2;
  s.sigma_x = 1.5;
  s.sigma_y = 0.5;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Dgp, SameSeedSameDraws) {
  DgpSpec s;
  s.seed = 81;
  const SimulatedData a = generate(s), b = generate(s);
  EXPECT_TRUE(a.raw_X == b.raw_X);
  EXPECT_TRUE(a.raw_Y == b.raw_Y);
  s.seed = 82;
  EXPECT_FALSE(generate(s).raw_X == a.raw_X);
  EXPECT_LT((a.truth.Y_clean - a.truth.F * a.truth.Q.transpose()).norm(), 1e-12);
  EXPECT_GE(a.truth.P.minCoeff(), 0.0);
  EXPECT_LE(a.truth.P.maxCoeff(), 1.0);
}

TEST(Dgp, SimpleNoiseMoments) {
  const SimulatedData d = generate(big(DgpKind::Simple, 83));
  const Matrix ex = d.raw_X - d.truth.F * d.truth.P.transpose();
  const Matrix ey = d.raw_Y - d.truth.Y_clean;
  const Matrix cx = ex.transpose() * ex / ex.rows();
  EXPECT_NEAR(cx.diagonal().mean(), 2.25, 0.05);
  EXPECT_NEAR(cx(0, 1), 0.0, 0.05);
  EXPECT_NEAR(ey.squaredNorm() / ey.size(), 0.25, 0.01);
  const Matrix cf = d.truth.F.transpose() * d.truth.F / d.truth.F.rows();
  EXPECT_LT((cf - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Dgp, SystemNoiseIsToeplitz) {
  const SimulatedData d = generate(big(DgpKind::System, 84));
  const Matrix ex = d.raw_X - d.truth.F * d.truth.P.transpose();
  const Matrix c = ex.transpose() * ex / (ex.rows() * 2.25);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(c(i, j), std::pow(0.5, std::abs(i - j)), 0.04) << i << "," << j;
}

TEST(Dgp, NonGaussianNoiseIsCentered) {
  const SimulatedData d = generate(big(DgpKind::NonGaussian, 85));
  const Matrix ey = (d.raw_Y - d.truth.Y_clean) / 0.5;
  // chi2(1) - 1: mean 0, variance 2, positive skew.
  EXPECT_NEAR(ey.mean(), 0.0, 0.03);
  EXPECT_NEAR(ey.squaredNorm() / ey.size(), 2.0, 0.1);
  EXPECT_GE(ey.minCoeff(), -1.0);
  const Matrix ex = (d.raw_X - d.truth.F * d.truth.P.transpose()) / 1.5;
  EXPECT_NEAR(ex.mean(), 0.0, 0.03);
}

TEST(Dgp, PersistentFactors) {
  DgpSpec s = big(DgpKind::Simple, 86);
  s.factor_persistence = 0.7;
  const SimulatedData d = generate(s);
  const Vector f = d.truth.F.col(0);
  const double rho = f.tail(f.size() - 1).dot(f.head(f.size() - 1)) / f.head(f.size() - 1).squaredNorm();
  EXPECT_NEAR(rho, 0.7, 0.02);
}

TEST(Dgp, Validation) {
  DgpSpec s;
  s.k = 0;
  EXPECT_THROW(generate(s), Error);
  s = DgpSpec{};
  s.rho_x = 1.5;
  s.kind = DgpKind::System;
  EXPECT_THROW(generate(s), Error);
  EXPECT_EQ(parse_dgp_kind("nongaussian"), DgpKind::NonGaussian);
  EXPECT_THROW(parse_dgp_kind("gamma"), Error);
}

TEST(Masking, ExactFraction) {
  std::mt19937_64 rng(87);
  const Matrix raw = Matrix::Ones(50, 7);
  const Matrix m = mask_at_random(raw, 0.2, rng);
  EXPECT_EQ(m.array().isNaN().count(), 70);
  EXPECT_EQ(mask_at_random(raw, 0.0, rng).array().isNaN().count(), 0);
  EXPECT_THROW(mask_at_random(raw, 1.5, rng), Error);
}

TEST(Replications, StreamsAreDistinctAndReproducible) {
  auto a = replication_rng(1, 2, 0), b = replication_rng(1, 2, 0), c = replication_rng(1, 2, 1),
       e = replication_rng(1, 3, 0);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, e());
}

TEST(Replications, ThreadCountDoesNotChangeResults) {
  DgpSpec s;
  s.seed = 88;
  ReplicationOptions opt;
  opt.n_reps = 12;
  const std::vector<SimMethod> methods{SimMethod::Ptfa, SimMethod::Pls, SimMethod::Pca};
  opt.jobs = 1;
  const ReplicationReport a = run_replications(s, methods, opt);
  opt.jobs = 4;
  const ReplicationReport b = run_replications(s, methods, opt);
  EXPECT_TRUE(a.r2 == b.r2);
  EXPECT_EQ(a.n_failed(SimMethod::Ptfa), 0);
  EXPECT_EQ(a.samples(SimMethod::Pls).size(), 12u);
  EXPECT_EQ(a.paired_difference(SimMethod::Ptfa, SimMethod::Pls).size(), 12u);
  EXPECT_GE(a.win_fraction(SimMethod::Ptfa, SimMethod::Pls), 0.0);
}

TEST(Replications, MissingDataTruthUsesMaskedScaler) {
  DgpSpec s;
  s.seed = 89;
  ReplicationOptions opt;
  opt.missing_x = 0.3;
  opt.missing_y = 0.1;
  const ReplicationData d = replication_data(s, 0, opt);
  EXPECT_EQ(d.panel.mask_x.count(), 600);
  EXPECT_EQ(d.panel.mask_y.count(), 60);
  for (Eigen::Index t = 0; t < d.Y_true.rows(); ++t)
    for (Eigen::Index j = 0; j < d.Y_true.cols(); ++j)
      if (!d.panel.mask_y(t, j)) EXPECT_NEAR(d.Y_true(t, j), d.panel.Y(t, j), 1e-12);
}

TEST(Grid, ShapesAndCsv) {
  DgpSpec s;
  s.seed = 90;
  s.T = 60;
  ReplicationOptions opt;
  opt.n_reps = 2;
  const GridReport g = noise_grid(s, {0.5, 1.0}, {0.5, 1.0, 2.0}, {SimMethod::Ptfa, SimMethod::Pls}, opt);
  ASSERT_EQ(g.cells.size(), 6u);
  EXPECT_EQ(g.cells[1].x, 0.5);
  EXPECT_EQ(g.cells[1].y, 1.0);
  std::ostringstream sum, reps;
  write_summary_csv(sum, g);
  write_replications_csv(reps, g);
  EXPECT_EQ(sum.str().substr(0, sum.str().find('\n')), "grid,x,y,method,median_r2,n,n_failed");
  const std::string rows = reps.str();
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 1 + 6 * 2 * 2);
  EXPECT_THROW(missing_grid(s, {0.95}, {0.0}, {SimMethod::Ptfa}, opt), Error);
}

TEST(Median, HandExamples) {
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(Grid, LowNoiseCellFitsAlmostPerfectly) {
  DgpSpec s;
  s.seed = 91;
  ReplicationOptions opt;
  opt.n_reps = 20;
  const GridReport g = noise_grid(s, {0.1}, {0.1}, {SimMethod::Ptfa, SimMethod::Pls}, opt);
  EXPECT_GT(g.cells[0].report.median(SimMethod::Ptfa), 0.95);
  EXPECT_GT(g.cells[0].report.median(SimMethod::Pls), 0.95);
}

TEST(Replications, PcaAndPpcaAgree) {
  DgpSpec s;
  s.seed = 92;
  ReplicationOptions opt;
  opt.n_reps = 50;
  const ReplicationReport r = run_replications(s, {SimMethod::Pca, SimMethod::Ppca}, opt);
  std::vector<double> gaps;
  for (double v : r.paired_difference(SimMethod::Pca, SimMethod::Ppca)) gaps.push_back(std::abs(v));
  EXPECT_LT(median(gaps), 0.02);
}
