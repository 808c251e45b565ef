#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "helpers.hpp"
#include "ptfa/forecast.hpp"

using namespace ptfa;

namespace {

SimulatedData persistent_panel(std::uint64_t seed, int T = 160) {
  DgpSpec s;
  s.T = T;
  s.p = 6;
  s.q = 2;
  s.k = 1;
  s.factor_persistence = 0.8;
  s.seed = seed;
  return generate(s);
}

}  // namespace

TEST(Forecast, ReadsNothingAfterWindowEnd) {
  const SimulatedData d = persistent_panel(91);
  ForecastSpec spec;
  spec.window = 60;
  const int t = 80;
  Matrix Xp = d.raw_X, Yp = d.raw_Y;
  Xp.bottomRows(d.raw_X.rows() - t - 1).setConstant(std::numeric_limits<double>::quiet_NaN());
  Yp.bottomRows(d.raw_Y.rows() - t - 1).setConstant(std::numeric_limits<double>::quiet_NaN());
  Xp.topRows(t - spec.window + 1).setConstant(std::numeric_limits<double>::quiet_NaN());
  for (ForecastMethod m : {ForecastMethod::Ptfa, ForecastMethod::PtfaDfm, ForecastMethod::PtfaSv,
                           ForecastMethod::Pls, ForecastMethod::Pca, ForecastMethod::Ppca, ForecastMethod::Null}) {
    for (int h : {1, 3}) {
      const WindowForecast clean = forecast_at(d.raw_X, d.raw_Y, t, h, m, 1, spec);
      const WindowForecast poisoned = forecast_at(Xp, Yp, t, h, m, 1, spec);
      ASSERT_TRUE(clean.forecast.allFinite()) << to_string(m);
      EXPECT_TRUE(clean.forecast == poisoned.forecast) << to_string(m) << " h=" << h;
    }
  }
}

TEST(Forecast, NullMsfeNearOneOnWhiteNoise) {
  std::mt19937_64 rng(92);
  const Matrix X = ptfa::testing::gaussian(700, 3, rng);
  const Matrix Y = ptfa::testing::gaussian(700, 2, rng);
  ForecastSpec spec;
  spec.window = 100;
  spec.methods = {ForecastMethod::Null};
  const ForecastTable t = rolling_evaluate(X, Y, spec);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].k, 0);
  EXPECT_EQ(t.rows[0].n_points, 600);
  EXPECT_EQ(static_cast<int>(t.window_ends.size()), 600);
  EXPECT_NEAR(t.rows[0].msfe, 1.0, 0.1);
}

TEST(Forecast, PtfaBeatsNullOnPersistentFactors) {
  const SimulatedData d = persistent_panel(93, 260);
  ForecastSpec spec;
  spec.window = 120;
  spec.methods = {ForecastMethod::Ptfa, ForecastMethod::Null};
  spec.jobs = 2;
  const ForecastTable t = rolling_evaluate(d.raw_X, d.raw_Y, spec);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].n_failed, 0);
  EXPECT_LT(t.rows[0].msfe, t.rows[1].msfe);
  std::ostringstream os;
  write_msfe_csv(os, t);
  EXPECT_NE(os.str().find("method,horizon,k,msfe,n_points,n_failed"), std::string::npos);
}

TEST(Forecast, DegenerateWindows) {
  const SimulatedData d = persistent_panel(94, 50);
  ForecastSpec spec;
  spec.window = 48;
  spec.horizons = {3};
  EXPECT_THROW(rolling_evaluate(d.raw_X, d.raw_Y, spec), Error);
  spec.window = 4;
  spec.horizons = {3};
  try {
    rolling_evaluate(d.raw_X, d.raw_Y, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
  spec.window = 10;
  EXPECT_THROW(forecast_at(d.raw_X, d.raw_Y, 5, 1, ForecastMethod::Ptfa, 1, spec), Error);
  EXPECT_EQ(parse_forecast_method("ptfa-dfm"), ForecastMethod::PtfaDfm);
  EXPECT_THROW(parse_forecast_method("arima"), Error);
}
