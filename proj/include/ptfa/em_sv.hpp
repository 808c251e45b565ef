#pragma once

// EM with time-varying noise variances tracked by exponentially weighted
// moving averages of the per-period posterior residual variance.

#include <vector>

#include "ptfa/em_static.hpp"

namespace ptfa {

struct SvConfig {
  EmConfig base;
  double lambda_x = 0.94;
  double lambda_y = 0.94;

  void validate(int T, int p, int q) const;
};

struct VolatilityPath {
  Vector sigma2_x;
  Vector sigma2_y;

  static VolatilityPath constant(int T, double sigma2_x, double sigma2_y);
};

struct PeriodPosterior {
  Vector m;
  Matrix Omega;
};

/// Omega_t = (V_F^-1 + P'P/sx2(t) + Q'Q/sy2(t))^-1,
/// m_t = Omega_t (P'x_t/sx2(t) + Q'y_t/sy2(t)).
PeriodPosterior sv_posterior_period(const FactorParams& params, double sigma2_x, double sigma2_y,
                                    const Vector& x_t, const Vector& y_t);

/// lambda * prev + (1 - lambda) * (residual_sq_mean + trace_term).
double ewma_update(double residual_sq_mean, double trace_term, double prev, double lambda);

/// Forward recursion over raw per-period estimates; the first entry is kept raw.
/// Every output is floored at kVarianceFloor.
Vector ewma_path(const Vector& raw, double lambda);

/// Per-period moments; V = sum_t Omega_t + M'M.
struct SvPosterior {
  Matrix M;
  std::vector<Matrix> omegas;
  Matrix V;
};

SvPosterior sv_posterior(const FactorParams& params, const VolatilityPath& vol, const Matrix& X, const Matrix& Y);

/// Raw estimates (1/p)[||x_t - P m_t||^2 + tr(P'P Omega_t)] (and likewise for y)
/// smoothed by ewma_path.
VolatilityPath update_volatility(const SvPosterior& post, const Matrix& P, const Matrix& Q, const Matrix& X,
                                 const Matrix& Y, double lambda_x, double lambda_y);

/// fit.params holds the time-averaged variances; fit.posterior.Omega is the
/// average per-period covariance.
struct SvFitResult {
  FitResult fit;
  VolatilityPath volatility;
  std::vector<Matrix> omegas;
};

/// Observed-data log-likelihood with per-period covariance L V_F L' + Sigma_t.
double sv_marginal_log_likelihood(const FactorParams& params, const VolatilityPath& vol, const Matrix& X,
                                  const Matrix& Y);

SvFitResult fit_sv(const DataPanel& panel, const SvConfig& config);
SvFitResult fit_sv(const DataPanel& panel, const SvConfig& config, FactorParams init);

}  // namespace ptfa
