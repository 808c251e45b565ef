#pragma once

// Targeted dynamic factor model: f_t = A f_{t-1} + v_t with v_t ~ N(0, Sigma_v)
// and f_0 a fixed initial condition. The factor posterior is block-tridiagonal
// in precision and is handled by the banded solver.

#include <string>
#include <vector>

#include "ptfa/banded.hpp"
#include "ptfa/em_static.hpp"

namespace ptfa {

/// base.V_F mirrors Sigma_v.
struct DfmParams {
  FactorParams base;
  Matrix A;
  Vector f0;
  Matrix Sigma_v;  // diagonal

  int k() const { return base.k(); }
  /// Largest modulus among the eigenvalues of A.
  double spectral_radius() const;
  void validate() const;
};

struct DfmConfig {
  EmConfig base;
  /// Keep Sigma_v at its starting value (base.V_F) instead of estimating it.
  bool fix_innovation_variance = true;
  /// When false, A and f0 stay at their starting values (zero by default).
  bool estimate_dynamics = true;
};

/// Band moments of the factor posterior. V0 = sum_t V_tt,
/// V1 = sum_{t>=2} V_{t-1,t-1}, V10 = sum_{t>=2} V_{t,t-1} with
/// V_{s,t} = Omega_{s,t} + m_s m_t'.
struct DfmPosterior {
  Matrix M;
  Matrix V0;
  Matrix V1;
  Matrix V10;
  Vector m1;
  Matrix Omega11;
  banded::InverseBand band;
  double log_det_precision = 0.0;
};

/// Initial parameters: base from initialize_params, A = 0, f0 = 0, Sigma_v = V_F.
DfmParams initialize_dfm_params(int p, int q, const DfmConfig& config);

/// Y may have fewer rows than X: trailing periods then carry features only.
DfmPosterior dfm_posterior(const DfmParams& params, const Matrix& X, const Matrix& Y);

/// diag of (1/T) E[sum_t (f_t - A f_{t-1})(f_t - A f_{t-1})'] with f_0 = f0, floored.
Matrix innovation_variance(const DfmPosterior& post, const Matrix& A, const Vector& f0);

struct Dynamics {
  Matrix A;
  Vector f0;
  Matrix Sigma_v;
};

/// A = V10 V1^-1, then Sigma_v (when estimated) from the expected innovation
/// outer products at the new A and the current f0, then
/// f0 = (A' Sigma_v A)^+ A' Sigma_v m1 at the new A and Sigma_v.
/// Throws SingularLagMoment when V1 is not positive definite.
Dynamics update_dynamics(const DfmPosterior& post, const DfmParams& params, bool estimate_sigma_v);

/// Observed-data log-likelihood log p(Z) evaluated in O(T k^3) from the
/// banded posterior: log p(Z | M) + log p(M) - log p(M | Z).
double dfm_marginal_log_likelihood(const DfmParams& params, const Matrix& X, const Matrix& Y);

/// One EM iteration on complete data.
DfmParams dfm_em_step(const DfmParams& current, const Matrix& X, const Matrix& Y, const DfmConfig& config);

struct DfmFitResult {
  FitResult fit;
  DfmParams params;
  std::vector<std::string> warnings;
};

/// Masked cells are zero-filled and refreshed from M L' after every E-step.
DfmFitResult fit_dfm(const DataPanel& panel, const DfmConfig& config);
DfmFitResult fit_dfm(const DataPanel& panel, const DfmConfig& config, DfmParams init);

}  // namespace ptfa
