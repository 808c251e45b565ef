#pragma once

#include <cstdint>
#include <optional>

#include "ptfa/core.hpp"

namespace ptfa {

struct EmConfig {
  int k = 1;
  double tolerance = 1e-6;
  int max_iter = 1000;
  std::optional<Matrix> V_F;  // identity when unset
  std::uint64_t seed = 0;
  /// Evaluate the observed-data log-likelihood after every iteration.
  bool track_loglik = false;
  /// Evaluate the first-order-condition residual at exit.
  bool compute_foc = true;

  Matrix prior_variance() const;
  /// Throws InvalidArgument unless 1 <= k <= min(p + q, T), tolerance > 0, max_iter >= 1.
  void validate(int T, int p, int q) const;
};

/// Random starting loadings: iid N(0, 1/k) entries from a generator seeded
/// with config.seed, unit noise variances.
FactorParams initialize_params(int p, int q, const EmConfig& config);

/// Omega = (V_F^-1 + P'P/sx2 + Q'Q/sy2)^-1, M = (X P/sx2 + Y Q/sy2) Omega,
/// V = T Omega + M'M. Uses X and Y as given (masked cells included).
PosteriorMoments posterior_moments(const FactorParams& params, const Matrix& X, const Matrix& Y);
PosteriorMoments posterior_moments(const FactorParams& params, const DataPanel& panel);

struct Loadings {
  Matrix P;
  Matrix Q;
};

/// Stacked M-step [P; Q] = [X'; Y'] M V^-1.
Loadings update_loadings(const Matrix& M, const Matrix& V, const Matrix& X, const Matrix& Y);
Loadings update_loadings(const Matrix& M, const Matrix& V, const DataPanel& panel);

struct NoiseVariances {
  double sigma2_x;
  double sigma2_y;
};

/// sx2 = (||X||^2 - tr(P'P V)) / (T p), likewise for Y, floored at kVarianceFloor.
/// Expects P and Q from update_loadings with the same V.
NoiseVariances update_variances(const Matrix& X, const Matrix& Y, const Matrix& P, const Matrix& Q, const Matrix& V);
NoiseVariances update_variances(const DataPanel& panel, const Matrix& P, const Matrix& Q, const Matrix& V);

/// One full EM iteration from `current` on complete data.
FactorParams em_step(const FactorParams& current, const Matrix& X, const Matrix& Y);

FitResult fit(const DataPanel& panel, const EmConfig& config);
FitResult fit(const DataPanel& panel, const EmConfig& config, FactorParams init);

}  // namespace ptfa
