#pragma once

// Shared data model for every estimator: the standardized panel, model
// parameters, factor posterior moments, and the fit diagnostics built on the
// observed-data (marginal) likelihood.

#include <Eigen/Dense>

#include <vector>

#include "ptfa/error.hpp"

namespace ptfa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Lower bound applied to every estimated noise variance.
inline constexpr double kVarianceFloor = 1e-10;

/// Column moments of the raw data. Standard deviations use the 1/T
/// (population) convention so that S = Z'Z / T is the sample covariance.
struct Scaler {
  Vector mean_x, sd_x;
  Vector mean_y, sd_y;

  Matrix scale_x(const Matrix& raw) const;
  Matrix scale_y(const Matrix& raw) const;
  Matrix unscale_x(const Matrix& standardized) const;
  Matrix unscale_y(const Matrix& standardized) const;
};

/// Standardized features X (T x p) and targets Y (T x q). Masks mark missing
/// cells (true = missing) and are authoritative; masked cells hold 0 after
/// standardization under zero imputation.
struct DataPanel {
  Matrix X;
  Matrix Y;
  Mask mask_x;
  Mask mask_y;
  Scaler scaler;

  int T() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
  int q() const { return static_cast<int>(Y.cols()); }
  bool has_missing() const { return mask_x.any() || mask_y.any(); }

  /// Complete panel with identity scaler (data assumed already standardized).
  static DataPanel from_standardized(Matrix X, Matrix Y);
};

enum class MissingPolicy { Error, ZeroImpute };

/// One block of columns standardized over its observed entries.
struct StandardizedBlock {
  Matrix Z;
  Mask mask;
  Vector mean;
  Vector sd;
};

StandardizedBlock standardize_block(const Matrix& raw, const char* name,
                                    MissingPolicy policy = MissingPolicy::Error);

/// Centers and scales each column over its observed (non-NaN) entries.
DataPanel standardize(const Matrix& raw_X, const Matrix& raw_Y,
                      MissingPolicy policy = MissingPolicy::Error);

struct FactorParams {
  Matrix P;  // p x k
  Matrix Q;  // q x k
  double sigma2_x = 1.0;
  double sigma2_y = 1.0;
  Matrix V_F;  // k x k prior factor variance

  int k() const { return static_cast<int>(P.cols()); }
  /// Stacked loadings [P; Q], d x k with d = p + q.
  Matrix stacked() const;
  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

/// Posterior of the factors for the static model: rows of M are m_t, every
/// period shares Omega, and V = T * Omega + M'M = E[F'F].
struct PosteriorMoments {
  Matrix M;
  Matrix Omega;
  Matrix V;
};

struct FitResult {
  FactorParams params;
  PosteriorMoments posterior;
  std::vector<double> loglik_path;   // empty when likelihood tracking is off
  std::vector<double> change_path;   // ||theta_1 - theta_0|| per iteration
  int n_iter = 0;
  bool converged = false;
  double foc_residual = 0.0;         // NaN when not evaluated
};

/// Observed-data log-likelihood with the factors integrated out:
/// -(T/2) [d log(2 pi) + log|C| + tr(C^-1 S)], C = L V_F L' + Sigma.
double marginal_log_likelihood(const FactorParams& params, const Matrix& X, const Matrix& Y);
double marginal_log_likelihood(const FactorParams& params, const DataPanel& panel);

/// Frobenius norm of (S C^-1 - I) L; zero at every stationary point of the
/// marginal likelihood with respect to the loadings.
double mle_foc_residual(const FactorParams& params, const Matrix& X, const Matrix& Y);
double mle_foc_residual(const FactorParams& params, const DataPanel& panel);

/// Out-of-sample targets from features alone: the factor posterior given x
/// only, mapped through Q. Works on the standardized scale.
Matrix predict_targets(const FactorParams& params, const Matrix& X_new);

/// In-sample fitted targets M Q'.
Matrix fitted_targets(const FactorParams& params, const PosteriorMoments& posterior);

struct RSquared {
  Vector per_target;
  double average = 0.0;
};

RSquared r_squared(const Matrix& Y, const Matrix& Y_hat);

namespace detail {

/// Inverse of a symmetric positive-definite matrix via Cholesky.
Matrix spd_inverse(const Matrix& A, const char* what);
Matrix symmetrize(const Matrix& A);
/// Euclidean distance between stacked parameter vectors.
double param_change(const FactorParams& a, const FactorParams& b);
void require_complete(const DataPanel& panel, const char* op);

}  // namespace detail

}  // namespace ptfa
