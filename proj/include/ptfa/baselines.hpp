#pragma once

// Two-step comparison methods: extract k components from X (NIPALS PLS, PCA,
// or probabilistic PCA), then regress Y on the scores by least squares.

#include <string_view>

#include "ptfa/core.hpp"

namespace ptfa {

enum class BaselineMethod { PLS, PCA, PPCA };

std::string_view to_string(BaselineMethod method) noexcept;

enum class PlsVariant {
  PLS2,  // one set of components shared by all targets
  PLS1,  // separate components per target
};

struct BaselineFit {
  BaselineMethod method = BaselineMethod::PLS;
  Matrix scores;      // T x k (PLS1: T x kq, blocks per target)
  Matrix weights;     // PLS weights W, PCA right singular vectors, or PPCA W
  Matrix projection;  // scores = X projection
  Matrix coef;        // regression of Y on scores
  Matrix fitted;      // T x q
  double noise_variance = 0.0;  // PPCA only
  PlsVariant variant = PlsVariant::PLS2;

  /// Targets for new standardized features.
  Matrix predict(const Matrix& X_new) const;
};

/// NIPALS with X-only deflation. Inner iterations stop when the score vector
/// changes by less than 1e-10 relative to its norm.
BaselineFit fit_nipals_pls(const Matrix& X, const Matrix& Y, int k, PlsVariant variant = PlsVariant::PLS2);
BaselineFit fit_nipals_pls(const DataPanel& panel, int k, PlsVariant variant = PlsVariant::PLS2);

BaselineFit fit_pca_regression(const Matrix& X, const Matrix& Y, int k);
BaselineFit fit_pca_regression(const DataPanel& panel, int k);

/// Closed form: sigma2 is the mean of the p - k trailing eigenvalues of X'X/T,
/// W = U_k (Lambda_k - sigma2 I)^{1/2}, scores are posterior means X W (W'W + sigma2 I)^-1.
BaselineFit fit_ppca_regression(const Matrix& X, const Matrix& Y, int k);
BaselineFit fit_ppca_regression(const DataPanel& panel, int k);

BaselineFit fit_baseline(BaselineMethod method, const Matrix& X, const Matrix& Y, int k);

}  // namespace ptfa
