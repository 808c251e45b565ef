#pragma once

#include "ptfa/em_static.hpp"

namespace ptfa {

/// Replaces masked cells of X by (M P')_tj and of Y by (M Q')_tj. Observed
/// cells are copied through untouched.
DataPanel impute_step(const DataPanel& panel, const Matrix& M, const Matrix& P, const Matrix& Q);

struct MissingFitResult {
  FitResult fit;
  DataPanel imputed;  // panel with the final imputed values, masks unchanged
};

/// EM with the imputation refreshed once per iteration, between the E-step and
/// the loading update. Masked cells start at 0 (the standardized mean).
MissingFitResult fit_missing(const DataPanel& panel, const EmConfig& config);
MissingFitResult fit_missing(const DataPanel& panel, const EmConfig& config, FactorParams init);

}  // namespace ptfa
