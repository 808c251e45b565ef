#pragma once

// EM when features are sampled `ratio` times faster than the targets and each
// low-frequency target is the average of latent high-frequency targets.

#include <vector>

#include "ptfa/em_static.hpp"

namespace ptfa {

/// High-frequency features X_hf (sum(ratios) x p) and low-frequency targets Y
/// (T x q). Period t owns ratios[t] consecutive rows of X_hf, in order.
struct MixedFrequencyPanel {
  Matrix X_hf;
  Matrix Y;
  std::vector<int> ratios;
  Scaler scaler;

  int T() const { return static_cast<int>(Y.rows()); }
  int p() const { return static_cast<int>(X_hf.cols()); }
  int q() const { return static_cast<int>(Y.cols()); }
  /// Common ratio when every period has the same number of sub-periods, else 0.
  int uniform_ratio() const;
  /// First high-frequency row of each period (size T + 1, last = total rows).
  std::vector<int> offsets() const;
  /// T x (p L) layout [X^(1), ..., X^(L)]; requires a uniform ratio.
  Matrix reshaped_X() const;
};

/// Standardizes each high-frequency feature column over all high-frequency
/// rows and each target over the low-frequency rows. Throws on NaN input.
MixedFrequencyPanel make_mixed_frequency_panel(const Matrix& raw_X_hf, const Matrix& raw_Y, int ratio);
MixedFrequencyPanel make_mixed_frequency_panel(const Matrix& raw_X_hf, const Matrix& raw_Y, std::vector<int> ratios);

/// Posterior for a uniform ratio L. M is T x (k L) with blocks M^(l),
/// Omega is the shared (k L) x (k L) covariance, V = T Omega + M'M.
struct MfPosterior {
  Matrix M;
  Matrix Omega;
  Matrix V;
  int ratio = 1;
  int k = 1;

  Matrix block_M(int l) const { return M.middleCols(l * k, k); }
  Matrix block_V(int l, int r) const { return V.block(l * k, r * k, k, k); }
  /// Sum over sub-periods of the factor means, T x k.
  Matrix summed_M() const;
};

MfPosterior mf_posterior(const FactorParams& params, const MixedFrequencyPanel& panel);

/// P = (sum_l X^(l)' M^(l)) (sum_l V_ll)^-1,
/// Q = L (Y' sum_l M^(l)) (sum_l sum_r V_lr)^-1.
Loadings mf_update_loadings(const MixedFrequencyPanel& panel, const MfPosterior& post);

/// sx2 = (||X||^2 - tr(P'P sum_l V_ll)) / (T L p),
/// sy2 = (L / (T q)) tr(Y'(Y - (1/L)(sum_l M^(l)) Q')), both floored.
NoiseVariances mf_update_variances(const MixedFrequencyPanel& panel, const MfPosterior& post,
                                   const Matrix& P, const Matrix& Q);

/// One EM iteration for a uniform ratio (block-matrix form).
FactorParams mf_em_step(const FactorParams& current, const MixedFrequencyPanel& panel);

/// One EM iteration accumulating per-period sums; accepts ragged ratios.
FactorParams mf_em_step_ragged(const FactorParams& current, const MixedFrequencyPanel& panel);

/// Low-frequency fitted targets (1/L_t) (sum_l m_tl) Q' from the posterior at `params`.
Matrix mf_fitted_targets(const FactorParams& params, const MixedFrequencyPanel& panel);

/// Per-period factor means, sum(ratios) x k, in high-frequency order.
Matrix mf_factor_means(const FactorParams& params, const MixedFrequencyPanel& panel);

/// Uses the block-matrix step when the ratio is uniform, the ragged step otherwise.
FitResult fit_mixed_frequency(const MixedFrequencyPanel& panel, const EmConfig& config);
FitResult fit_mixed_frequency(const MixedFrequencyPanel& panel, const EmConfig& config, FactorParams init);
/// Always runs the per-period (ragged) step.
FitResult fit_mixed_frequency_ragged(const MixedFrequencyPanel& panel, const EmConfig& config, FactorParams init);

}  // namespace ptfa
