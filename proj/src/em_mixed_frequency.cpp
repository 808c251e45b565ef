#include "ptfa/em_mixed_frequency.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

namespace ptfa {

int MixedFrequencyPanel::uniform_ratio() const {
  if (ratios.empty()) return 0;
  for (int r : ratios) {
    if (r != ratios.front()) return 0;
  }
  return ratios.front();
}

std::vector<int> MixedFrequencyPanel::offsets() const {
  std::vector<int> out(ratios.size() + 1, 0);
  std::partial_sum(ratios.begin(), ratios.end(), out.begin() + 1);
  return out;
}

Matrix MixedFrequencyPanel::reshaped_X() const {
  const int L = uniform_ratio();
  if (L == 0) throw Error(ErrorCode::InvalidArgument, "reshaped_X requires a uniform ratio");
  Matrix out(T(), p() * L);
  for (int t = 0; t < T(); ++t) {
    for (int l = 0; l < L; ++l) out.block(t, l * p(), 1, p()) = X_hf.row(t * L + l);
  }
  return out;
}

MixedFrequencyPanel make_mixed_frequency_panel(const Matrix& raw_X_hf, const Matrix& raw_Y, int ratio) {
  if (ratio < 1) throw Error(ErrorCode::InvalidArgument, "ratio must be at least 1");
  return make_mixed_frequency_panel(raw_X_hf, raw_Y, std::vector<int>(static_cast<size_t>(raw_Y.rows()), ratio));
}

MixedFrequencyPanel make_mixed_frequency_panel(const Matrix& raw_X_hf, const Matrix& raw_Y, std::vector<int> ratios) {
  if (static_cast<Eigen::Index>(ratios.size()) != raw_Y.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "one ratio per low-frequency period is required");
  }
  for (int r : ratios) {
    if (r < 1) throw Error(ErrorCode::InvalidArgument, "ratios must be at least 1");
  }
  const long total = std::accumulate(ratios.begin(), ratios.end(), 0L);
  if (total != raw_X_hf.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "high-frequency row count must equal the sum of ratios");
  }
  if (raw_Y.rows() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two low-frequency periods");

  // Each block is standardized on its own sampling grid.
  StandardizedBlock xs = standardize_block(raw_X_hf, "X");
  StandardizedBlock ys = standardize_block(raw_Y, "Y");
  MixedFrequencyPanel panel;
  panel.X_hf = std::move(xs.Z);
  panel.Y = std::move(ys.Z);
  panel.ratios = std::move(ratios);
  panel.scaler = Scaler{xs.mean, xs.sd, ys.mean, ys.sd};
  return panel;
}

Matrix MfPosterior::summed_M() const {
  Matrix s = Matrix::Zero(M.rows(), k);
  for (int l = 0; l < ratio; ++l) s += M.middleCols(l * k, k);
  return s;
}

namespace {

void check_mf_shapes(const FactorParams& params, const MixedFrequencyPanel& panel) {
  if (params.P.rows() != panel.p() || params.Q.rows() != panel.q()) {
    throw Error(ErrorCode::DimensionMismatch, "loadings do not match the mixed-frequency panel");
  }
}

/// Joint precision of the L sub-period factors of one low-frequency period.
Matrix mf_precision(const FactorParams& params, const Matrix& V_inv, int L) {
  const int k = params.k();
  const Matrix own = params.P.transpose() * params.P / params.sigma2_x + V_inv;
  const Matrix coupling = params.Q.transpose() * params.Q / (static_cast<double>(L) * params.sigma2_y);
  Matrix lambda(k * L, k * L);
  for (int l = 0; l < L; ++l) {
    for (int r = 0; r < L; ++r) {
      lambda.block(l * k, r * k, k, k) = coupling;
    }
    lambda.block(l * k, l * k, k, k) += own;
  }
  return lambda;
}

struct RaggedMoments {
  Matrix Sxm;       // sum_t sum_l x_tl m_tl'            (p x k)
  Matrix Vdiag;     // sum_t sum_l E[f_tl f_tl']          (k x k)
  Matrix Ysm;       // sum_t y_t s_t'                      (q x k)
  Matrix Vagg;      // sum_t E[s_t s_t'] / L_t            (k x k)
  double y_weighted_sq = 0.0;  // sum_t L_t ||y_t||^2
  Matrix means;     // sum(L_t) x k high-frequency factor means
  Matrix omega_diag_sum;  // sum_t sum_l Omega_tl,tl
};

RaggedMoments ragged_moments(const FactorParams& params, const MixedFrequencyPanel& panel) {
  check_mf_shapes(params, panel);
  const int k = params.k();
  const Matrix V_inv = detail::spd_inverse(params.V_F, "V_F");
  std::map<int, Matrix> omega_by_ratio;
  for (int L : panel.ratios) {
    if (!omega_by_ratio.count(L)) {
      omega_by_ratio.emplace(L, detail::spd_inverse(mf_precision(params, V_inv, L), "mixed-frequency precision"));
    }
  }
  const std::vector<int> offs = panel.offsets();
  RaggedMoments acc;
  acc.Sxm = Matrix::Zero(panel.p(), k);
  acc.Vdiag = Matrix::Zero(k, k);
  acc.Ysm = Matrix::Zero(panel.q(), k);
  acc.Vagg = Matrix::Zero(k, k);
  acc.means = Matrix::Zero(panel.X_hf.rows(), k);
  acc.omega_diag_sum = Matrix::Zero(k, k);

  const Matrix Pt_scaled = params.P.transpose() / params.sigma2_x;
  const Matrix Qt_scaled = params.Q.transpose() / params.sigma2_y;
  for (int t = 0; t < panel.T(); ++t) {
    const int L = panel.ratios[t];
    const Matrix& omega = omega_by_ratio.at(L);
    const Vector y_term = Qt_scaled * panel.Y.row(t).transpose();
    Vector rhs(k * L);
    for (int l = 0; l < L; ++l) {
      rhs.segment(l * k, k) = Pt_scaled * panel.X_hf.row(offs[t] + l).transpose() + y_term;
    }
    const Vector m = omega * rhs;
    Vector s = Vector::Zero(k);
    Matrix omega_sum = Matrix::Zero(k, k);
    for (int l = 0; l < L; ++l) {
      const Vector ml = m.segment(l * k, k);
      acc.means.row(offs[t] + l) = ml.transpose();
      acc.Sxm += panel.X_hf.row(offs[t] + l).transpose() * ml.transpose();
      acc.Vdiag += omega.block(l * k, l * k, k, k) + ml * ml.transpose();
      acc.omega_diag_sum += omega.block(l * k, l * k, k, k);
      s += ml;
      for (int r = 0; r < L; ++r) omega_sum += omega.block(l * k, r * k, k, k);
    }
    acc.Ysm += panel.Y.row(t).transpose() * s.transpose();
    acc.Vagg += (omega_sum + s * s.transpose()) / static_cast<double>(L);
    acc.y_weighted_sq += static_cast<double>(L) * panel.Y.row(t).squaredNorm();
  }
  return acc;
}

/// Observed-data log-likelihood of (x_t1..x_tL, y_t) per period; y_t has
/// covariance (Q V_F Q' + sy2 I) / L and cross-covariance P V_F Q' / L.
double mf_marginal_log_likelihood(const FactorParams& params, const MixedFrequencyPanel& panel) {
  const int p = panel.p();
  const int q = panel.q();
  const Matrix Cxx = params.P * params.V_F * params.P.transpose() + params.sigma2_x * Matrix::Identity(p, p);
  const Matrix Cxy = params.P * params.V_F * params.Q.transpose();
  const Matrix Cyy = params.Q * params.V_F * params.Q.transpose() + params.sigma2_y * Matrix::Identity(q, q);
  std::map<int, Eigen::LLT<Matrix>> factor_by_ratio;
  const std::vector<int> offs = panel.offsets();
  double ll = 0.0;
  for (int t = 0; t < panel.T(); ++t) {
    const int L = panel.ratios[t];
    auto it = factor_by_ratio.find(L);
    if (it == factor_by_ratio.end()) {
      const int d = p * L + q;
      Matrix C = Matrix::Zero(d, d);
      for (int l = 0; l < L; ++l) {
        C.block(l * p, l * p, p, p) = Cxx;
        C.block(l * p, p * L, p, q) = Cxy / static_cast<double>(L);
        C.block(p * L, l * p, q, p) = Cxy.transpose() / static_cast<double>(L);
      }
      C.block(p * L, p * L, q, q) = Cyy / static_cast<double>(L);
      it = factor_by_ratio.emplace(L, Eigen::LLT<Matrix>(detail::symmetrize(C))).first;
    }
    const Eigen::LLT<Matrix>& llt = it->second;
    Vector z(p * L + q);
    for (int l = 0; l < L; ++l) z.segment(l * p, p) = panel.X_hf.row(offs[t] + l).transpose();
    z.tail(q) = panel.Y.row(t).transpose();
    const Matrix Lc = llt.matrixL();
    const double logdet = 2.0 * Lc.diagonal().array().log().sum();
    const Vector w = Lc.triangularView<Eigen::Lower>().solve(z);
    ll += -0.5 * (static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi) + logdet + w.squaredNorm());
  }
  return ll;
}

}  // namespace

MfPosterior mf_posterior(const FactorParams& params, const MixedFrequencyPanel& panel) {
  check_mf_shapes(params, panel);
  const int L = panel.uniform_ratio();
  if (L == 0) throw Error(ErrorCode::InvalidArgument, "mf_posterior requires a uniform ratio");
  const int k = params.k();
  const Matrix V_inv = detail::spd_inverse(params.V_F, "V_F");

  MfPosterior post;
  post.ratio = L;
  post.k = k;
  post.Omega = detail::spd_inverse(mf_precision(params, V_inv, L), "mixed-frequency precision");
  const Matrix X = panel.reshaped_X();
  const Matrix y_term = panel.Y * params.Q / params.sigma2_y;
  Matrix rhs(panel.T(), k * L);
  for (int l = 0; l < L; ++l) {
    rhs.middleCols(l * k, k) = X.middleCols(l * panel.p(), panel.p()) * params.P / params.sigma2_x + y_term;
  }
  post.M = rhs * post.Omega;
  post.V = detail::symmetrize(static_cast<double>(panel.T()) * post.Omega + post.M.transpose() * post.M);
  return post;
}

Loadings mf_update_loadings(const MixedFrequencyPanel& panel, const MfPosterior& post) {
  const int L = post.ratio;
  const int k = post.k;
  if (panel.uniform_ratio() != L || post.M.rows() != panel.T()) {
    throw Error(ErrorCode::DimensionMismatch, "posterior does not match the panel");
  }
  const Matrix X = panel.reshaped_X();
  Matrix Sxm = Matrix::Zero(panel.p(), k);
  Matrix Vdiag = Matrix::Zero(k, k);
  Matrix Vall = Matrix::Zero(k, k);
  for (int l = 0; l < L; ++l) {
    Sxm += X.middleCols(l * panel.p(), panel.p()).transpose() * post.block_M(l);
    Vdiag += post.block_V(l, l);
    for (int r = 0; r < L; ++r) Vall += post.block_V(l, r);
  }
  Eigen::LLT<Matrix> diag_llt(Vdiag);
  Eigen::LLT<Matrix> all_llt(Vall);
  if (diag_llt.info() != Eigen::Success || all_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMatrix, "mixed-frequency block sums are singular");
  }
  Loadings out;
  out.P = diag_llt.solve(Sxm.transpose()).transpose();
  out.Q = static_cast<double>(L) * all_llt.solve((panel.Y.transpose() * post.summed_M()).transpose()).transpose();
  return out;
}

NoiseVariances mf_update_variances(const MixedFrequencyPanel& panel, const MfPosterior& post,
                                   const Matrix& P, const Matrix& Q) {
  const int L = post.ratio;
  Matrix Vdiag = Matrix::Zero(post.k, post.k);
  for (int l = 0; l < L; ++l) Vdiag += post.block_V(l, l);
  const double T = static_cast<double>(panel.T());
  const double sx2 = (panel.X_hf.squaredNorm() - (P.transpose() * P * Vdiag).trace()) /
                     (T * static_cast<double>(L) * static_cast<double>(panel.p()));
  const Matrix resid = panel.Y - post.summed_M() * Q.transpose() / static_cast<double>(L);
  const double sy2 = static_cast<double>(L) / (T * static_cast<double>(panel.q())) *
                     (panel.Y.transpose() * resid).trace();
  return {std::max(sx2, kVarianceFloor), std::max(sy2, kVarianceFloor)};
}

FactorParams mf_em_step(const FactorParams& current, const MixedFrequencyPanel& panel) {
  const MfPosterior post = mf_posterior(current, panel);
  const Loadings loadings = mf_update_loadings(panel, post);
  const NoiseVariances noise = mf_update_variances(panel, post, loadings.P, loadings.Q);
  FactorParams next = current;
  next.P = loadings.P;
  next.Q = loadings.Q;
  next.sigma2_x = noise.sigma2_x;
  next.sigma2_y = noise.sigma2_y;
  return next;
}

FactorParams mf_em_step_ragged(const FactorParams& current, const MixedFrequencyPanel& panel) {
  const RaggedMoments acc = ragged_moments(current, panel);
  Eigen::LLT<Matrix> diag_llt(acc.Vdiag);
  Eigen::LLT<Matrix> agg_llt(acc.Vagg);
  if (diag_llt.info() != Eigen::Success || agg_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMatrix, "mixed-frequency block sums are singular");
  }
  FactorParams next = current;
  next.P = diag_llt.solve(acc.Sxm.transpose()).transpose();
  next.Q = agg_llt.solve(acc.Ysm.transpose()).transpose();
  const double n_hf = static_cast<double>(panel.X_hf.rows());
  const double sx2 = (panel.X_hf.squaredNorm() - (next.P.transpose() * next.P * acc.Vdiag).trace()) /
                     (n_hf * static_cast<double>(panel.p()));
  const double sy2 = (acc.y_weighted_sq - (next.Q.transpose() * acc.Ysm).trace()) /
                     (static_cast<double>(panel.T()) * static_cast<double>(panel.q()));
  next.sigma2_x = std::max(sx2, kVarianceFloor);
  next.sigma2_y = std::max(sy2, kVarianceFloor);
  return next;
}

Matrix mf_factor_means(const FactorParams& params, const MixedFrequencyPanel& panel) {
  return ragged_moments(params, panel).means;
}

Matrix mf_fitted_targets(const FactorParams& params, const MixedFrequencyPanel& panel) {
  const Matrix means = mf_factor_means(params, panel);
  const std::vector<int> offs = panel.offsets();
  Matrix avg(panel.T(), params.k());
  for (int t = 0; t < panel.T(); ++t) {
    avg.row(t) = means.middleRows(offs[t], panel.ratios[t]).colwise().sum() / static_cast<double>(panel.ratios[t]);
  }
  return avg * params.Q.transpose();
}

namespace {

enum class StepKind { Block, Ragged };

FitResult run_mf(const MixedFrequencyPanel& panel, const EmConfig& config, FactorParams init, StepKind kind) {
  config.validate(panel.T(), panel.p(), panel.q());
  init.validate();
  check_mf_shapes(init, panel);
  if (init.k() != config.k) throw Error(ErrorCode::DimensionMismatch, "initial parameters do not match k");

  FitResult result;
  FactorParams theta = std::move(init);
  if (config.track_loglik) result.loglik_path.push_back(mf_marginal_log_likelihood(theta, panel));
  for (int iter = 0; iter < config.max_iter; ++iter) {
    FactorParams next = kind == StepKind::Block ? mf_em_step(theta, panel) : mf_em_step_ragged(theta, panel);
    const double change = detail::param_change(next, theta);
    if (!std::isfinite(change)) throw Error(ErrorCode::DegenerateInit, "EM produced non-finite parameters");
    theta = std::move(next);
    result.change_path.push_back(change);
    result.n_iter = iter + 1;
    if (config.track_loglik) result.loglik_path.push_back(mf_marginal_log_likelihood(theta, panel));
    if (change < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  // Posterior summary in high-frequency form; reduces to the static moments when every ratio is 1.
  const RaggedMoments acc = ragged_moments(theta, panel);
  result.posterior.M = acc.means;
  result.posterior.Omega = acc.omega_diag_sum / static_cast<double>(panel.X_hf.rows());
  result.posterior.V = acc.Vdiag;
  result.foc_residual = std::numeric_limits<double>::quiet_NaN();
  result.params = std::move(theta);
  return result;
}

}  // namespace

FitResult fit_mixed_frequency(const MixedFrequencyPanel& panel, const EmConfig& config) {
  config.validate(panel.T(), panel.p(), panel.q());
  return fit_mixed_frequency(panel, config, initialize_params(panel.p(), panel.q(), config));
}

FitResult fit_mixed_frequency(const MixedFrequencyPanel& panel, const EmConfig& config, FactorParams init) {
  const StepKind kind = panel.uniform_ratio() != 0 ? StepKind::Block : StepKind::Ragged;
  return run_mf(panel, config, std::move(init), kind);
}

FitResult fit_mixed_frequency_ragged(const MixedFrequencyPanel& panel, const EmConfig& config, FactorParams init) {
  return run_mf(panel, config, std::move(init), StepKind::Ragged);
}

}  // namespace ptfa
