#include "ptfa/em_missing.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ptfa {

DataPanel impute_step(const DataPanel& panel, const Matrix& M, const Matrix& P, const Matrix& Q) {
  if (M.rows() != panel.T() || P.rows() != panel.p() || Q.rows() != panel.q()) {
    throw Error(ErrorCode::DimensionMismatch, "impute_step: shapes disagree");
  }
  DataPanel out = panel;
  if (panel.mask_x.any()) out.X = panel.mask_x.select(M * P.transpose(), panel.X);
  if (panel.mask_y.any()) out.Y = panel.mask_y.select(M * Q.transpose(), panel.Y);
  return out;
}

namespace {

void require_observed_columns(const Mask& mask, const char* block) {
  for (Eigen::Index j = 0; j < mask.cols(); ++j) {
    if (mask.col(j).all()) {
      throw Error(ErrorCode::AllMissingColumn,
                  std::string(block) + " column " + std::to_string(j) + " has no observed entries");
    }
  }
}

}  // namespace

MissingFitResult fit_missing(const DataPanel& panel, const EmConfig& config) {
  config.validate(panel.T(), panel.p(), panel.q());
  return fit_missing(panel, config, initialize_params(panel.p(), panel.q(), config));
}

MissingFitResult fit_missing(const DataPanel& panel, const EmConfig& config, FactorParams init) {
  config.validate(panel.T(), panel.p(), panel.q());
  init.validate();
  require_observed_columns(panel.mask_x, "X");
  require_observed_columns(panel.mask_y, "Y");

  DataPanel work = panel;
  work.X = panel.mask_x.select(Matrix::Zero(panel.T(), panel.p()), panel.X);
  work.Y = panel.mask_y.select(Matrix::Zero(panel.T(), panel.q()), panel.Y);

  MissingFitResult out;
  FitResult& result = out.fit;
  FactorParams theta = std::move(init);
  if (config.track_loglik) result.loglik_path.push_back(marginal_log_likelihood(theta, work.X, work.Y));

  for (int iter = 0; iter < config.max_iter; ++iter) {
    const PosteriorMoments post = posterior_moments(theta, work.X, work.Y);
    work = impute_step(work, post.M, theta.P, theta.Q);
    const Loadings loadings = update_loadings(post.M, post.V, work.X, work.Y);
    const NoiseVariances noise = update_variances(work.X, work.Y, loadings.P, loadings.Q, post.V);

    FactorParams next = theta;
    next.P = loadings.P;
    next.Q = loadings.Q;
    next.sigma2_x = noise.sigma2_x;
    next.sigma2_y = noise.sigma2_y;
    const double change = detail::param_change(next, theta);
    if (!std::isfinite(change)) throw Error(ErrorCode::DegenerateInit, "EM produced non-finite parameters");
    theta = std::move(next);
    result.change_path.push_back(change);
    result.n_iter = iter + 1;
    if (config.track_loglik) result.loglik_path.push_back(marginal_log_likelihood(theta, work.X, work.Y));
    if (change < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.posterior = posterior_moments(theta, work.X, work.Y);
  result.foc_residual = config.compute_foc ? mle_foc_residual(theta, work.X, work.Y)
                                           : std::numeric_limits<double>::quiet_NaN();
  result.params = std::move(theta);
  out.imputed = std::move(work);
  return out;
}

}  // namespace ptfa
