#include "ptfa/em_static.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace ptfa {

Matrix EmConfig::prior_variance() const {
  return V_F ? *V_F : Matrix::Identity(k, k);
}

void EmConfig::validate(int T, int p, int q) const {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > std::min(p + q, T)) throw Error(ErrorCode::InvalidArgument, "k exceeds min(p + q, T)");
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be at least 1");
  if (V_F && (V_F->rows() != k || V_F->cols() != k)) {
    throw Error(ErrorCode::DimensionMismatch, "V_F must be k x k");
  }
}

FactorParams initialize_params(int p, int q, const EmConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.k)));
  FactorParams params;
  params.P.resize(p, config.k);
  params.Q.resize(q, config.k);
  for (Eigen::Index j = 0; j < params.P.size(); ++j) params.P.data()[j] = normal(rng);
  for (Eigen::Index j = 0; j < params.Q.size(); ++j) params.Q.data()[j] = normal(rng);
  params.sigma2_x = 1.0;
  params.sigma2_y = 1.0;
  params.V_F = config.prior_variance();
  return params;
}

PosteriorMoments posterior_moments(const FactorParams& params, const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows() || X.cols() != params.P.rows() || Y.cols() != params.Q.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "posterior_moments: data and loadings disagree");
  }
  const Matrix precision = detail::spd_inverse(params.V_F, "V_F") +
                           params.P.transpose() * params.P / params.sigma2_x +
                           params.Q.transpose() * params.Q / params.sigma2_y;
  PosteriorMoments post;
  post.Omega = detail::spd_inverse(precision, "posterior precision");
  post.M = (X * params.P / params.sigma2_x + Y * params.Q / params.sigma2_y) * post.Omega;
  post.V = detail::symmetrize(static_cast<double>(X.rows()) * post.Omega + post.M.transpose() * post.M);
  return post;
}

PosteriorMoments posterior_moments(const FactorParams& params, const DataPanel& panel) {
  return posterior_moments(params, panel.X, panel.Y);
}

Loadings update_loadings(const Matrix& M, const Matrix& V, const Matrix& X, const Matrix& Y) {
  if (M.rows() != X.rows() || M.rows() != Y.rows() || V.rows() != M.cols() || V.cols() != M.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "update_loadings: shapes disagree");
  }
  Eigen::LLT<Matrix> llt(V);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMatrix, "update_loadings: V is rank deficient");
  }
  // L V = Z' M  =>  L' = V^-1 M' Z
  Loadings out;
  out.P = llt.solve(M.transpose() * X).transpose();
  out.Q = llt.solve(M.transpose() * Y).transpose();
  return out;
}

Loadings update_loadings(const Matrix& M, const Matrix& V, const DataPanel& panel) {
  return update_loadings(M, V, panel.X, panel.Y);
}

NoiseVariances update_variances(const Matrix& X, const Matrix& Y, const Matrix& P, const Matrix& Q, const Matrix& V) {
  const double T = static_cast<double>(X.rows());
  const double sx2 = (X.squaredNorm() - (P.transpose() * P * V).trace()) / (T * static_cast<double>(X.cols()));
  const double sy2 = (Y.squaredNorm() - (Q.transpose() * Q * V).trace()) / (T * static_cast<double>(Y.cols()));
  return {std::max(sx2, kVarianceFloor), std::max(sy2, kVarianceFloor)};
}

NoiseVariances update_variances(const DataPanel& panel, const Matrix& P, const Matrix& Q, const Matrix& V) {
  return update_variances(panel.X, panel.Y, P, Q, V);
}

FactorParams em_step(const FactorParams& current, const Matrix& X, const Matrix& Y) {
  const PosteriorMoments post = posterior_moments(current, X, Y);
  const Loadings loadings = update_loadings(post.M, post.V, X, Y);
  const NoiseVariances noise = update_variances(X, Y, loadings.P, loadings.Q, post.V);
  FactorParams next = current;
  next.P = loadings.P;
  next.Q = loadings.Q;
  next.sigma2_x = noise.sigma2_x;
  next.sigma2_y = noise.sigma2_y;
  return next;
}

FitResult fit(const DataPanel& panel, const EmConfig& config) {
  config.validate(panel.T(), panel.p(), panel.q());
  return fit(panel, config, initialize_params(panel.p(), panel.q(), config));
}

FitResult fit(const DataPanel& panel, const EmConfig& config, FactorParams init) {
  detail::require_complete(panel, "fit");
  config.validate(panel.T(), panel.p(), panel.q());
  init.validate();
  if (init.P.rows() != panel.p() || init.Q.rows() != panel.q() || init.k() != config.k) {
    throw Error(ErrorCode::DimensionMismatch, "initial parameters do not match the panel");
  }

  FitResult result;
  FactorParams theta = std::move(init);
  if (config.track_loglik) {
    const double ll = marginal_log_likelihood(theta, panel.X, panel.Y);
    if (!std::isfinite(ll)) throw Error(ErrorCode::DegenerateInit, "initial log-likelihood is not finite");
    result.loglik_path.push_back(ll);
  }
  for (int iter = 0; iter < config.max_iter; ++iter) {
    FactorParams next = em_step(theta, panel.X, panel.Y);
    const double change = detail::param_change(next, theta);
    if (!std::isfinite(change)) throw Error(ErrorCode::DegenerateInit, "EM produced non-finite parameters");
    theta = std::move(next);
    result.change_path.push_back(change);
    result.n_iter = iter + 1;
    if (config.track_loglik) result.loglik_path.push_back(marginal_log_likelihood(theta, panel.X, panel.Y));
    if (change < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.posterior = posterior_moments(theta, panel.X, panel.Y);
  result.foc_residual = config.compute_foc ? mle_foc_residual(theta, panel.X, panel.Y)
                                           : std::numeric_limits<double>::quiet_NaN();
  result.params = std::move(theta);
  return result;
}

}  // namespace ptfa
