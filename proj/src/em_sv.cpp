#include "ptfa/em_sv.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ptfa {

void SvConfig::validate(int T, int p, int q) const {
  base.validate(T, p, q);
  if (!(lambda_x >= 0.0 && lambda_x < 1.0) || !(lambda_y >= 0.0 && lambda_y < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "decay factors must lie in [0, 1)");
  }
}

VolatilityPath VolatilityPath::constant(int T, double sigma2_x, double sigma2_y) {
  return {Vector::Constant(T, sigma2_x), Vector::Constant(T, sigma2_y)};
}

PeriodPosterior sv_posterior_period(const FactorParams& params, double sigma2_x, double sigma2_y,
                                    const Vector& x_t, const Vector& y_t) {
  if (x_t.size() != params.P.rows() || y_t.size() != params.Q.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "sv_posterior_period: data and loadings disagree");
  }
  const Matrix precision = detail::spd_inverse(params.V_F, "V_F") +
                           params.P.transpose() * params.P / sigma2_x +
                           params.Q.transpose() * params.Q / sigma2_y;
  PeriodPosterior out;
  out.Omega = detail::spd_inverse(precision, "posterior precision");
  out.m = out.Omega * (params.P.transpose() * x_t / sigma2_x + params.Q.transpose() * y_t / sigma2_y);
  return out;
}

double ewma_update(double residual_sq_mean, double trace_term, double prev, double lambda) {
  return lambda * prev + (1.0 - lambda) * (residual_sq_mean + trace_term);
}

Vector ewma_path(const Vector& raw, double lambda) {
  Vector out(raw.size());
  if (raw.size() == 0) return out;
  out(0) = std::max(raw(0), kVarianceFloor);
  for (Eigen::Index t = 1; t < raw.size(); ++t) {
    out(t) = std::max(ewma_update(raw(t), 0.0, out(t - 1), lambda), kVarianceFloor);
  }
  return out;
}

SvPosterior sv_posterior(const FactorParams& params, const VolatilityPath& vol, const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows() || vol.sigma2_x.size() != X.rows() || vol.sigma2_y.size() != X.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "sv_posterior: path length must equal T");
  }
  const int T = static_cast<int>(X.rows());
  const int k = params.k();
  const Matrix V_inv = detail::spd_inverse(params.V_F, "V_F");
  const Matrix PtP = params.P.transpose() * params.P;
  const Matrix QtQ = params.Q.transpose() * params.Q;
  const Matrix XP = X * params.P;
  const Matrix YQ = Y * params.Q;

  SvPosterior out;
  out.M.resize(T, k);
  out.omegas.reserve(static_cast<size_t>(T));
  Matrix omega_sum = Matrix::Zero(k, k);
  for (int t = 0; t < T; ++t) {
    const double sx2 = vol.sigma2_x(t);
    const double sy2 = vol.sigma2_y(t);
    if (!(sx2 > 0.0) || !(sy2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "volatility entries must be positive");
    Matrix omega = detail::spd_inverse(V_inv + PtP / sx2 + QtQ / sy2, "posterior precision");
    out.M.row(t) = (XP.row(t) / sx2 + YQ.row(t) / sy2) * omega;
    omega_sum += omega;
    out.omegas.push_back(std::move(omega));
  }
  out.V = detail::symmetrize(omega_sum + out.M.transpose() * out.M);
  return out;
}

VolatilityPath update_volatility(const SvPosterior& post, const Matrix& P, const Matrix& Q, const Matrix& X,
                                 const Matrix& Y, double lambda_x, double lambda_y) {
  const Eigen::Index T = X.rows();
  const double p = static_cast<double>(X.cols());
  const double q = static_cast<double>(Y.cols());
  const Matrix Ex = X - post.M * P.transpose();
  const Matrix Ey = Y - post.M * Q.transpose();
  const Matrix PtP = P.transpose() * P;
  const Matrix QtQ = Q.transpose() * Q;
  Vector raw_x(T), raw_y(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Matrix& omega = post.omegas[static_cast<size_t>(t)];
    raw_x(t) = (Ex.row(t).squaredNorm() + (PtP * omega).trace()) / p;
    raw_y(t) = (Ey.row(t).squaredNorm() + (QtQ * omega).trace()) / q;
  }
  return {ewma_path(raw_x, lambda_x), ewma_path(raw_y, lambda_y)};
}

double sv_marginal_log_likelihood(const FactorParams& params, const VolatilityPath& vol, const Matrix& X,
                                  const Matrix& Y) {
  const Eigen::Index T = X.rows();
  const Eigen::Index p = X.cols();
  const Eigen::Index q = Y.cols();
  const Matrix L = params.stacked();
  const Matrix common = L * params.V_F * L.transpose();
  const double d = static_cast<double>(p + q);
  double ll = 0.0;
  Vector z(p + q);
  for (Eigen::Index t = 0; t < T; ++t) {
    Matrix C = common;
    C.diagonal().head(p).array() += vol.sigma2_x(t);
    C.diagonal().tail(q).array() += vol.sigma2_y(t);
    Eigen::LLT<Matrix> llt(detail::symmetrize(C));
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularModelCovariance, "per-period model covariance is not invertible");
    }
    z << X.row(t).transpose(), Y.row(t).transpose();
    const Matrix Lc = llt.matrixL();
    const Vector w = Lc.triangularView<Eigen::Lower>().solve(z);
    ll -= 0.5 * (d * std::log(2.0 * std::numbers::pi) + 2.0 * Lc.diagonal().array().log().sum() + w.squaredNorm());
  }
  return ll;
}

SvFitResult fit_sv(const DataPanel& panel, const SvConfig& config) {
  config.validate(panel.T(), panel.p(), panel.q());
  return fit_sv(panel, config, initialize_params(panel.p(), panel.q(), config.base));
}

SvFitResult fit_sv(const DataPanel& panel, const SvConfig& config, FactorParams init) {
  detail::require_complete(panel, "fit_sv");
  config.validate(panel.T(), panel.p(), panel.q());
  init.validate();
  if (init.P.rows() != panel.p() || init.Q.rows() != panel.q() || init.k() != config.base.k) {
    throw Error(ErrorCode::DimensionMismatch, "initial parameters do not match the panel");
  }
  const Matrix& X = panel.X;
  const Matrix& Y = panel.Y;

  SvFitResult out;
  FitResult& result = out.fit;
  FactorParams theta = std::move(init);
  VolatilityPath vol = VolatilityPath::constant(panel.T(), theta.sigma2_x, theta.sigma2_y);
  if (config.base.track_loglik) result.loglik_path.push_back(sv_marginal_log_likelihood(theta, vol, X, Y));

  for (int iter = 0; iter < config.base.max_iter; ++iter) {
    const SvPosterior post = sv_posterior(theta, vol, X, Y);
    const Loadings loadings = update_loadings(post.M, post.V, X, Y);
    VolatilityPath next_vol = update_volatility(post, loadings.P, loadings.Q, X, Y, config.lambda_x, config.lambda_y);

    const double dvol = (next_vol.sigma2_x - vol.sigma2_x).squaredNorm() + (next_vol.sigma2_y - vol.sigma2_y).squaredNorm();
    // Rotation-invariant change in the loadings.
    const Matrix L_new = (Matrix(panel.p() + panel.q(), theta.k()) << loadings.P, loadings.Q).finished();
    const Matrix L_old = theta.stacked();
    const double change =
        std::sqrt((L_new * L_new.transpose() - L_old * L_old.transpose()).squaredNorm() + dvol);
    if (!std::isfinite(change)) throw Error(ErrorCode::DegenerateInit, "EM produced non-finite parameters");
    theta.P = loadings.P;
    theta.Q = loadings.Q;
    theta.sigma2_x = next_vol.sigma2_x.mean();
    theta.sigma2_y = next_vol.sigma2_y.mean();
    vol = std::move(next_vol);
    result.change_path.push_back(change);
    result.n_iter = iter + 1;
    if (config.base.track_loglik) result.loglik_path.push_back(sv_marginal_log_likelihood(theta, vol, X, Y));
    if (change < config.base.tolerance) {
      result.converged = true;
      break;
    }
  }

  SvPosterior post = sv_posterior(theta, vol, X, Y);
  Matrix omega_mean = Matrix::Zero(theta.k(), theta.k());
  for (const Matrix& omega : post.omegas) omega_mean += omega;
  omega_mean /= static_cast<double>(panel.T());
  result.posterior = PosteriorMoments{post.M, omega_mean, post.V};
  result.foc_residual = std::numeric_limits<double>::quiet_NaN();
  result.params = std::move(theta);
  out.volatility = std::move(vol);
  out.omegas = std::move(post.omegas);
  return out;
}

}  // namespace ptfa
