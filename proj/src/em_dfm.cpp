#include "ptfa/em_dfm.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ptfa/em_missing.hpp"

namespace ptfa {

double DfmParams::spectral_radius() const {
  if (A.size() == 0) return 0.0;
  return Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

void DfmParams::validate() const {
  base.validate();
  const int k = base.k();
  if (A.rows() != k || A.cols() != k || f0.size() != k || Sigma_v.rows() != k || Sigma_v.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "A, f0 and Sigma_v must match k");
  }
  if (!(Sigma_v.diagonal().array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "Sigma_v must have a positive diagonal");
  }
  Eigen::LLT<Matrix> llt(Sigma_v);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "Sigma_v must be positive definite");
}

DfmParams initialize_dfm_params(int p, int q, const DfmConfig& config) {
  DfmParams params;
  params.base = initialize_params(p, q, config.base);
  const int k = config.base.k;
  params.A = Matrix::Zero(k, k);
  params.f0 = Vector::Zero(k);
  params.Sigma_v = params.base.V_F;
  return params;
}

namespace {

struct BandedSystem {
  banded::BandedCholesky factor;
  Matrix M;  // T x k
};

BandedSystem solve_posterior(const DfmParams& params, const Matrix& X, const Matrix& Y) {
  const FactorParams& th = params.base;
  if (X.cols() != th.P.rows() || Y.cols() != th.Q.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "dfm_posterior: data and loadings disagree");
  }
  if (Y.rows() > X.rows()) throw Error(ErrorCode::DimensionMismatch, "dfm_posterior: Y has more rows than X");
  const int T = static_cast<int>(X.rows());
  const int Ty = static_cast<int>(Y.rows());
  const int k = th.k();
  const Matrix V_inv = detail::spd_inverse(params.Sigma_v, "Sigma_v");
  const Matrix Gx = th.P.transpose() * th.P / th.sigma2_x;
  const Matrix G = Gx + th.Q.transpose() * th.Q / th.sigma2_y;
  std::vector<Matrix> Gs(static_cast<size_t>(T), G);
  for (int t = Ty; t < T; ++t) Gs[static_cast<size_t>(t)] = Gx;

  const banded::BlockBandedMatrix B = banded::assemble_dfm_precision(params.A, V_inv, Gs);
  BandedSystem out{banded::cholesky(B), Matrix()};

  // vec(M') right-hand side: prior term in the first block, data terms everywhere.
  Matrix data = X * th.P / th.sigma2_x;
  data.topRows(Ty) += Y * th.Q / th.sigma2_y;
  Vector rhs(T * k);
  for (int t = 0; t < T; ++t) rhs.segment(t * k, k) = data.row(t).transpose();
  rhs.head(k) += V_inv * params.A * params.f0;

  const Vector m = banded::solve(out.factor, rhs);
  out.M = Eigen::Map<const Matrix>(m.data(), k, T).transpose();
  return out;
}

}  // namespace

DfmPosterior dfm_posterior(const DfmParams& params, const Matrix& X, const Matrix& Y) {
  BandedSystem sys = solve_posterior(params, X, Y);
  const int T = static_cast<int>(X.rows());
  const int k = params.k();
  DfmPosterior post;
  post.band = banded::partial_inverse_band(sys.factor);
  post.log_det_precision = sys.factor.log_determinant();
  post.M = std::move(sys.M);
  const Matrix& M = post.M;

  post.V0 = Matrix::Zero(k, k);
  for (int t = 0; t < T; ++t) post.V0 += post.band.diag[static_cast<size_t>(t)];
  post.V0 += M.transpose() * M;
  post.V1 = Matrix::Zero(k, k);
  post.V10 = Matrix::Zero(k, k);
  for (int t = 1; t < T; ++t) {
    post.V1 += post.band.diag[static_cast<size_t>(t - 1)];
    post.V10 += post.band.lower[static_cast<size_t>(t - 1)];
  }
  if (T > 1) {
    post.V1 += M.topRows(T - 1).transpose() * M.topRows(T - 1);
    post.V10 += M.bottomRows(T - 1).transpose() * M.topRows(T - 1);
  }
  post.V0 = detail::symmetrize(post.V0);
  post.V1 = detail::symmetrize(post.V1);
  post.m1 = M.row(0).transpose();
  post.Omega11 = post.band.diag.front();
  return post;
}

Matrix innovation_variance(const DfmPosterior& post, const Matrix& A, const Vector& f0) {
  const int k = static_cast<int>(A.rows());
  const double T = static_cast<double>(post.M.rows());
  const Vector e1 = post.m1 - A * f0;
  const Matrix V11 = post.Omega11 + post.m1 * post.m1.transpose();
  const Matrix tail = post.V0 - V11;  // sum_{t>=2} V_tt
  const Matrix innov = post.Omega11 + e1 * e1.transpose() + tail - A * post.V10.transpose() -
                       post.V10 * A.transpose() + A * post.V1 * A.transpose();
  Matrix out = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) out(i, i) = std::max(innov(i, i) / T, kVarianceFloor);
  return out;
}

Dynamics update_dynamics(const DfmPosterior& post, const DfmParams& params, bool estimate_sigma_v) {
  const int T = static_cast<int>(post.M.rows());
  if (T < 2) throw Error(ErrorCode::InsufficientData, "update_dynamics needs at least two periods");
  Eigen::LLT<Matrix> llt(post.V1);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularLagMoment, "lagged second moment is not positive definite");
  }
  Dynamics out;
  out.A = llt.solve(post.V10.transpose()).transpose();

  out.Sigma_v = estimate_sigma_v ? innovation_variance(post, out.A, params.f0) : params.Sigma_v;

  // Weighted least squares for the initial condition; the minimum-norm
  // solution keeps f0 finite when A is singular.
  const Vector w = out.Sigma_v.diagonal().cwiseSqrt();
  const Matrix WA = w.asDiagonal() * out.A;
  const Vector Wm = w.asDiagonal() * post.m1;
  out.f0 = Eigen::CompleteOrthogonalDecomposition<Matrix>(WA).solve(Wm);
  return out;
}

double dfm_marginal_log_likelihood(const DfmParams& params, const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows()) throw Error(ErrorCode::DimensionMismatch, "X and Y row counts differ");
  const BandedSystem sys = solve_posterior(params, X, Y);
  const FactorParams& th = params.base;
  const double T = static_cast<double>(X.rows());
  const double p = static_cast<double>(X.cols());
  const double q = static_cast<double>(Y.cols());
  const double k = static_cast<double>(th.k());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const Matrix& M = sys.M;

  const double ss_x = (X - M * th.P.transpose()).squaredNorm();
  const double ss_y = (Y - M * th.Q.transpose()).squaredNorm();
  const double log_lik = -0.5 * (T * (p + q) * log2pi + T * p * std::log(th.sigma2_x) + T * q * std::log(th.sigma2_y) +
                                 ss_x / th.sigma2_x + ss_y / th.sigma2_y);

  Eigen::LLT<Matrix> sv(params.Sigma_v);
  if (sv.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "Sigma_v must be positive definite");
  const Matrix Lv = sv.matrixL();
  const double logdet_sv = 2.0 * Lv.diagonal().array().log().sum();
  double quad = 0.0;
  Vector prev = params.f0;
  for (Eigen::Index t = 0; t < M.rows(); ++t) {
    const Vector m = M.row(t).transpose();
    quad += Lv.triangularView<Eigen::Lower>().solve(m - params.A * prev).squaredNorm();
    prev = m;
  }
  const double log_prior = -0.5 * (T * k * log2pi + T * logdet_sv + quad);
  const double log_post = -0.5 * T * k * log2pi + 0.5 * sys.factor.log_determinant();
  return log_lik + log_prior - log_post;
}

namespace {

DfmParams step_from_posterior(const DfmParams& current, const DfmPosterior& post, const Matrix& X, const Matrix& Y,
                              const DfmConfig& config) {
  const Loadings loadings = update_loadings(post.M, post.V0, X, Y);
  const NoiseVariances noise = update_variances(X, Y, loadings.P, loadings.Q, post.V0);
  DfmParams next = current;
  next.base.P = loadings.P;
  next.base.Q = loadings.Q;
  next.base.sigma2_x = noise.sigma2_x;
  next.base.sigma2_y = noise.sigma2_y;
  if (config.estimate_dynamics) {
    const Dynamics dyn = update_dynamics(post, current, !config.fix_innovation_variance);
    next.A = dyn.A;
    next.f0 = dyn.f0;
    next.Sigma_v = dyn.Sigma_v;
  } else if (!config.fix_innovation_variance) {
    next.Sigma_v = innovation_variance(post, current.A, current.f0);
  }
  next.base.V_F = next.Sigma_v;
  return next;
}

double dfm_change(const DfmParams& a, const DfmParams& b) {
  const double base = detail::param_change(a.base, b.base);
  return std::sqrt(base * base + (a.A - b.A).squaredNorm() + (a.f0 - b.f0).squaredNorm() +
                   (a.Sigma_v - b.Sigma_v).squaredNorm());
}

}  // namespace

DfmParams dfm_em_step(const DfmParams& current, const Matrix& X, const Matrix& Y, const DfmConfig& config) {
  const DfmPosterior post = dfm_posterior(current, X, Y);
  return step_from_posterior(current, post, X, Y, config);
}

DfmFitResult fit_dfm(const DataPanel& panel, const DfmConfig& config) {
  config.base.validate(panel.T(), panel.p(), panel.q());
  return fit_dfm(panel, config, initialize_dfm_params(panel.p(), panel.q(), config));
}

DfmFitResult fit_dfm(const DataPanel& panel, const DfmConfig& config, DfmParams init) {
  config.base.validate(panel.T(), panel.p(), panel.q());
  init.validate();
  if (init.base.P.rows() != panel.p() || init.base.Q.rows() != panel.q() || init.k() != config.base.k) {
    throw Error(ErrorCode::DimensionMismatch, "initial parameters do not match the panel");
  }
  const bool missing = panel.has_missing();
  DataPanel work = panel;
  if (missing) {
    work.X = panel.mask_x.select(Matrix::Zero(panel.T(), panel.p()), panel.X);
    work.Y = panel.mask_y.select(Matrix::Zero(panel.T(), panel.q()), panel.Y);
  }

  DfmFitResult out;
  FitResult& result = out.fit;
  DfmParams theta = std::move(init);
  theta.base.V_F = theta.Sigma_v;
  if (config.base.track_loglik) result.loglik_path.push_back(dfm_marginal_log_likelihood(theta, work.X, work.Y));

  for (int iter = 0; iter < config.base.max_iter; ++iter) {
    const DfmPosterior post = dfm_posterior(theta, work.X, work.Y);
    if (missing) work = impute_step(work, post.M, theta.base.P, theta.base.Q);
    DfmParams next = step_from_posterior(theta, post, work.X, work.Y, config);
    const double change = dfm_change(next, theta);
    if (!std::isfinite(change)) throw Error(ErrorCode::DegenerateInit, "EM produced non-finite parameters");
    theta = std::move(next);
    result.change_path.push_back(change);
    result.n_iter = iter + 1;
    if (config.base.track_loglik) result.loglik_path.push_back(dfm_marginal_log_likelihood(theta, work.X, work.Y));
    if (change < config.base.tolerance) {
      result.converged = true;
      break;
    }
  }

  const DfmPosterior post = dfm_posterior(theta, work.X, work.Y);
  Matrix omega_mean = Matrix::Zero(theta.k(), theta.k());
  for (const Matrix& block : post.band.diag) omega_mean += block;
  omega_mean /= static_cast<double>(panel.T());
  result.posterior = PosteriorMoments{post.M, omega_mean, post.V0};
  result.foc_residual = std::numeric_limits<double>::quiet_NaN();
  result.params = theta.base;

  const double radius = theta.spectral_radius();
  if (radius >= 1.0) {
    std::ostringstream msg;
    msg << "spectral radius of A is " << radius << " (non-stationary factor dynamics)";
    out.warnings.push_back(msg.str());
  }
  out.params = std::move(theta);
  return out;
}

}  // namespace ptfa
