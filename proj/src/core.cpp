#include "ptfa/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ptfa {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::MissingValues: return "MissingValues";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::SingularModelCovariance: return "SingularModelCovariance";
    case ErrorCode::SingularLagMoment: return "SingularLagMoment";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::ZeroVarianceTarget: return "ZeroVarianceTarget";
    case ErrorCode::DegenerateInit: return "DegenerateInit";
    case ErrorCode::ZeroWeightVector: return "ZeroWeightVector";
    case ErrorCode::RankDeficientScores: return "RankDeficientScores";
    case ErrorCode::NegativeVarianceGap: return "NegativeVarianceGap";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {

struct ColumnMoments {
  Vector mean;
  Vector sd;
};

ColumnMoments observed_moments(const Matrix& raw, const Mask& mask, const char* block) {
  ColumnMoments out{Vector(raw.cols()), Vector(raw.cols())};
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    double sum = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index t = 0; t < raw.rows(); ++t) {
      if (!mask(t, j)) {
        sum += raw(t, j);
        ++n;
      }
    }
    if (n == 0) {
      throw Error(ErrorCode::AllMissingColumn,
                  std::string(block) + " column " + std::to_string(j) + " has no observed entries");
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (Eigen::Index t = 0; t < raw.rows(); ++t) {
      if (!mask(t, j)) ss += (raw(t, j) - mean) * (raw(t, j) - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      throw Error(ErrorCode::ConstantColumn,
                  std::string(block) + " column " + std::to_string(j) + " is constant");
    }
    out.mean(j) = mean;
    out.sd(j) = sd;
  }
  return out;
}

Matrix apply_scale(const Matrix& raw, const Vector& mean, const Vector& sd) {
  if (raw.cols() != mean.size()) {
    throw Error(ErrorCode::DimensionMismatch, "column count does not match the scaler");
  }
  return (raw.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

Matrix apply_unscale(const Matrix& z, const Vector& mean, const Vector& sd) {
  if (z.cols() != mean.size()) {
    throw Error(ErrorCode::DimensionMismatch, "column count does not match the scaler");
  }
  return (z.array().rowwise() * sd.transpose().array()).matrix().rowwise() + mean.transpose();
}

}  // namespace

Matrix Scaler::scale_x(const Matrix& raw) const { return apply_scale(raw, mean_x, sd_x); }
Matrix Scaler::scale_y(const Matrix& raw) const { return apply_scale(raw, mean_y, sd_y); }
Matrix Scaler::unscale_x(const Matrix& z) const { return apply_unscale(z, mean_x, sd_x); }
Matrix Scaler::unscale_y(const Matrix& z) const { return apply_unscale(z, mean_y, sd_y); }

DataPanel DataPanel::from_standardized(Matrix X, Matrix Y) {
  if (X.rows() != Y.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "X and Y row counts differ");
  }
  DataPanel panel;
  panel.mask_x = Mask::Constant(X.rows(), X.cols(), false);
  panel.mask_y = Mask::Constant(Y.rows(), Y.cols(), false);
  panel.scaler.mean_x = Vector::Zero(X.cols());
  panel.scaler.sd_x = Vector::Ones(X.cols());
  panel.scaler.mean_y = Vector::Zero(Y.cols());
  panel.scaler.sd_y = Vector::Ones(Y.cols());
  panel.X = std::move(X);
  panel.Y = std::move(Y);
  return panel;
}

StandardizedBlock standardize_block(const Matrix& raw, const char* name, MissingPolicy policy) {
  StandardizedBlock out;
  out.mask = raw.array().isNaN();
  if (policy == MissingPolicy::Error && out.mask.any()) {
    throw Error(ErrorCode::MissingValues, std::string(name) + " contains missing values");
  }
  const ColumnMoments m = observed_moments(raw, out.mask, name);
  out.mean = m.mean;
  out.sd = m.sd;
  out.Z = apply_scale(raw, m.mean, m.sd);
  out.Z = out.mask.select(Matrix::Zero(raw.rows(), raw.cols()), out.Z);
  return out;
}

DataPanel standardize(const Matrix& raw_X, const Matrix& raw_Y, MissingPolicy policy) {
  if (raw_X.rows() != raw_Y.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "X and Y row counts differ");
  }
  if (raw_X.rows() < 2 || raw_X.cols() < 1 || raw_Y.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, "panel needs T >= 2, p >= 1, q >= 1");
  }
  if (policy == MissingPolicy::Error && (raw_X.array().isNaN().any() || raw_Y.array().isNaN().any())) {
    throw Error(ErrorCode::MissingValues, "panel contains missing values");
  }
  StandardizedBlock xs = standardize_block(raw_X, "X", policy);
  StandardizedBlock ys = standardize_block(raw_Y, "Y", policy);
  DataPanel panel;
  panel.X = std::move(xs.Z);
  panel.Y = std::move(ys.Z);
  panel.mask_x = std::move(xs.mask);
  panel.mask_y = std::move(ys.mask);
  panel.scaler = Scaler{xs.mean, xs.sd, ys.mean, ys.sd};
  return panel;
}

Matrix FactorParams::stacked() const {
  Matrix L(P.rows() + Q.rows(), P.cols());
  L << P, Q;
  return L;
}

void FactorParams::validate() const {
  if (P.cols() != Q.cols() || V_F.rows() != P.cols() || V_F.cols() != P.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "P, Q and V_F disagree on k");
  }
  if (!(sigma2_x > 0.0) || !(sigma2_y > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise variances must be positive");
  }
  if ((V_F - V_F.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, V_F.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::InvalidArgument, "V_F must be symmetric");
  }
  Eigen::LLT<Matrix> llt(V_F);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "V_F must be positive definite");
  }
}

namespace detail {

Matrix spd_inverse(const Matrix& A, const char* what) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMatrix, std::string(what) + " is not positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(A.rows(), A.cols()));
  return symmetrize(inv);
}

Matrix symmetrize(const Matrix& A) { return 0.5 * (A + A.transpose()); }

double param_change(const FactorParams& a, const FactorParams& b) {
  const double dx = a.sigma2_x - b.sigma2_x;
  const double dy = a.sigma2_y - b.sigma2_y;
  return std::sqrt((a.P - b.P).squaredNorm() + (a.Q - b.Q).squaredNorm() + dx * dx + dy * dy);
}

void require_complete(const DataPanel& panel, const char* op) {
  if (panel.has_missing()) {
    throw Error(ErrorCode::MissingValues, std::string(op) + " requires a complete panel");
  }
}

}  // namespace detail

namespace {

Matrix model_covariance(const FactorParams& params) {
  const Matrix L = params.stacked();
  Matrix C = L * params.V_F * L.transpose();
  const Eigen::Index p = params.P.rows();
  const Eigen::Index q = params.Q.rows();
  C.diagonal().head(p).array() += params.sigma2_x;
  C.diagonal().tail(q).array() += params.sigma2_y;
  return detail::symmetrize(C);
}

Matrix sample_covariance(const Matrix& X, const Matrix& Y) {
  Matrix Z(X.rows(), X.cols() + Y.cols());
  Z << X, Y;
  return (Z.transpose() * Z) / static_cast<double>(Z.rows());
}

void check_shapes(const FactorParams& params, const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows() || X.cols() != params.P.rows() || Y.cols() != params.Q.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "data and loadings disagree on dimensions");
  }
}

}  // namespace

double marginal_log_likelihood(const FactorParams& params, const Matrix& X, const Matrix& Y) {
  check_shapes(params, X, Y);
  const Matrix C = model_covariance(params);
  Eigen::LLT<Matrix> llt(C);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularModelCovariance, "model covariance C is not invertible");
  }
  const Matrix S = sample_covariance(X, Y);
  const double T = static_cast<double>(X.rows());
  const double d = static_cast<double>(C.rows());
  const Matrix Lc = llt.matrixL();
  const double logdet = 2.0 * Lc.diagonal().array().log().sum();
  const double trace = llt.solve(S).trace();
  return -0.5 * T * (d * std::log(2.0 * std::numbers::pi) + logdet + trace);
}

double marginal_log_likelihood(const FactorParams& params, const DataPanel& panel) {
  detail::require_complete(panel, "marginal_log_likelihood");
  return marginal_log_likelihood(params, panel.X, panel.Y);
}

double mle_foc_residual(const FactorParams& params, const Matrix& X, const Matrix& Y) {
  check_shapes(params, X, Y);
  const Matrix C = model_covariance(params);
  Eigen::LLT<Matrix> llt(C);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularModelCovariance, "model covariance C is not invertible");
  }
  const Matrix S = sample_covariance(X, Y);
  const Matrix L = params.stacked();
  // (S C^-1 - I) L = S (C^-1 L) - L
  const Matrix residual = S * llt.solve(L) - L;
  return residual.norm();
}

double mle_foc_residual(const FactorParams& params, const DataPanel& panel) {
  detail::require_complete(panel, "mle_foc_residual");
  return mle_foc_residual(params, panel.X, panel.Y);
}

Matrix predict_targets(const FactorParams& params, const Matrix& X_new) {
  if (X_new.cols() != params.P.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "X_new has the wrong number of columns");
  }
  // E[f | x] = Omega_x P' x / sigma2_x, Omega_x = (V_F^-1 + P'P / sigma2_x)^-1,
  // which equals V_F P' C_X^-1 x without forming the p x p matrix C_X.
  const Matrix precision = detail::spd_inverse(params.V_F, "V_F") +
                           params.P.transpose() * params.P / params.sigma2_x;
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMatrix, "feature-only posterior precision");
  }
  const Matrix projection = llt.solve(params.P.transpose()).transpose() / params.sigma2_x;  // p x k
  return X_new * projection * params.Q.transpose();
}

Matrix fitted_targets(const FactorParams& params, const PosteriorMoments& posterior) {
  return posterior.M * params.Q.transpose();
}

RSquared r_squared(const Matrix& Y, const Matrix& Y_hat) {
  if (Y.rows() != Y_hat.rows() || Y.cols() != Y_hat.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "Y and Y_hat shapes differ");
  }
  RSquared out;
  out.per_target.resize(Y.cols());
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    const double mean = Y.col(j).mean();
    const double ss_tot = (Y.col(j).array() - mean).square().sum();
    if (!(ss_tot > 0.0)) {
      throw Error(ErrorCode::ZeroVarianceTarget, "target column " + std::to_string(j) + " has zero variance");
    }
    const double ss_res = (Y.col(j) - Y_hat.col(j)).squaredNorm();
    out.per_target(j) = 1.0 - ss_res / ss_tot;
  }
  out.average = out.per_target.mean();
  return out;
}

}  // namespace ptfa
