#include "ptfa/baselines.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace ptfa {

std::string_view to_string(BaselineMethod method) noexcept {
  switch (method) {
    case BaselineMethod::PLS: return "pls";
    case BaselineMethod::PCA: return "pca";
    case BaselineMethod::PPCA: return "ppca";
  }
  return "unknown";
}

Matrix BaselineFit::predict(const Matrix& X_new) const {
  if (X_new.cols() != projection.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "X_new has the wrong number of columns");
  }
  return X_new * projection * coef;
}

namespace {

constexpr double kInnerTolerance = 1e-10;
constexpr int kInnerMaxIter = 500;

void check_inputs(const Matrix& X, const Matrix& Y, int k, int k_max) {
  if (X.rows() != Y.rows()) throw Error(ErrorCode::DimensionMismatch, "X and Y row counts differ");
  if (!X.allFinite() || !Y.allFinite()) throw Error(ErrorCode::MissingValues, "baselines require complete data");
  if (k < 1 || k > k_max) {
    throw Error(ErrorCode::InvalidArgument, "k must lie in [1, " + std::to_string(k_max) + "]");
  }
}

Matrix least_squares_coef(const Matrix& scores, const Matrix& Y) {
  Eigen::LLT<Matrix> llt(scores.transpose() * scores);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::RankDeficientScores, "score matrix is rank deficient");
  }
  const Vector d = llt.matrixL().toDenseMatrix().diagonal();
  if (d.minCoeff() <= 1e-10 * std::max(1.0, d.maxCoeff())) {
    throw Error(ErrorCode::RankDeficientScores, "score matrix is rank deficient");
  }
  return llt.solve(scores.transpose() * Y);
}

struct PlsComponents {
  Matrix W;  // p x k
  Matrix R;  // p x k, scores = X R
};

PlsComponents nipals(const Matrix& X, const Matrix& Y, int k) {
  const Eigen::Index p = X.cols();
  Matrix E = X;
  Matrix W(p, k), Pl(p, k);
  for (int a = 0; a < k; ++a) {
    Eigen::Index start = 0;
    (Y.colwise().squaredNorm()).maxCoeff(&start);
    Vector u = Y.col(start);
    Vector t_old = Vector::Zero(X.rows());
    Vector w, t;
    for (int it = 0; it < kInnerMaxIter; ++it) {
      w = E.transpose() * u;
      const double norm = w.norm();
      if (norm == 0.0 || !std::isfinite(norm)) {
        throw Error(ErrorCode::ZeroWeightVector, "component " + std::to_string(a) + " has a zero weight vector");
      }
      w /= norm;
      t = E * w;
      const double tt = t.squaredNorm();
      if (tt == 0.0) {
        throw Error(ErrorCode::ZeroWeightVector, "component " + std::to_string(a) + " has a zero score vector");
      }
      if (Y.cols() == 1) break;
      const Vector c = Y.transpose() * t / tt;
      u = Y * c / c.squaredNorm();
      if ((t - t_old).norm() <= kInnerTolerance * t.norm()) break;
      t_old = t;
    }
    const Vector pl = E.transpose() * t / t.squaredNorm();
    E -= t * pl.transpose();
    W.col(a) = w;
    Pl.col(a) = pl;
  }
  const Matrix PtW = Pl.transpose() * W;
  Eigen::FullPivLU<Matrix> lu(PtW);
  if (!lu.isInvertible()) throw Error(ErrorCode::RankDeficientScores, "PLS loadings and weights are degenerate");
  return {W, W * lu.inverse()};
}

}  // namespace

BaselineFit fit_nipals_pls(const Matrix& X, const Matrix& Y, int k, PlsVariant variant) {
  check_inputs(X, Y, k, static_cast<int>(std::min(X.rows(), X.cols())));
  BaselineFit fit;
  fit.method = BaselineMethod::PLS;
  fit.variant = variant;
  if (variant == PlsVariant::PLS2) {
    const PlsComponents c = nipals(X, Y, k);
    fit.weights = c.W;
    fit.projection = c.R;
    fit.scores = X * c.R;
    fit.coef = least_squares_coef(fit.scores, Y);
  } else {
    const Eigen::Index q = Y.cols();
    fit.weights.resize(X.cols(), k * q);
    fit.projection.resize(X.cols(), k * q);
    fit.coef = Matrix::Zero(k * q, q);
    for (Eigen::Index j = 0; j < q; ++j) {
      const PlsComponents c = nipals(X, Y.col(j), k);
      fit.weights.middleCols(j * k, k) = c.W;
      fit.projection.middleCols(j * k, k) = c.R;
      fit.coef.block(j * k, j, k, 1) = least_squares_coef(X * c.R, Y.col(j));
    }
    fit.scores = X * fit.projection;
  }
  fit.fitted = fit.scores * fit.coef;
  return fit;
}

BaselineFit fit_nipals_pls(const DataPanel& panel, int k, PlsVariant variant) {
  detail::require_complete(panel, "fit_nipals_pls");
  return fit_nipals_pls(panel.X, panel.Y, k, variant);
}

BaselineFit fit_pca_regression(const Matrix& X, const Matrix& Y, int k) {
  check_inputs(X, Y, k, static_cast<int>(std::min(X.rows(), X.cols())));
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinV);
  BaselineFit fit;
  fit.method = BaselineMethod::PCA;
  fit.weights = svd.matrixV().leftCols(k);
  fit.projection = fit.weights;
  fit.scores = X * fit.projection;
  fit.coef = least_squares_coef(fit.scores, Y);
  fit.fitted = fit.scores * fit.coef;
  return fit;
}

BaselineFit fit_pca_regression(const DataPanel& panel, int k) {
  detail::require_complete(panel, "fit_pca_regression");
  return fit_pca_regression(panel.X, panel.Y, k);
}

BaselineFit fit_ppca_regression(const Matrix& X, const Matrix& Y, int k) {
  const int p = static_cast<int>(X.cols());
  check_inputs(X, Y, k, std::min(static_cast<int>(X.rows()), p - 1));
  const Matrix S = X.transpose() * X / static_cast<double>(X.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  // Eigen sorts ascending; retained components are the last k.
  const Vector lambda = eig.eigenvalues().reverse();
  const Matrix U = eig.eigenvectors().rowwise().reverse();
  const double sigma2 = lambda.tail(p - k).mean();
  if (!(lambda(k - 1) > sigma2)) {
    throw Error(ErrorCode::NegativeVarianceGap, "retained eigenvalue does not exceed the noise variance");
  }
  BaselineFit fit;
  fit.method = BaselineMethod::PPCA;
  fit.noise_variance = sigma2;
  const Vector scale = (lambda.head(k).array() - sigma2).sqrt();
  fit.weights = U.leftCols(k) * scale.asDiagonal();
  const Matrix Mk = fit.weights.transpose() * fit.weights + sigma2 * Matrix::Identity(k, k);
  fit.projection = Mk.llt().solve(fit.weights.transpose()).transpose();
  fit.scores = X * fit.projection;
  fit.coef = least_squares_coef(fit.scores, Y);
  fit.fitted = fit.scores * fit.coef;
  return fit;
}

BaselineFit fit_ppca_regression(const DataPanel& panel, int k) {
  detail::require_complete(panel, "fit_ppca_regression");
  return fit_ppca_regression(panel.X, panel.Y, k);
}

BaselineFit fit_baseline(BaselineMethod method, const Matrix& X, const Matrix& Y, int k) {
  switch (method) {
    case BaselineMethod::PLS: return fit_nipals_pls(X, Y, k);
    case BaselineMethod::PCA: return fit_pca_regression(X, Y, k);
    case BaselineMethod::PPCA: return fit_ppca_regression(X, Y, k);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown baseline method");
}

}  // namespace ptfa
