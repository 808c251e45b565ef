#include "ptfa/banded.hpp"

#include <string>

namespace ptfa::banded {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

}  // namespace

BlockBandedMatrix BlockBandedMatrix::zeros(int T, int k) {
  BlockBandedMatrix B;
  B.T = T;
  B.k = k;
  B.diag.assign(static_cast<size_t>(T), Matrix::Zero(k, k));
  B.sub.assign(static_cast<size_t>(std::max(T - 1, 0)), Matrix::Zero(k, k));
  return B;
}

Matrix BlockBandedMatrix::to_dense() const {
  Matrix D = Matrix::Zero(dim(), dim());
  for (int t = 0; t < T; ++t) D.block(t * k, t * k, k, k) = diag[t];
  for (int t = 0; t + 1 < T; ++t) {
    D.block((t + 1) * k, t * k, k, k) = sub[t];
    D.block(t * k, (t + 1) * k, k, k) = sub[t].transpose();
  }
  return D;
}

Matrix BlockBandedMatrix::multiply(const Matrix& x) const {
  require(x.rows() == dim(), "banded multiply: rhs has wrong row count");
  Matrix y(x.rows(), x.cols());
  for (int t = 0; t < T; ++t) {
    auto yt = y.middleRows(t * k, k);
    yt = diag[t] * x.middleRows(t * k, k);
    if (t > 0) yt += sub[t - 1] * x.middleRows((t - 1) * k, k);
    if (t + 1 < T) yt += sub[t].transpose() * x.middleRows((t + 1) * k, k);
  }
  return y;
}

Matrix BandedCholesky::to_dense() const {
  Matrix D = Matrix::Zero(T * k, T * k);
  for (int t = 0; t < T; ++t) D.block(t * k, t * k, k, k) = diag[t];
  for (int t = 0; t + 1 < T; ++t) D.block((t + 1) * k, t * k, k, k) = sub[t];
  return D;
}

double BandedCholesky::log_determinant() const {
  double acc = 0.0;
  for (const auto& d : diag) acc += d.diagonal().array().log().sum();
  return 2.0 * acc;
}

BlockBandedMatrix assemble_dfm_precision(const Matrix& A, const Matrix& V_inv, const std::vector<Matrix>& G) {
  const int T = static_cast<int>(G.size());
  require(T >= 1, "assemble_dfm_precision: T must be positive");
  const int k = static_cast<int>(A.rows());
  require(A.cols() == k && V_inv.rows() == k && V_inv.cols() == k,
          "assemble_dfm_precision: A and V_inv must be k x k");
  for (const auto& g : G) require(g.rows() == k && g.cols() == k, "assemble_dfm_precision: G must be k x k");

  BlockBandedMatrix B = BlockBandedMatrix::zeros(T, k);
  const Matrix propagated = A.transpose() * V_inv * A;
  const Matrix coupling = -V_inv * A;
  for (int t = 0; t < T; ++t) {
    B.diag[t] = V_inv + G[t];
    if (t + 1 < T) {
      B.diag[t] += propagated;
      B.sub[t] = coupling;
    }
    B.diag[t] = detail::symmetrize(B.diag[t]);
  }
  return B;
}

BlockBandedMatrix assemble_dfm_precision(const Matrix& A, const Matrix& V_inv, const Matrix& G, int T) {
  require(T >= 1, "assemble_dfm_precision: T must be positive");
  return assemble_dfm_precision(A, V_inv, std::vector<Matrix>(static_cast<size_t>(T), G));
}

BandedCholesky cholesky(const BlockBandedMatrix& B) {
  BandedCholesky F;
  F.T = B.T;
  F.k = B.k;
  F.diag.resize(B.diag.size());
  F.sub.resize(B.sub.size());
  for (int t = 0; t < B.T; ++t) {
    Matrix pivot = B.diag[t];
    if (t > 0) {
      // R_{t,t-1} = B_{t,t-1} R_{t-1,t-1}^{-T}
      F.sub[t - 1] = F.diag[t - 1]
                         .triangularView<Eigen::Lower>()
                         .solve(B.sub[t - 1].transpose())
                         .transpose();
      pivot.noalias() -= F.sub[t - 1] * F.sub[t - 1].transpose();
    }
    Eigen::LLT<Matrix> llt(pivot);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
      throw NotPositiveDefiniteError(t, "banded Cholesky failed at block " + std::to_string(t));
    }
    F.diag[t] = llt.matrixL();
  }
  return F;
}

Matrix solve(const BandedCholesky& F, const Matrix& rhs) {
  const int k = F.k;
  require(rhs.rows() == F.T * k, "banded solve: rhs has wrong row count");
  Matrix y(rhs.rows(), rhs.cols());
  for (int t = 0; t < F.T; ++t) {
    Matrix b = rhs.middleRows(t * k, k);
    if (t > 0) b.noalias() -= F.sub[t - 1] * y.middleRows((t - 1) * k, k);
    y.middleRows(t * k, k) = F.diag[t].triangularView<Eigen::Lower>().solve(b);
  }
  Matrix x(rhs.rows(), rhs.cols());
  for (int t = F.T - 1; t >= 0; --t) {
    Matrix b = y.middleRows(t * k, k);
    if (t + 1 < F.T) b.noalias() -= F.sub[t].transpose() * x.middleRows((t + 1) * k, k);
    x.middleRows(t * k, k) = F.diag[t].transpose().triangularView<Eigen::Upper>().solve(b);
  }
  return x;
}

InverseBand partial_inverse_band(const BandedCholesky& F) {
  // From R' Sigma = R^-1 (lower triangular), block row t gives
  //   Sigma_{t,t+1} = -R_tt^-T R_{t+1,t}' Sigma_{t+1,t+1}
  //   Sigma_{t,t}   =  R_tt^-T (R_tt^-1 - R_{t+1,t}' Sigma_{t+1,t})
  const int T = F.T;
  const int k = F.k;
  InverseBand band;
  band.diag.resize(static_cast<size_t>(T));
  band.lower.resize(static_cast<size_t>(std::max(T - 1, 0)));
  const Matrix I = Matrix::Identity(k, k);
  for (int t = T - 1; t >= 0; --t) {
    const auto Rt = F.diag[t].triangularView<Eigen::Lower>();
    const Matrix Rinv = Rt.solve(I);
    if (t == T - 1) {
      band.diag[t] = detail::symmetrize(Rinv.transpose() * Rinv);
      continue;
    }
    const Matrix upper = -Rt.transpose().solve(F.sub[t].transpose() * band.diag[t + 1]);  // Sigma_{t,t+1}
    band.lower[t] = upper.transpose();
    band.diag[t] = detail::symmetrize(Rt.transpose().solve(Rinv - F.sub[t].transpose() * band.lower[t]));
  }
  return band;
}

}  // namespace ptfa::banded
