#pragma once

// Symmetric positive-definite block-tridiagonal matrices (one sub-diagonal
// band of k x k blocks), their banded Cholesky factor, block solves, and the
// band of the inverse recovered without forming the dense inverse.

#include <vector>

#include "ptfa/core.hpp"

namespace ptfa::banded {

/// Lower bands of a symmetric block-banded matrix with bandwidth one block.
/// sub[t] holds block (t+1, t), so sub.size() == T - 1.
struct BlockBandedMatrix {
  int T = 0;
  int k = 0;
  std::vector<Matrix> diag;
  std::vector<Matrix> sub;

  static BlockBandedMatrix zeros(int T, int k);
  int dim() const { return T * k; }
  Matrix to_dense() const;
  /// B * x for a stacked vector/matrix with T*k rows.
  Matrix multiply(const Matrix& x) const;
};

/// Lower-triangular banded factor R with R R' = B. diag[t] are lower
/// triangular with positive diagonal; sub[t] holds block (t+1, t).
struct BandedCholesky {
  int T = 0;
  int k = 0;
  std::vector<Matrix> diag;
  std::vector<Matrix> sub;

  Matrix to_dense() const;
  double log_determinant() const;
};

/// Diagonal and first sub-diagonal blocks of B^-1. lower[t] holds block (t+1, t).
struct InverseBand {
  std::vector<Matrix> diag;
  std::vector<Matrix> lower;
};

/// Posterior precision of stacked VAR(1) factors:
/// H_A' (I_T (x) Vinv) H_A + I_T (x) G.
BlockBandedMatrix assemble_dfm_precision(const Matrix& A, const Matrix& V_inv, const Matrix& G, int T);

/// Same, with a per-period data term G_t (periods with partially observed data).
BlockBandedMatrix assemble_dfm_precision(const Matrix& A, const Matrix& V_inv, const std::vector<Matrix>& G);

/// Throws NotPositiveDefiniteError carrying the failing block index.
BandedCholesky cholesky(const BlockBandedMatrix& B);

/// B^-1 rhs with rhs of T*k rows (any number of columns).
Matrix solve(const BandedCholesky& F, const Matrix& rhs);

InverseBand partial_inverse_band(const BandedCholesky& F);

}  // namespace ptfa::banded
