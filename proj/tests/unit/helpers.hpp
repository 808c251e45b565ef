#pragma once

#include <random>

#include "ptfa/core.hpp"
#include "ptfa/simulation.hpp"

namespace ptfa::testing {

inline Matrix gaussian(int rows, int cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = n(rng);
  return out;
}

inline Matrix random_spd(int n, std::mt19937_64& rng) {
  const Matrix a = gaussian(n, n, rng);
  return a * a.transpose() + n * Matrix::Identity(n, n);
}

// Standardized DGP-Simple panel.
inline DataPanel simple_panel(std::uint64_t seed, int T = 200, int p = 10, int q = 3, int k = 2) {
  DgpSpec spec;
  spec.T = T;
  spec.p = p;
  spec.q = q;
  spec.k = k;
  spec.seed = seed;
  const SimulatedData d = generate(spec);
  return standardize(d.raw_X, d.raw_Y);
}

inline FactorParams random_params(int p, int q, int k, std::mt19937_64& rng) {
  FactorParams th;
  th.P = gaussian(p, k, rng);
  th.Q = gaussian(q, k, rng);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  th.sigma2_x = u(rng);
  th.sigma2_y = u(rng);
  th.V_F = Matrix::Identity(k, k);
  return th;
}

// Dense-Gaussian log density, evaluated without any library code.
inline double gaussian_logpdf(const Vector& z, const Matrix& C) {
  Eigen::LDLT<Matrix> ldlt(C);
  const double logdet = ldlt.vectorD().array().log().sum();
  return -0.5 * (z.size() * std::log(2.0 * M_PI) + logdet + z.dot(ldlt.solve(z)));
}

}  // namespace ptfa::testing
