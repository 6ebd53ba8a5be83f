#pragma once

#include <cmath>

#include "qcert/linalg.hpp"
#include "qcert/randomness.hpp"

namespace qcert::testing {

inline Matrix random_matrix(SeededRng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.complex_normal();
  return m;
}

inline Matrix random_density(SeededRng& rng, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  const Matrix g = random_matrix(rng, n, n);
  const Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline Matrix ket0_projector(std::size_t d) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  m(0, 0) = 1.0;
  return m;
}

// max |a - b| entrywise
inline double dist(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace qcert::testing
