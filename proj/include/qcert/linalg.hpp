#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qcert {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Raised for malformed numerical input (non-finite entries, non-PSD states, bad parameters).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when operand shapes do not fit together.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

bool all_finite(const Matrix& x);
double max_abs(const Matrix& x);
bool is_hermitian(const Matrix& x, double tol);
bool is_unitary(const Matrix& u, double tol);
/// Eigenvalues of a Hermitian matrix in ascending order.
RealVector hermitian_eigenvalues(const Matrix& x);
bool is_psd(const Matrix& x, double tol);

/// Square root of a PSD matrix through its eigendecomposition; eigenvalues down to -tol are clamped at 0.
Matrix psd_sqrt(const Matrix& x);
/// Projector onto the eigenspaces of a Hermitian matrix with strictly positive eigenvalues.
Matrix positive_part_projector(const Matrix& x);

// ---------------------------------------------------------------------------
// States and measurements

class DensityMatrix {
 public:
  /// Validates Hermiticity, positivity and unit trace against the shared tolerances.
  explicit DensityMatrix(Matrix m);

  static DensityMatrix maximally_mixed(std::size_t dim);
  static DensityMatrix basis_state(std::size_t dim, std::size_t index);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double purity() const;

 private:
  Matrix m_;
};

class PureState {
 public:
  explicit PureState(Vector amplitudes);

  static PureState basis_state(std::size_t dim, std::size_t index);

  std::size_t dim() const { return static_cast<std::size_t>(v_.size()); }
  const Vector& amplitudes() const { return v_; }
  Matrix projector() const { return v_ * v_.adjoint(); }
  DensityMatrix density() const { return DensityMatrix(projector()); }

 private:
  Vector v_;
};

class Povm {
 public:
  Povm(std::vector<Matrix> effects, std::vector<std::string> labels);

  /// Projective measurement in the computational basis with bit-string labels.
  static Povm computational_basis(std::size_t n_qubits);
  /// Two-outcome test {effect, 1 - effect} labelled "pass"/"fail".
  static Povm binary(const Matrix& pass_effect);

  std::size_t dim() const { return static_cast<std::size_t>(effects_.front().rows()); }
  std::size_t size() const { return effects_.size(); }
  const std::vector<Matrix>& effects() const { return effects_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Born-rule probabilities, clipped at 0 and renormalized against round-off.
  std::vector<double> probabilities(const Matrix& rho) const;

 private:
  std::vector<Matrix> effects_;
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Norms and distances

enum class Schatten { One, Two, Inf };

std::vector<double> singular_values(const Matrix& x);
double schatten_norm(const Matrix& x, Schatten p);
/// Hilbert-Schmidt inner product Tr[X^dagger Y].
cplx hs_inner(const Matrix& x, const Matrix& y);

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);
/// Squared fidelity ||sqrt(rho) sqrt(sigma)||_1^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
double fidelity(const PureState& psi, const DensityMatrix& sigma);

// ---------------------------------------------------------------------------
// Tensor algebra

Matrix kron(const Matrix& a, const Matrix& b);
Vector kron(const Vector& a, const Vector& b);
/// Trace out subsystem `which` of a multipartite operator with the given local dimensions.
Matrix partial_trace(const Matrix& x, const std::vector<std::size_t>& dims, std::size_t which);
/// Flip operator F|i,j> = |j,i> on C^d (x) C^d.
Matrix swap_operator(std::size_t d);
/// Column-stacking vectorization, vec(ABC) = (C^T (x) A) vec(B).
Vector vectorize(const Matrix& x);
Matrix unvectorize(const Vector& v, std::size_t rows, std::size_t cols);

}  // namespace qcert
