#include "qcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qcert/tolerances.hpp"

namespace qcert {

bool all_finite(const Matrix& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const cplx z = x.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

double max_abs(const Matrix& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

bool is_hermitian(const Matrix& x, double tol) {
  return x.rows() == x.cols() && max_abs(x - x.adjoint()) <= tol;
}

bool is_unitary(const Matrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())) <= tol;
}

RealVector hermitian_eigenvalues(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

bool is_psd(const Matrix& x, double tol) {
  if (!is_hermitian(x, tol)) return false;
  return hermitian_eigenvalues(x).minCoeff() >= -tol;
}

Matrix psd_sqrt(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.adjoint()));
  RealVector ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -tol::kPsd) {
    throw InvalidInput("psd_sqrt: matrix has eigenvalue " + std::to_string(ev.minCoeff()));
  }
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::sqrt(std::max(ev(i), 0.0));
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

Matrix positive_part_projector(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.adjoint()));
  Matrix p = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (es.eigenvalues()(i) > 0) p += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  }
  return p;
}

// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) throw DimensionMismatch("DensityMatrix: matrix must be square and non-empty");
  if (!all_finite(m_)) throw InvalidInput("DensityMatrix: non-finite entries");
  if (!is_hermitian(m_, tol::kHermitian)) throw InvalidInput("DensityMatrix: not Hermitian");
  if (std::abs(m_.trace() - cplx(1.0)) > tol::kUnitTrace) throw InvalidInput("DensityMatrix: trace differs from 1");
  if (hermitian_eigenvalues(m_).minCoeff() < -tol::kPsd) throw InvalidInput("DensityMatrix: not positive semidefinite");
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return DensityMatrix(Matrix::Identity(d, d) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::basis_state(std::size_t dim, std::size_t index) {
  return PureState::basis_state(dim, index).density();
}

double DensityMatrix::purity() const { return hs_inner(m_, m_).real(); }

PureState::PureState(Vector amplitudes) : v_(std::move(amplitudes)) {
  if (v_.size() == 0) throw DimensionMismatch("PureState: empty amplitude vector");
  if (!all_finite(v_)) throw InvalidInput("PureState: non-finite amplitudes");
  if (std::abs(v_.norm() - 1.0) > tol::kStateNorm) throw InvalidInput("PureState: amplitudes not normalized");
}

PureState PureState::basis_state(std::size_t dim, std::size_t index) {
  if (index >= dim) throw InvalidInput("PureState::basis_state: index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return PureState(std::move(v));
}

Povm::Povm(std::vector<Matrix> effects, std::vector<std::string> labels)
    : effects_(std::move(effects)), labels_(std::move(labels)) {
  if (effects_.empty()) throw InvalidInput("Povm: no effects");
  if (labels_.size() != effects_.size()) throw InvalidInput("Povm: label count differs from effect count");
  const Eigen::Index d = effects_.front().rows();
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& e : effects_) {
    if (e.rows() != d || e.cols() != d) throw DimensionMismatch("Povm: effects differ in shape");
    if (!is_psd(e, tol::kPsd)) throw InvalidInput("Povm: effect is not positive semidefinite");
    sum += e;
  }
  if (max_abs(sum - Matrix::Identity(d, d)) > tol::kPovmSum) throw InvalidInput("Povm: effects do not sum to identity");
}

Povm Povm::computational_basis(std::size_t n_qubits) {
  const std::size_t d = std::size_t{1} << n_qubits;
  std::vector<Matrix> effects;
  std::vector<std::string> labels;
  effects.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    Matrix e = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    e(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
    effects.push_back(std::move(e));
    std::string label(n_qubits, '0');
    for (std::size_t q = 0; q < n_qubits; ++q) {
      if ((k >> (n_qubits - 1 - q)) & 1U) label[q] = '1';
    }
    labels.push_back(std::move(label));
  }
  return Povm(std::move(effects), std::move(labels));
}

Povm Povm::binary(const Matrix& pass_effect) {
  const Eigen::Index d = pass_effect.rows();
  return Povm({pass_effect, Matrix::Identity(d, d) - pass_effect}, {"pass", "fail"});
}

std::vector<double> Povm::probabilities(const Matrix& rho) const {
  if (rho.rows() != static_cast<Eigen::Index>(dim())) throw DimensionMismatch("Povm::probabilities: state dimension");
  std::vector<double> p(effects_.size());
  double total = 0.0;
  for (std::size_t k = 0; k < effects_.size(); ++k) {
    p[k] = std::max(0.0, hs_inner(effects_[k], rho).real());
    total += p[k];
  }
  for (auto& v : p) v /= total;
  return p;
}

// ---------------------------------------------------------------------------

std::vector<double> singular_values(const Matrix& x) {
  if (!all_finite(x)) throw InvalidInput("singular_values: non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(x);
  const RealVector& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

double schatten_norm(const Matrix& x, Schatten p) {
  const auto s = singular_values(x);
  switch (p) {
    case Schatten::One: {
      double acc = 0.0;
      for (double v : s) acc += v;
      return acc;
    }
    case Schatten::Two:
      // Frobenius norm equals the l2 norm of the spectrum.
      return x.norm();
    case Schatten::Inf:
      return s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
  }
  return 0.0;
}

cplx hs_inner(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw DimensionMismatch("hs_inner: shape mismatch");
  return (x.conjugate().cwiseProduct(y)).sum();
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw DimensionMismatch("trace_distance: dimension mismatch");
  // The difference is Hermitian, so the trace norm is the sum of absolute eigenvalues.
  const RealVector ev = hermitian_eigenvalues(rho.matrix() - sigma.matrix());
  return std::clamp(0.5 * ev.cwiseAbs().sum(), 0.0, 1.0);
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw DimensionMismatch("fidelity: dimension mismatch");
  const Matrix m = psd_sqrt(rho.matrix()) * psd_sqrt(sigma.matrix());
  const double root = schatten_norm(m, Schatten::One);
  return std::clamp(root * root, 0.0, 1.0);
}

double fidelity(const PureState& psi, const DensityMatrix& sigma) {
  if (psi.dim() != sigma.dim()) throw DimensionMismatch("fidelity: dimension mismatch");
  const cplx f = psi.amplitudes().dot(sigma.matrix() * psi.amplitudes());
  return std::clamp(f.real(), 0.0, 1.0);
}

// ---------------------------------------------------------------------------

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

Matrix partial_trace(const Matrix& x, const std::vector<std::size_t>& dims, std::size_t which) {
  if (which >= dims.size()) throw DimensionMismatch("partial_trace: subsystem index out of range");
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  if (x.rows() != static_cast<Eigen::Index>(total) || x.cols() != static_cast<Eigen::Index>(total)) {
    throw DimensionMismatch("partial_trace: operator size does not match subsystem dimensions");
  }
  // Index layout: (left, traced, right), first subsystem most significant.
  std::size_t left = 1, right = 1;
  for (std::size_t i = 0; i < which; ++i) left *= dims[i];
  for (std::size_t i = which + 1; i < dims.size(); ++i) right *= dims[i];
  const std::size_t mid = dims[which];
  const auto out_dim = static_cast<Eigen::Index>(left * right);
  Matrix out = Matrix::Zero(out_dim, out_dim);
  for (std::size_t l1 = 0; l1 < left; ++l1)
    for (std::size_t r1 = 0; r1 < right; ++r1)
      for (std::size_t l2 = 0; l2 < left; ++l2)
        for (std::size_t r2 = 0; r2 < right; ++r2) {
          cplx acc = 0.0;
          for (std::size_t m = 0; m < mid; ++m) {
            acc += x(static_cast<Eigen::Index>((l1 * mid + m) * right + r1),
                     static_cast<Eigen::Index>((l2 * mid + m) * right + r2));
          }
          out(static_cast<Eigen::Index>(l1 * right + r1), static_cast<Eigen::Index>(l2 * right + r2)) = acc;
        }
  return out;
}

Matrix swap_operator(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d * d);
  Matrix f = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) f(static_cast<Eigen::Index>(j * d + i), static_cast<Eigen::Index>(i * d + j)) = 1.0;
  return f;
}

Vector vectorize(const Matrix& x) {
  Vector v(x.size());
  for (Eigen::Index c = 0; c < x.cols(); ++c) v.segment(c * x.rows(), x.rows()) = x.col(c);
  return v;
}

Matrix unvectorize(const Vector& v, std::size_t rows, std::size_t cols) {
  if (static_cast<std::size_t>(v.size()) != rows * cols) throw DimensionMismatch("unvectorize: size mismatch");
  Matrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t c = 0; c < cols; ++c)
    x.col(static_cast<Eigen::Index>(c)) = v.segment(static_cast<Eigen::Index>(c * rows), static_cast<Eigen::Index>(rows));
  return x;
}

}  // namespace qcert
