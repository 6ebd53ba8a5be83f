#include "qcert/channels.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "qcert/kernels.hpp"
#include "qcert/stabilizer.hpp"
#include "qcert/tolerances.hpp"

namespace qcert {

struct Channel::Cache {
  std::mutex mu;
  std::optional<std::vector<Matrix>> kraus;
  std::optional<Matrix> choi;
};

namespace {

Matrix identity_matrix(std::size_t d) {
  return Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
}

// Unnormalized |1>> = sum_j |j>|j> projector.
Matrix max_entangled_projector(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d * d);
  Matrix phi = Matrix::Zero(n, n);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      phi(static_cast<Eigen::Index>(a * d + a), static_cast<Eigen::Index>(b * d + b)) = 1.0;
  return phi;
}

void check_choi_size(std::size_t din, std::size_t dout) {
  if (din * dout > kMaxChoiSide)
    throw InvalidInput("channel: Choi matrix of side " + std::to_string(din * dout) + " exceeds the size limit");
}

// Re-expresses a long Kraus list through its Choi matrix, which has at most din*dout terms.
std::vector<Matrix> compress_kraus(std::vector<Matrix> kraus) {
  const auto din = static_cast<std::size_t>(kraus.front().cols());
  const auto dout = static_cast<std::size_t>(kraus.front().rows());
  if (kraus.size() <= din * dout) return kraus;
  return kraus_from_choi(choi_from_kraus(kraus), din, dout);
}

bool is_structured_unitary(const Channel& c) {
  return c.kind() == Channel::Kind::Identity || c.kind() == Channel::Kind::Unitary;
}

bool is_depolarizing_family(const Channel& c) {
  return c.kind() == Channel::Kind::Identity || c.kind() == Channel::Kind::Depolarizing;
}

void check_square_same(const Channel& x, const Channel& y, const char* where) {
  if (x.dim_in() != x.dim_out() || y.dim_in() != y.dim_out() || x.dim_in() != y.dim_in())
    throw DimensionMismatch(std::string(where) + ": channels must act on the same space");
}

}  // namespace

Channel::Channel(Kind kind, std::size_t din, std::size_t dout)
    : kind_(kind), din_(din), dout_(dout), cache_(std::make_shared<Cache>()) {}

Channel::Channel() : Channel(Kind::Identity, 1, 1) { u_ = identity_matrix(1); }

Channel Channel::identity(std::size_t d) {
  if (d == 0) throw InvalidInput("Channel::identity: dimension must be positive");
  Channel c(Kind::Identity, d, d);
  c.u_ = identity_matrix(d);
  return c;
}

Channel Channel::unitary(const Matrix& u) {
  if (u.rows() == 0 || u.rows() != u.cols()) throw DimensionMismatch("Channel::unitary: matrix must be square");
  if (!all_finite(u) || !is_unitary(u, tol::kUnitary)) throw InvalidInput("Channel::unitary: matrix is not unitary");
  Channel c(Kind::Unitary, static_cast<std::size_t>(u.rows()), static_cast<std::size_t>(u.rows()));
  c.u_ = u;
  return c;
}

Channel Channel::depolarizing(std::size_t d, double p) {
  if (d == 0) throw InvalidInput("Channel::depolarizing: dimension must be positive");
  const double dd = static_cast<double>(d);
  const double lo = d == 1 ? -0.5 : -1.0 / (dd * dd - 1.0);
  if (!std::isfinite(p) || p < lo - 1e-15 || p > 1.0 + 1e-15)
    throw InvalidInput("Channel::depolarizing: p = " + std::to_string(p) + " outside the CPT range [" +
                       std::to_string(lo) + ", 1]");
  Channel c(Kind::Depolarizing, d, d);
  c.p_ = std::min(p, 1.0);
  return c;
}

Channel Channel::amplitude_damping(double gamma, std::size_t n_qubits) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("Channel::amplitude_damping: gamma must lie in [0, 1]");
  if (n_qubits == 0) throw InvalidInput("Channel::amplitude_damping: need at least one qubit");
  Matrix k0 = Matrix::Zero(2, 2), k1 = Matrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(1.0 - gamma);
  k1(0, 1) = std::sqrt(gamma);
  Channel single = kraus_list({k0, k1});
  Channel out = single;
  for (std::size_t q = 1; q < n_qubits; ++q) out = tensor(out, single);
  return out;
}

Channel Channel::bit_flip(double p, std::size_t n_qubits) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("Channel::bit_flip: p must lie in [0, 1]");
  if (n_qubits == 0) throw InvalidInput("Channel::bit_flip: need at least one qubit");
  Matrix x = Matrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  Channel single = kraus_list({std::sqrt(1.0 - p) * identity_matrix(2), std::sqrt(p) * x});
  Channel out = single;
  for (std::size_t q = 1; q < n_qubits; ++q) out = tensor(out, single);
  return out;
}

Channel Channel::kraus_list(std::vector<Matrix> kraus, bool require_tp) {
  if (kraus.empty()) throw InvalidInput("Channel::kraus_list: no Kraus operators");
  const auto rows = kraus.front().rows();
  const auto cols = kraus.front().cols();
  if (rows == 0 || cols == 0) throw InvalidInput("Channel::kraus_list: empty Kraus operator");
  Matrix sum = Matrix::Zero(cols, cols);
  for (const auto& k : kraus) {
    if (k.rows() != rows || k.cols() != cols) throw DimensionMismatch("Channel::kraus_list: Kraus shapes differ");
    if (!all_finite(k)) throw InvalidInput("Channel::kraus_list: non-finite Kraus entry");
    sum += k.adjoint() * k;
  }
  if (require_tp && max_abs(sum - Matrix::Identity(cols, cols)) > tol::kTracePreserving)
    throw InvalidInput("Channel::kraus_list: Kraus operators are not trace preserving");
  Channel c(Kind::Kraus, static_cast<std::size_t>(cols), static_cast<std::size_t>(rows));
  c.cache_->kraus = std::move(kraus);
  return c;
}

Channel Channel::from_choi(const Matrix& choi, std::size_t din, std::size_t dout) {
  if (static_cast<std::size_t>(choi.rows()) != din * dout || choi.rows() != choi.cols())
    throw DimensionMismatch("Channel::from_choi: Choi side must be din * dout");
  if (!all_finite(choi)) throw InvalidInput("Channel::from_choi: non-finite entry");
  const double scale = std::max(1.0, max_abs(choi));
  if (!is_hermitian(choi, tol::kHermitian * scale)) throw InvalidInput("Channel::from_choi: Choi is not Hermitian");
  const Matrix h = 0.5 * (choi + choi.adjoint());
  if (!is_psd(h, tol::kPsd * scale)) throw InvalidInput("Channel::from_choi: Choi is not PSD (map not CP)");
  Channel c(Kind::Kraus, din, dout);
  c.cache_->kraus = kraus_from_choi(h, din, dout);
  c.cache_->choi = h;
  return c;
}

double Channel::depolarizing_parameter() const {
  if (kind_ == Kind::Identity) return 1.0;
  if (kind_ == Kind::Depolarizing) return p_;
  throw InvalidInput("Channel::depolarizing_parameter: not a depolarizing channel");
}

const Matrix& Channel::unitary_matrix() const {
  if (!is_structured_unitary(*this)) throw InvalidInput("Channel::unitary_matrix: not a unitary channel");
  return u_;
}

const Matrix& Channel::choi() const {
  std::lock_guard lock(cache_->mu);
  if (!cache_->choi) {
    check_choi_size(din_, dout_);
    switch (kind_) {
      case Kind::Identity:
        cache_->choi = max_entangled_projector(din_);
        break;
      case Kind::Depolarizing: {
        const auto n = static_cast<Eigen::Index>(din_ * din_);
        cache_->choi = p_ * max_entangled_projector(din_) +
                       ((1.0 - p_) / static_cast<double>(din_)) * Matrix::Identity(n, n);
        break;
      }
      case Kind::Unitary:
        cache_->choi = choi_from_kraus({u_});
        break;
      case Kind::Kraus:
        cache_->choi = choi_from_kraus(*cache_->kraus);
        break;
    }
  }
  return *cache_->choi;
}

const std::vector<Matrix>& Channel::kraus() const {
  {
    std::lock_guard lock(cache_->mu);
    if (cache_->kraus) return *cache_->kraus;
    if (is_structured_unitary(*this)) {
      cache_->kraus = std::vector<Matrix>{u_};
      return *cache_->kraus;
    }
  }
  // Depolarizing: diagonalize the closed-form Choi matrix.
  std::vector<Matrix> k = kraus_from_choi(choi(), din_, dout_);
  std::lock_guard lock(cache_->mu);
  if (!cache_->kraus) cache_->kraus = std::move(k);
  return *cache_->kraus;
}

DensityMatrix Channel::choi_state() const { return DensityMatrix(choi() / static_cast<double>(din_)); }

Matrix Channel::apply(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != din_ || x.rows() != x.cols())
    throw DimensionMismatch("Channel::apply: operator dimension " + std::to_string(x.rows()) + " vs channel input " +
                            std::to_string(din_));
  switch (kind_) {
    case Kind::Identity:
      return x;
    case Kind::Unitary:
      return u_ * x * u_.adjoint();
    case Kind::Depolarizing:
      return p_ * x + ((1.0 - p_) * x.trace() / static_cast<double>(din_)) * identity_matrix(din_);
    case Kind::Kraus:
      break;
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dout_), static_cast<Eigen::Index>(dout_));
  for (const auto& k : kraus()) out.noalias() += k * x * k.adjoint();
  return out;
}

DensityMatrix Channel::apply(const DensityMatrix& rho) const {
  Matrix out = apply(rho.matrix());
  out = 0.5 * (out + out.adjoint());
  return DensityMatrix(out / out.trace().real());
}

Matrix Channel::adjoint_apply(const Matrix& e) const {
  if (static_cast<std::size_t>(e.rows()) != dout_ || e.rows() != e.cols())
    throw DimensionMismatch("Channel::adjoint_apply: operator dimension vs channel output");
  switch (kind_) {
    case Kind::Identity:
      return e;
    case Kind::Unitary:
      return u_.adjoint() * e * u_;
    case Kind::Depolarizing:
      return p_ * e + ((1.0 - p_) * e.trace() / static_cast<double>(din_)) * identity_matrix(din_);
    case Kind::Kraus:
      break;
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(din_), static_cast<Eigen::Index>(din_));
  for (const auto& k : kraus()) out.noalias() += k.adjoint() * e * k;
  return out;
}

bool Channel::is_cp(double tol) const {
  if (kind_ != Kind::Kraus) return true;
  return is_psd(choi(), tol * std::max(1.0, max_abs(choi())));
}

bool Channel::is_tp(double tol) const {
  if (kind_ != Kind::Kraus) return true;
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(din_), static_cast<Eigen::Index>(din_));
  for (const auto& k : kraus()) sum += k.adjoint() * k;
  return max_abs(sum - identity_matrix(din_)) <= tol;
}

// ---------------------------------------------------------------------------

Channel compose(const Channel& outer, const Channel& inner) {
  if (inner.dim_out() != outer.dim_in()) throw DimensionMismatch("compose: inner output vs outer input dimension");
  if (outer.kind() == Channel::Kind::Identity) return inner;
  if (inner.kind() == Channel::Kind::Identity) return outer;
  if (outer.kind() == Channel::Kind::Depolarizing && inner.kind() == Channel::Kind::Depolarizing)
    return Channel::depolarizing(inner.dim_in(), outer.depolarizing_parameter() * inner.depolarizing_parameter());
  if (outer.kind() == Channel::Kind::Unitary && inner.kind() == Channel::Kind::Unitary)
    return Channel::unitary(outer.unitary_matrix() * inner.unitary_matrix());
  std::vector<Matrix> prod;
  for (const auto& a : outer.kraus())
    for (const auto& b : inner.kraus()) {
      Matrix k = a * b;
      if (k.norm() > 1e-14) prod.push_back(std::move(k));
    }
  if (prod.empty()) prod.push_back(outer.kraus().front() * inner.kraus().front());
  return Channel::kraus_list(compress_kraus(std::move(prod)), false);
}

Channel tensor(const Channel& a, const Channel& b) {
  if (a.kind() == Channel::Kind::Identity && b.kind() == Channel::Kind::Identity)
    return Channel::identity(a.dim_in() * b.dim_in());
  if (is_structured_unitary(a) && is_structured_unitary(b))
    return Channel::unitary(kron(a.unitary_matrix(), b.unitary_matrix()));
  std::vector<Matrix> prod;
  for (const auto& ka : a.kraus())
    for (const auto& kb : b.kraus()) {
      Matrix k = kron(ka, kb);
      if (k.norm() > 1e-14) prod.push_back(std::move(k));
    }
  if (prod.empty()) prod.push_back(kron(a.kraus().front(), b.kraus().front()));
  return Channel::kraus_list(compress_kraus(std::move(prod)), false);
}

std::vector<Matrix> kraus_from_choi(const Matrix& choi, std::size_t din, std::size_t dout, double tol) {
  if (static_cast<std::size_t>(choi.rows()) != din * dout) throw DimensionMismatch("kraus_from_choi: Choi side");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (choi + choi.adjoint()));
  if (es.info() != Eigen::Success) throw InvalidInput("kraus_from_choi: eigendecomposition failed");
  std::vector<Matrix> kraus;
  for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i) {
    const double lam = es.eigenvalues()[i];
    if (lam <= tol) continue;
    const Vector v = std::sqrt(lam) * es.eigenvectors().col(i);
    Matrix k(static_cast<Eigen::Index>(dout), static_cast<Eigen::Index>(din));
    for (std::size_t a = 0; a < dout; ++a)
      for (std::size_t j = 0; j < din; ++j)
        k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = v[static_cast<Eigen::Index>(a * din + j)];
    kraus.push_back(std::move(k));
  }
  if (kraus.empty())
    kraus.push_back(Matrix::Zero(static_cast<Eigen::Index>(dout), static_cast<Eigen::Index>(din)));
  return kraus;
}

Matrix choi_from_kraus(const std::vector<Matrix>& kraus) {
  if (kraus.empty()) throw InvalidInput("choi_from_kraus: no Kraus operators");
  const auto dout = static_cast<std::size_t>(kraus.front().rows());
  const auto din = static_cast<std::size_t>(kraus.front().cols());
  check_choi_size(din, dout);
  const auto n = static_cast<Eigen::Index>(din * dout);
  Matrix choi = Matrix::Zero(n, n);
  for (const auto& k : kraus) {
    // Row-major flattening gives sum_j K|j> (x) |j>.
    Vector v(n);
    for (std::size_t a = 0; a < dout; ++a)
      for (std::size_t j = 0; j < din; ++j)
        v[static_cast<Eigen::Index>(a * din + j)] = k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
    choi.noalias() += v * v.adjoint();
  }
  return choi;
}

double channel_inner(const Channel& x, const Channel& y) {
  if (x.dim_in() != y.dim_in() || x.dim_out() != y.dim_out()) throw DimensionMismatch("channel_inner: shapes differ");
  if (is_depolarizing_family(x) && is_depolarizing_family(y)) {
    const double d = static_cast<double>(x.dim_in());
    return x.depolarizing_parameter() * y.depolarizing_parameter() * (d * d - 1.0) + 1.0;
  }
  return x.choi().conjugate().cwiseProduct(y.choi()).sum().real();
}

double avg_gate_fidelity(const Channel& x, const Channel& y) {
  check_square_same(x, y, "avg_gate_fidelity");
  const std::size_t d = x.dim_in();
  const double dd = static_cast<double>(d);
  const Matrix one = identity_matrix(d);
  const double unital_term = is_depolarizing_family(x) && is_depolarizing_family(y)
                                 ? dd
                                 : x.apply(one).conjugate().cwiseProduct(y.apply(one)).sum().real();
  return (channel_inner(x, y) + unital_term) / (dd * (dd + 1.0));
}

double entanglement_fidelity(const Channel& x, const Channel& y) {
  check_square_same(x, y, "entanglement_fidelity");
  const double d = static_cast<double>(x.dim_in());
  return channel_inner(x, y) / (d * d);
}

double effective_depol_parameter(const Channel& ch) {
  if (ch.dim_in() != ch.dim_out()) throw DimensionMismatch("effective_depol_parameter: channel must be square");
  if (is_depolarizing_family(ch)) return ch.depolarizing_parameter();
  if (ch.dim_in() < 2) throw InvalidInput("effective_depol_parameter: needs d >= 2");
  const double d = static_cast<double>(ch.dim_in());
  return (d * avg_gate_fidelity(Channel::identity(ch.dim_in()), ch) - 1.0) / (d - 1.0);
}

double unitarity(const Channel& ch) {
  if (ch.dim_in() != ch.dim_out()) throw DimensionMismatch("unitarity: channel must be square");
  if (ch.dim_in() < 2) throw InvalidInput("unitarity: needs d >= 2");
  if (is_structured_unitary(ch)) return 1.0;
  if (ch.kind() == Channel::Kind::Depolarizing) return ch.depolarizing_parameter() * ch.depolarizing_parameter();
  const std::size_t d = ch.dim_in();
  const double dd = static_cast<double>(d);
  // Choi(X o D_0) = X(1)/d (x) 1, and X'(1) = 0.
  const Matrix c = ch.choi() - kron(ch.apply(identity_matrix(d)) / dd, identity_matrix(d));
  return c.squaredNorm() / ((dd - 1.0) * (dd + 1.0));
}

Channel twirl(const Channel& ch, const UnitaryEnsemble& ensemble, TwirlMode mode, std::size_t n_samples,
              SeededRng* rng) {
  if (ch.dim_in() != ch.dim_out() || ch.dim_in() != ensemble.dim)
    throw DimensionMismatch("twirl: channel and ensemble dimensions differ");
  if (is_depolarizing_family(ch)) return ch;
  const std::size_t d = ensemble.dim;
  std::vector<Matrix> unitaries;
  std::vector<double> weights;
  const bool enumerable = ensemble.kind == UnitaryEnsemble::Kind::Explicit ||
                          (ensemble.kind == UnitaryEnsemble::Kind::Clifford && d <= 4);
  if (mode == TwirlMode::Exact) {
    if (ensemble.kind == UnitaryEnsemble::Kind::Haar) return Channel::depolarizing(d, effective_depol_parameter(ch));
    if (!enumerable) throw InvalidInput("twirl: exact twirl needs an enumerable ensemble");
    if (ensemble.kind == UnitaryEnsemble::Kind::Explicit) {
      unitaries = ensemble.unitaries;
      weights = ensemble.weights;
    } else {
      std::size_t n = d == 2 ? 1 : 2;
      unitaries = clifford_group_dense(n);
      weights.assign(unitaries.size(), 1.0 / static_cast<double>(unitaries.size()));
    }
  } else {
    if (rng == nullptr || n_samples == 0) throw InvalidInput("twirl: Monte-Carlo twirl needs an rng and samples");
    for (std::size_t s = 0; s < n_samples; ++s) unitaries.push_back(ensemble.sample(*rng));
    weights.assign(n_samples, 1.0 / static_cast<double>(n_samples));
  }
  // Choi(U^dagger o X o U) = (U^dagger (x) U^T) Choi(X) (U (x) conj(U)).
  std::vector<Matrix> conj;
  conj.reserve(unitaries.size());
  for (const auto& u : unitaries) conj.push_back(kron(Matrix(u.adjoint()), Matrix(u.transpose())));
  const Matrix c = kernels::weighted_conjugation_sum(conj, weights, ch.choi());
  return Channel::from_choi(c, d, d);
}

double diamond_distance_unitaries(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols() || u.rows() != u.cols())
    throw DimensionMismatch("diamond_distance_unitaries: shapes differ");
  if (!is_unitary(u, tol::kUnitary) || !is_unitary(v, tol::kUnitary))
    throw InvalidInput("diamond_distance_unitaries: inputs must be unitary");
  Eigen::ComplexEigenSolver<Matrix> es(u.adjoint() * v, false);
  if (es.info() != Eigen::Success) throw InvalidInput("diamond_distance_unitaries: eigensolver failed");
  std::vector<double> angles;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) angles.push_back(std::arg(es.eigenvalues()[i]));
  std::sort(angles.begin(), angles.end());
  double max_gap = 2.0 * std::numbers::pi - (angles.back() - angles.front());
  for (std::size_t i = 1; i < angles.size(); ++i) max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
  // The eigenvalues occupy an arc of width 2 pi - max_gap; the hull's nearest point to 0 is that arc's chord midpoint.
  const double spread = 2.0 * std::numbers::pi - max_gap;
  if (spread >= std::numbers::pi) return 1.0;
  return std::sin(spread / 2.0);
}

std::pair<double, double> diamond_trace_bounds(const Matrix& choi_diff, std::size_t din) {
  if (din == 0 || choi_diff.rows() % static_cast<Eigen::Index>(din) != 0)
    throw DimensionMismatch("diamond_trace_bounds: Choi side not a multiple of din");
  const double j1 = schatten_norm(choi_diff / static_cast<double>(din), Schatten::One);
  return {j1, static_cast<double>(din) * j1};
}

std::pair<double, double> diamond_trace_bounds(const Channel& a, const Channel& b) {
  if (a.dim_in() != b.dim_in() || a.dim_out() != b.dim_out())
    throw DimensionMismatch("diamond_trace_bounds: shapes differ");
  return diamond_trace_bounds(a.choi() - b.choi(), a.dim_in());
}

CompositeBound composite_param_bound(double p_xy, double p_y, double u_y) {
  if (!std::isfinite(p_xy) || !std::isfinite(p_y) || !std::isfinite(u_y))
    throw InvalidInput("composite_param_bound: non-finite input");
  if (u_y <= 0.0) throw InvalidInput("composite_param_bound: unitarity must be positive");
  auto root = [](double arg, const char* name) {
    if (arg < -1e-12) throw InvalidInput(std::string("composite_param_bound: negative ") + name);
    return std::sqrt(std::max(0.0, arg));
  };
  CompositeBound b;
  b.center = p_xy * p_y / u_y;
  b.halfwidth = root(1.0 - p_y * p_y / u_y, "1 - p_y^2/u_y") * root(1.0 - p_xy * p_xy / u_y, "1 - p_xy^2/u_y");
  return b;
}

NoiseModel NoiseModel::noiseless(std::size_t d) {
  return NoiseModel{Channel::identity(d), Channel::identity(d), Channel::identity(d), {}};
}

const Channel& NoiseModel::noise_for(const std::string& gate_id) const {
  const auto it = overrides.find(gate_id);
  return it == overrides.end() ? gate_noise : it->second;
}

void NoiseModel::validate(std::size_t d) const {
  auto check = [d](const Channel& c, const std::string& name) {
    if (c.dim_in() != d || c.dim_out() != d)
      throw DimensionMismatch("noise model: " + name + " acts on dimension " + std::to_string(c.dim_in()) +
                              ", device has " + std::to_string(d));
    if (!c.is_tp(tol::kTracePreserving)) throw InvalidInput("noise model: " + name + " is not trace preserving");
    if (!c.is_cp(tol::kPsd)) throw InvalidInput("noise model: " + name + " is not completely positive");
  };
  check(gate_noise, "gate_noise");
  check(prep_error, "prep_error");
  check(meas_error, "meas_error");
  for (const auto& [id, c] : overrides) check(c, "override '" + id + "'");
}

}  // namespace qcert
