#include "qcert/randomness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/QR>

#include "qcert/kernels.hpp"
#include "qcert/stabilizer.hpp"
#include "qcert/tolerances.hpp"

namespace qcert {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SeededRng::normal() { return normal_(engine_); }

std::uint64_t SeededRng::index(std::uint64_t n) {
  if (n == 0) throw InvalidInput("SeededRng::index: empty range");
  if ((n & (n - 1)) == 0) return engine_() & (n - 1);
  // Rejection sampling against the largest multiple of n.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % n;
}

cplx SeededRng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return {re * M_SQRT1_2, im * M_SQRT1_2};
}

SeededRng SeededRng::split(std::uint64_t child) const { return SeededRng(seed_, mix_seed(stream_, child)); }

// ---------------------------------------------------------------------------

Matrix sample_haar_unitary(SeededRng& rng, std::size_t d) {
  if (d == 0) throw InvalidInput("sample_haar_unitary: dimension must be positive");
  const auto n = static_cast<Eigen::Index>(d);
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  // Fix the phase ambiguity of QR so that R has a positive real diagonal.
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx rjj = r(j, j);
    const double a = std::abs(rjj);
    q.col(j) *= (a > 0 ? rjj / a : cplx(1.0));
  }
  return q;
}

PureState sample_haar_state(SeededRng& rng, std::size_t d) {
  if (d == 0) throw InvalidInput("sample_haar_state: dimension must be positive");
  // First column of a Haar unitary: a normalized complex Gaussian vector.
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.complex_normal();
  v /= v.norm();
  return PureState(std::move(v));
}

// ---------------------------------------------------------------------------

namespace {

std::size_t checked_power(std::size_t d, std::size_t k) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < k; ++i) {
    n *= d;
    if (n * n > kTensorPowerEntryBudget) {
      throw InvalidInput("tensor power of dimension " + std::to_string(d) + "^" + std::to_string(k) +
                         " exceeds the dense entry budget");
    }
  }
  return n;
}

}  // namespace

Matrix permutation_operator(std::size_t d, const std::vector<std::size_t>& perm) {
  const std::size_t k = perm.size();
  const std::size_t n = checked_power(d, k);
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::size_t> digits(k), moved(k);
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx;
    for (std::size_t f = k; f-- > 0;) {
      digits[f] = rem % d;
      rem /= d;
    }
    for (std::size_t f = 0; f < k; ++f) moved[perm[f]] = digits[f];
    std::size_t out = 0;
    for (std::size_t f = 0; f < k; ++f) out = out * d + moved[f];
    p(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(idx)) = 1.0;
  }
  return p;
}

Matrix sym_projector(std::size_t d, std::size_t k) {
  if (d == 0 || k == 0) throw InvalidInput("sym_projector: d and k must be positive");
  const std::size_t n = checked_power(d, k);
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  double count = 0.0;
  do {
    acc += permutation_operator(d, perm);
    count += 1.0;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc / count;
}

Matrix antisym_projector(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d * d);
  return 0.5 * (Matrix::Identity(n, n) - swap_operator(d));
}

double sym_subspace_dim(std::size_t d, std::size_t k) {
  // binom(k + d - 1, k) evaluated as a running product.
  double v = 1.0;
  for (std::size_t i = 1; i <= k; ++i) v = v * static_cast<double>(d - 1 + i) / static_cast<double>(i);
  return std::round(v);
}

Matrix tensor_power(const Matrix& a, std::size_t k) {
  if (k == 0) throw InvalidInput("tensor_power: k must be positive");
  checked_power(static_cast<std::size_t>(a.rows()), k);
  Matrix out = a;
  for (std::size_t i = 1; i < k; ++i) out = kron(out, a);
  return out;
}

// ---------------------------------------------------------------------------

UnitaryEnsemble UnitaryEnsemble::haar(std::size_t dim) {
  UnitaryEnsemble e;
  e.kind = Kind::Haar;
  e.dim = dim;
  return e;
}

UnitaryEnsemble UnitaryEnsemble::clifford(std::size_t n_qubits) {
  if (n_qubits == 0) throw InvalidInput("UnitaryEnsemble::clifford: need at least one qubit");
  UnitaryEnsemble e;
  e.kind = Kind::Clifford;
  e.dim = std::size_t{1} << n_qubits;
  return e;
}

UnitaryEnsemble UnitaryEnsemble::explicit_set(std::vector<Matrix> unitaries, std::vector<double> weights) {
  if (unitaries.empty()) throw InvalidInput("UnitaryEnsemble: empty explicit set");
  if (weights.empty()) weights.assign(unitaries.size(), 1.0 / static_cast<double>(unitaries.size()));
  if (weights.size() != unitaries.size()) throw InvalidInput("UnitaryEnsemble: weight count differs from set size");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw InvalidInput("UnitaryEnsemble: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("UnitaryEnsemble: weights do not sum to 1");
  UnitaryEnsemble e;
  e.kind = Kind::Explicit;
  e.dim = static_cast<std::size_t>(unitaries.front().rows());
  for (const auto& u : unitaries) {
    if (static_cast<std::size_t>(u.rows()) != e.dim || !is_unitary(u, tol::kUnitary)) {
      throw InvalidInput("UnitaryEnsemble: explicit element is not a unitary of the common dimension");
    }
  }
  e.unitaries = std::move(unitaries);
  e.weights = std::move(weights);
  return e;
}

namespace {

std::size_t qubits_of(std::size_t dim) {
  std::size_t n = 0;
  while ((std::size_t{1} << n) < dim) ++n;
  return n;
}

}  // namespace

Matrix UnitaryEnsemble::sample(SeededRng& rng) const {
  switch (kind) {
    case Kind::Haar:
      return sample_haar_unitary(rng, dim);
    case Kind::Clifford:
      return clifford_to_dense(sample_clifford(rng, qubits_of(dim)));
    case Kind::Explicit: {
      const double u = rng.uniform();
      double acc = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return unitaries[i];
      }
      return unitaries.back();
    }
  }
  return {};
}

Matrix moment_operator(const UnitaryEnsemble& ensemble, std::size_t k, const Matrix& a, std::size_t n_samples,
                       SeededRng& rng) {
  const std::size_t n = checked_power(ensemble.dim, k);
  if (static_cast<std::size_t>(a.rows()) != n || a.rows() != a.cols()) {
    throw DimensionMismatch("moment_operator: operator must act on (C^d)^{(x)k}");
  }
  std::vector<Matrix> powers;
  std::vector<double> weights;
  if (ensemble.kind == UnitaryEnsemble::Kind::Explicit) {
    for (const auto& u : ensemble.unitaries) powers.push_back(tensor_power(u, k));
    weights = ensemble.weights;
  } else if (ensemble.kind == UnitaryEnsemble::Kind::Clifford && ensemble.dim <= 4) {
    // Small Clifford groups are enumerated, so their moments are exact.
    const auto& group = clifford_group_dense(qubits_of(ensemble.dim));
    for (const auto& u : group) powers.push_back(tensor_power(u, k));
    weights.assign(group.size(), 1.0 / static_cast<double>(group.size()));
  } else {
    if (n_samples == 0) throw InvalidInput("moment_operator: Monte-Carlo estimate needs samples");
    for (std::size_t s = 0; s < n_samples; ++s) powers.push_back(tensor_power(ensemble.sample(rng), k));
    weights.assign(n_samples, 1.0 / static_cast<double>(n_samples));
  }
  return kernels::weighted_conjugation_sum(powers, weights, a);
}

Matrix haar_moment(const Matrix& a, std::size_t d, std::size_t k) {
  const std::size_t n = checked_power(d, k);
  if (static_cast<std::size_t>(a.rows()) != n || a.rows() != a.cols())
    throw DimensionMismatch("haar_moment: operator must act on (C^d)^{(x)k}");
  std::vector<Matrix> perms;
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    perms.push_back(permutation_operator(d, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  const auto m = static_cast<Eigen::Index>(perms.size());
  // The twirl is the Hilbert-Schmidt projection onto span{P_sigma}; the Gram matrix is singular when k > d.
  Matrix gram(m, m);
  Vector rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    rhs[i] = hs_inner(perms[static_cast<std::size_t>(i)], a);
    for (Eigen::Index j = 0; j < m; ++j) gram(i, j) = hs_inner(perms[static_cast<std::size_t>(i)], perms[static_cast<std::size_t>(j)]);
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gram);
  cod.setThreshold(1e-10);
  const Vector c = cod.solve(rhs);
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < m; ++i) out += c[i] * perms[static_cast<std::size_t>(i)];
  return out;
}

Matrix haar_second_moment(const Matrix& a, std::size_t d) {
  if (d < 2) throw InvalidInput("haar_second_moment: needs d >= 2");
  if (static_cast<std::size_t>(a.rows()) != d * d) throw DimensionMismatch("haar_second_moment: A must act on C^d (x) C^d");
  const auto n = static_cast<Eigen::Index>(d * d);
  const Matrix f = swap_operator(d);
  const Matrix p_sym = 0.5 * (Matrix::Identity(n, n) + f);
  const Matrix p_alt = 0.5 * (Matrix::Identity(n, n) - f);
  const double dd = static_cast<double>(d);
  const cplx c_sym = 2.0 / (dd * (dd + 1.0)) * (a * p_sym).trace();
  const cplx c_alt = 2.0 / (dd * (dd - 1.0)) * (a * p_alt).trace();
  return c_sym * p_sym + c_alt * p_alt;
}

DesignReport verify_design(const UnitaryEnsemble& ensemble, std::size_t k, double tol) {
  if (ensemble.kind == UnitaryEnsemble::Kind::Haar) throw InvalidInput("verify_design: Haar ensemble is a design by definition");
  const std::size_t d = ensemble.dim;
  const std::size_t n = checked_power(d, k);
  SeededRng unused(0);
  DesignReport report;
  report.k = k;

  auto check = [&](const Matrix& probe, const Matrix& target) {
    const Matrix got = moment_operator(ensemble, k, probe, 0, unused);
    report.max_deviation = std::max(report.max_deviation, max_abs(got - target));
    ++report.probes;
  };

  if (k <= 2) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Matrix e = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
        const auto nn = static_cast<Eigen::Index>(n);
        const Matrix target =
            k == 1 ? Matrix(e.trace() / static_cast<double>(d) * Matrix::Identity(nn, nn)) : haar_second_moment(e, d);
        check(e, target);
      }
  } else {
    // Matrix units while they are cheap, product probes B^{(x)k} beyond that.
    const auto nn = static_cast<Eigen::Index>(n);
    if (n <= 64) {
      for (Eigen::Index i = 0; i < nn; ++i)
        for (Eigen::Index j = 0; j < nn; ++j) {
          Matrix e = Matrix::Zero(nn, nn);
          e(i, j) = 1.0;
          check(e, haar_moment(e, d, k));
        }
    } else {
      const auto dd = static_cast<Eigen::Index>(d);
      SeededRng probe_rng(0x5eed, k);
      const auto span_dim = static_cast<std::size_t>(sym_subspace_dim(d * d, k));
      for (std::size_t r = 0; r < span_dim + 8; ++r) {
        Matrix b(dd, dd);
        for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = probe_rng.complex_normal();
        const Matrix probe = tensor_power(b / b.norm(), k);
        check(probe, haar_moment(probe, d, k));
      }
    }
  }
  report.is_design = report.max_deviation <= tol;
  return report;
}

}  // namespace qcert
