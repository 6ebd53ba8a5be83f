#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "qcert/stabilizer.hpp"

using namespace qcert;
using qcert::testing::dist;

namespace {

// Canonical key of a dense unitary modulo global phase.
std::string phase_free_key(const Matrix& u) {
  Eigen::Index r = 0, c = 0;
  u.cwiseAbs().maxCoeff(&r, &c);
  const cplx ph = u(r, c) / std::abs(u(r, c));
  std::string key;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const cplx v = u.data()[i] / ph;
    key += std::to_string(std::lround(v.real() * 1e6)) + "," + std::to_string(std::lround(v.imag() * 1e6)) + ";";
  }
  return key;
}

}  // namespace

TEST_CASE("pauli strings") {
  Matrix z(2, 2);
  z << 1, 0, 0, -1;
  CHECK(dist(pauli_to_dense(PauliString::parse("Z")), z) == 0.0);
  CHECK(dist(pauli_to_dense(PauliString::parse("II")), Matrix::Identity(4, 4)) == 0.0);

  const char* letters = "IXYZ";
  for (int j = 0; j < 16; ++j)
    for (int k = 0; k < 16; ++k) {
      const Matrix wj = pauli_to_dense(PauliString::parse(std::string{letters[j / 4], letters[j % 4]}));
      const Matrix wk = pauli_to_dense(PauliString::parse(std::string{letters[k / 4], letters[k % 4]}));
      CHECK(std::abs((wj.adjoint() * wk).trace() / 4.0 - cplx(j == k ? 1.0 : 0.0)) < 1e-15);
    }

  const auto xy = PauliString::parse("XY"), zz = PauliString::parse("ZZ");
  CHECK(xy.commutes_with(zz));
  CHECK(dist(pauli_to_dense(xy * zz), pauli_to_dense(xy) * pauli_to_dense(zz)) < 1e-15);
  CHECK_THROWS(PauliString::parse("XQ"));

  SeededRng rng(1);
  const Vector psi = qcert::testing::random_matrix(rng, 8, 1).col(0);
  const auto p = PauliString::parse("-YXZ");
  CHECK((p.apply(psi) - pauli_to_dense(p) * psi).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("stabilizer states") {
  CHECK(dist(stabilizer_state_dense(StabilizerGroup::parse("Z")).matrix(), qcert::testing::ket0_projector(2)) < 1e-15);
  Matrix plus = Matrix::Constant(2, 2, 0.5);
  CHECK(dist(stabilizer_state_dense(StabilizerGroup::parse("X")).matrix(), plus) < 1e-15);

  Vector phi = Vector::Zero(4);
  phi[0] = phi[3] = 1.0 / std::sqrt(2.0);
  CHECK(dist(stabilizer_state_dense(StabilizerGroup::parse("XX\nZZ")).matrix(), phi * phi.adjoint()) < 1e-15);

  CHECK_THROWS(StabilizerGroup::parse("XI\nZI"));  // anticommuting
  CHECK_THROWS(StabilizerGroup::parse("ZI\nZI"));  // dependent
  CHECK_THROWS(StabilizerGroup::parse("ZZ\n-ZZ")); // contains -1
  CHECK(StabilizerGroup::parse("XX\nZZ").elements().size() == 4);
}

TEST_CASE("pauli expectations on stabilizer states") {
  const auto z = StabilizerGroup::parse("Z");
  CHECK(pauli_expectation_stabilizer(z, PauliString::parse("I")) == 1);
  CHECK(pauli_expectation_stabilizer(z, PauliString::parse("X")) == 0);
  CHECK(pauli_expectation_stabilizer(z, PauliString::parse("Z")) == 1);
  CHECK(pauli_expectation_stabilizer(z, PauliString::parse("-Z")) == -1);

  const auto ghz = StabilizerGroup::parse("XXX\nZZI\nIZZ");
  const Matrix rho = stabilizer_state_dense(ghz).matrix();
  const char* letters = "IXYZ";
  for (int i = 0; i < 64; ++i) {
    const auto p = PauliString::parse(std::string{letters[i / 16], letters[(i / 4) % 4], letters[i % 4]});
    CHECK(std::abs(hs_inner(pauli_to_dense(p), rho).real() - pauli_expectation_stabilizer(ghz, p)) < 1e-12);
  }
}

TEST_CASE("clifford sampling covers the single-qubit group uniformly") {
  SeededRng rng(7);
  std::map<std::string, int> hist;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++hist[phase_free_key(clifford_to_dense(sample_clifford(rng, 1)))];
  REQUIRE(hist.size() == 24);
  double chi2 = 0.0;
  const double expected = n / 24.0;
  for (const auto& [k, c] : hist) chi2 += (c - expected) * (c - expected) / expected;
  // 23 degrees of freedom: P[chi2 > 49.73] = 0.001.
  CHECK(chi2 < 49.73);
}

TEST_CASE("symplectic sampler also covers the single-qubit group") {
  SeededRng rng(8);
  std::map<std::string, int> hist;
  for (int i = 0; i < 20000; ++i) ++hist[phase_free_key(clifford_to_dense(sample_clifford_symplectic(rng, 1)))];
  CHECK(hist.size() == 24);
  CHECK(clifford_group(2).size() == 11520);
}

TEST_CASE("tableau conjugation matches dense conjugation") {
  SeededRng rng(9);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int t = 0; t < 20; ++t) {
      const auto c = sample_clifford(rng, n);
      const Matrix u = clifford_to_dense(c);
      CHECK(is_unitary(u, 1e-12));
      for (std::size_t q = 0; q < n; ++q) {
        for (char l : {'X', 'Z', 'Y'}) {
          const auto p = PauliString::single(n, q, l);
          CHECK(dist(u * pauli_to_dense(p) * u.adjoint(), pauli_to_dense(c.conjugate(p))) < 1e-12);
        }
      }
      const auto inv = c.inverse();
      CHECK(c.then(inv) == CliffordElement::identity(n));
      // equal up to a global phase
      CHECK(std::abs(std::abs((clifford_to_dense(inv) * u).trace()) / static_cast<double>(u.rows()) - 1.0) < 1e-12);
      const auto s = StabilizerGroup::computational_zero(n);
      const Vector v = u.col(0);
      CHECK(dist(stabilizer_state_dense(s.conjugated_by(c)).matrix(), v * v.adjoint()) < 1e-12);
    }
  }
}

TEST_CASE("then composes in application order") {
  const auto h = CliffordElement::hadamard(2, 0), cx = CliffordElement::cnot(2, 0, 1);
  const Matrix expected = clifford_to_dense(cx) * clifford_to_dense(h);
  const Matrix got = clifford_to_dense(h.then(cx));
  const cplx ph = (got.adjoint() * expected).trace() / 4.0;
  CHECK(std::abs(std::abs(ph) - 1.0) < 1e-12);
}

TEST_CASE("stabilizer overlaps") {
  const auto z = StabilizerGroup::parse("Z");
  CHECK(stabilizer_overlap(z, CliffordElement::identity(1), {0}) == doctest::Approx(1.0));
  CHECK(stabilizer_overlap(z, CliffordElement::hadamard(1, 0), {0}) == doctest::Approx(0.5));

  SeededRng rng(10);
  const auto bell = StabilizerGroup::parse("XX\nZZ");
  const Vector psi = bell.state_vector();
  for (int t = 0; t < 50; ++t) {
    const auto c = sample_clifford(rng, 2);
    const Vector out = clifford_to_dense(c) * psi;
    double total = 0.0;
    for (std::size_t b = 0; b < 4; ++b) {
      const double o = stabilizer_overlap(bell, c, index_to_bits(b, 2));
      CHECK(o == doctest::Approx(std::norm(out[static_cast<Eigen::Index>(b)])).epsilon(1e-12));
      total += o;
    }
    CHECK(total == doctest::Approx(1.0));
  }
}
