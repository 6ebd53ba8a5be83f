#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qcert/linalg.hpp"
#include "qcert/randomness.hpp"

namespace qcert {

using Bits = std::vector<std::uint8_t>;

/// Signed n-qubit Pauli operator stored as i^k X^x Z^z (qubit 0 is the leftmost tensor factor).
/// With this convention Y = i X Z, so "+Y" has x = z = 1 and k = 1.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::size_t n);
  PauliString(Bits x, Bits z, int phase_exponent);

  /// Parses "+XIZY" style text: a sign ('+', '-', "+i", "-i"; '+' may be omitted) followed by I/X/Y/Z.
  static PauliString parse(std::string_view text);
  static PauliString single(std::size_t n, std::size_t qubit, char letter);

  std::string to_string() const;

  std::size_t num_qubits() const { return x_.size(); }
  bool x(std::size_t q) const { return x_[q] != 0; }
  bool z(std::size_t q) const { return z_[q] != 0; }
  const Bits& x_bits() const { return x_; }
  const Bits& z_bits() const { return z_; }
  int phase_exponent() const { return k_; }

  /// Coefficient c in front of the sigma string: this = c * sigma_{s1} (x) ... (x) sigma_{sn}; c in {1, -1, i, -i}.
  cplx coefficient() const;
  bool is_hermitian() const;
  bool is_identity() const;  // identity up to phase
  std::size_t weight() const;

  bool commutes_with(const PauliString& other) const;
  PauliString operator*(const PauliString& rhs) const;
  PauliString negated() const;
  /// Same operator with the sigma-string coefficient reset to +1.
  PauliString unsigned_copy() const;
  bool same_support(const PauliString& other) const { return x_ == other.x_ && z_ == other.z_; }
  bool operator==(const PauliString& other) const = default;

  /// Symplectic vector (x bits followed by z bits).
  Bits symplectic() const;
  /// Hermitian Pauli with sigma coefficient (-1)^sign for the given symplectic vector.
  static PauliString from_symplectic(const Bits& xz, bool negative);

  /// psi -> P psi on a 2^n state vector in O(2^n).
  Vector apply(const Vector& psi) const;

 private:
  Bits x_;
  Bits z_;
  int k_ = 0;
};

Matrix pauli_to_dense(const PauliString& p);
/// Symplectic form <a, b> = a_x . b_z + a_z . b_x (mod 2).
int symplectic_product(const Bits& a, const Bits& b);

/// Clifford unitary in tableau form: the Hermitian Pauli images of every X_q and Z_q.
class CliffordElement {
 public:
  CliffordElement() = default;
  /// Validates that the images are Hermitian and satisfy the canonical commutation relations.
  CliffordElement(std::vector<PauliString> x_images, std::vector<PauliString> z_images);

  static CliffordElement identity(std::size_t n);
  static CliffordElement hadamard(std::size_t n, std::size_t q);
  static CliffordElement phase(std::size_t n, std::size_t q);
  static CliffordElement cnot(std::size_t n, std::size_t control, std::size_t target);

  std::size_t num_qubits() const { return x_images_.size(); }
  const std::vector<PauliString>& x_images() const { return x_images_; }
  const std::vector<PauliString>& z_images() const { return z_images_; }

  /// C P C^dagger.
  PauliString conjugate(const PauliString& p) const;
  /// The Clifford that applies *this first and then `next`.
  CliffordElement then(const CliffordElement& next) const;
  CliffordElement inverse() const;
  /// 2n x 2n symplectic matrix over GF(2), column j = image of the j-th basis vector.
  std::vector<Bits> symplectic_matrix() const;

  std::string key() const;
  bool operator==(const CliffordElement& other) const;

 private:
  std::vector<PauliString> x_images_;
  std::vector<PauliString> z_images_;
};

/// Dense 2^n x 2^n unitary, global phase fixed so the first nonzero entry of column 0 is positive real.
Matrix clifford_to_dense(const CliffordElement& c);

/// Uniform Clifford element (modulo global phase). n <= 2 by enumeration; otherwise a uniformly
/// random symplectic tableau built pair by pair with uniform sign bits.
CliffordElement sample_clifford(SeededRng& rng, std::size_t n);
/// Uniform draw of a symplectic tableau through sequential symplectic Gram-Schmidt; exposed for testing n <= 2.
CliffordElement sample_clifford_symplectic(SeededRng& rng, std::size_t n);
/// The full Clifford group modulo phases for n in {1, 2} (24 and 11520 elements).
const std::vector<CliffordElement>& clifford_group(std::size_t n);
const std::vector<Matrix>& clifford_group_dense(std::size_t n);

/// Stabilizer group given by n independent, commuting, Hermitian generators.
class StabilizerGroup {
 public:
  explicit StabilizerGroup(std::vector<PauliString> generators);

  /// One generator per line in PauliString text format; blank lines and '#' comments ignored.
  static StabilizerGroup parse(std::string_view text);
  static StabilizerGroup computational_zero(std::size_t n);

  std::size_t num_qubits() const { return generators_.front().num_qubits(); }
  const std::vector<PauliString>& generators() const { return generators_; }
  std::string to_string() const;

  /// All 2^n signed group elements; element i is the ordered product of generators selected by i's bits.
  std::vector<PauliString> elements() const;
  /// Stabilizer group of C|psi_S>.
  StabilizerGroup conjugated_by(const CliffordElement& c) const;

  /// Rows (z, parity) such that a basis string b lies in the support iff z.b = parity for all rows;
  /// the number of rows is n - rank of the X part.
  std::vector<std::pair<Bits, int>> z_constraints() const;

  Vector state_vector() const;

 private:
  std::vector<PauliString> generators_;
};

/// Tr[P rho_S]: +1 or -1 if +P or -P lies in the group, 0 otherwise. P must be Hermitian.
int pauli_expectation_stabilizer(const StabilizerGroup& s, const PauliString& p);
/// rho_S = 2^{-n} sum of group elements, built from the state vector; n <= 12.
DensityMatrix stabilizer_state_dense(const StabilizerGroup& s);
/// |<b| C |psi_S>|^2 via tableau algebra; b[q] is the outcome of qubit q.
double stabilizer_overlap(const StabilizerGroup& s, const CliffordElement& c, const Bits& b);
/// Index of a basis string with qubit 0 as the most significant bit.
std::size_t bits_to_index(const Bits& b);
Bits index_to_bits(std::size_t index, std::size_t n);

}  // namespace qcert
