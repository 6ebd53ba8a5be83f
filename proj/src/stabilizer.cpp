#include "qcert/stabilizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <sstream>
#include <unordered_set>

namespace qcert {

namespace {

constexpr std::size_t kMaxDenseQubits = 16;

int mod4(int k) { return ((k % 4) + 4) % 4; }

std::size_t popcount_and(const Bits& a, const Bits& b) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += static_cast<std::size_t>(a[i] & b[i]);
  return c;
}

std::size_t mask_of(const Bits& bits) {
  std::size_t m = 0;
  for (auto bit : bits) m = (m << 1) | static_cast<std::size_t>(bit & 1);
  return m;
}

cplx i_power(int k) {
  switch (mod4(k)) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

// Solves A c = rhs over GF(2); A is given row-major with `cols` unknowns. Free variables are set to 0.
std::optional<Bits> gf2_solve(std::vector<Bits> a, Bits rhs, std::size_t cols) {
  const std::size_t rows = a.size();
  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && !a[p][c]) ++p;
    if (p == rows) continue;
    std::swap(a[p], a[r]);
    std::swap(rhs[p], rhs[r]);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i != r && a[i][c]) {
        for (std::size_t j = 0; j < cols; ++j) a[i][j] ^= a[r][j];
        rhs[i] ^= rhs[r];
      }
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (std::size_t i = r; i < rows; ++i)
    if (rhs[i]) return std::nullopt;
  Bits sol(cols, 0);
  for (std::size_t i = 0; i < r; ++i) sol[pivot_col[i]] = rhs[i];
  return sol;
}

std::size_t gf2_rank(std::vector<Bits> rows) {
  if (rows.empty()) return 0;
  const std::size_t cols = rows.front().size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows.size(); ++c) {
    std::size_t p = r;
    while (p < rows.size() && !rows[p][c]) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[p], rows[r]);
    for (std::size_t i = r + 1; i < rows.size(); ++i)
      if (rows[i][c])
        for (std::size_t j = 0; j < cols; ++j) rows[i][j] ^= rows[r][j];
    ++r;
  }
  return r;
}

void check_same_size(const PauliString& a, const PauliString& b, const char* where) {
  if (a.num_qubits() != b.num_qubits()) throw DimensionMismatch(std::string(where) + ": qubit count mismatch");
}

// Coefficients c with P = product of generators selected by c, up to sign; nullopt if P is outside the group.
std::optional<Bits> decompose(const std::vector<PauliString>& gens, const PauliString& p) {
  const Bits target = p.symplectic();
  std::vector<Bits> a(target.size(), Bits(gens.size(), 0));
  for (std::size_t j = 0; j < gens.size(); ++j) {
    const Bits col = gens[j].symplectic();
    for (std::size_t r = 0; r < col.size(); ++r) a[r][j] = col[r];
  }
  return gf2_solve(std::move(a), target, gens.size());
}

PauliString product_of(const std::vector<PauliString>& gens, const Bits& select) {
  PauliString acc(gens.front().num_qubits());
  for (std::size_t j = 0; j < gens.size(); ++j)
    if (select[j]) acc = acc * gens[j];
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// PauliString

PauliString::PauliString(std::size_t n) : x_(n, 0), z_(n, 0), k_(0) {}

PauliString::PauliString(Bits x, Bits z, int phase_exponent) : x_(std::move(x)), z_(std::move(z)), k_(mod4(phase_exponent)) {
  if (x_.size() != z_.size()) throw DimensionMismatch("PauliString: x and z lengths differ");
  for (std::size_t q = 0; q < x_.size(); ++q) {
    if (x_[q] > 1 || z_[q] > 1) throw InvalidInput("PauliString: bits must be 0 or 1");
  }
}

PauliString PauliString::parse(std::string_view text) {
  std::size_t pos = 0;
  int k = 0;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    if (text[pos] == '-') k = 2;
    ++pos;
  }
  if (pos < text.size() && text[pos] == 'i') {
    k += 1;
    ++pos;
  }
  if (pos == text.size()) throw InvalidInput("PauliString: no qubit letters in '" + std::string(text) + "'");
  Bits x, z;
  for (; pos < text.size(); ++pos) {
    switch (text[pos]) {
      case 'I': x.push_back(0); z.push_back(0); break;
      case 'X': x.push_back(1); z.push_back(0); break;
      case 'Z': x.push_back(0); z.push_back(1); break;
      case 'Y': x.push_back(1); z.push_back(1); k += 1; break;
      default:
        throw InvalidInput("PauliString: unexpected character '" + std::string(1, text[pos]) + "' in '" +
                           std::string(text) + "'");
    }
  }
  return PauliString(std::move(x), std::move(z), k);
}

PauliString PauliString::single(std::size_t n, std::size_t qubit, char letter) {
  if (qubit >= n) throw InvalidInput("PauliString::single: qubit out of range");
  std::string s(n, 'I');
  s[qubit] = letter;
  return parse(s);
}

std::string PauliString::to_string() const {
  static const char* const kPrefix[] = {"+", "+i", "-", "-i"};
  std::string out = kPrefix[mod4(k_ - static_cast<int>(popcount_and(x_, z_)))];
  for (std::size_t q = 0; q < x_.size(); ++q) {
    out += x_[q] ? (z_[q] ? 'Y' : 'X') : (z_[q] ? 'Z' : 'I');
  }
  return out;
}

cplx PauliString::coefficient() const { return i_power(k_ - static_cast<int>(popcount_and(x_, z_))); }

bool PauliString::is_hermitian() const { return mod4(k_ - static_cast<int>(popcount_and(x_, z_))) % 2 == 0; }

bool PauliString::is_identity() const {
  for (std::size_t q = 0; q < x_.size(); ++q)
    if (x_[q] || z_[q]) return false;
  return true;
}

std::size_t PauliString::weight() const {
  std::size_t w = 0;
  for (std::size_t q = 0; q < x_.size(); ++q) w += (x_[q] | z_[q]);
  return w;
}

bool PauliString::commutes_with(const PauliString& other) const {
  check_same_size(*this, other, "commutes_with");
  return ((popcount_and(x_, other.z_) + popcount_and(z_, other.x_)) & 1) == 0;
}

PauliString PauliString::operator*(const PauliString& rhs) const {
  check_same_size(*this, rhs, "PauliString product");
  Bits x(x_.size()), z(z_.size());
  for (std::size_t q = 0; q < x_.size(); ++q) {
    x[q] = x_[q] ^ rhs.x_[q];
    z[q] = z_[q] ^ rhs.z_[q];
  }
  return PauliString(std::move(x), std::move(z), k_ + rhs.k_ + 2 * static_cast<int>(popcount_and(z_, rhs.x_)));
}

PauliString PauliString::negated() const { return PauliString(x_, z_, k_ + 2); }

PauliString PauliString::unsigned_copy() const { return PauliString(x_, z_, static_cast<int>(popcount_and(x_, z_))); }

Bits PauliString::symplectic() const {
  Bits v(x_);
  v.insert(v.end(), z_.begin(), z_.end());
  return v;
}

PauliString PauliString::from_symplectic(const Bits& xz, bool negative) {
  if (xz.size() % 2 != 0) throw DimensionMismatch("from_symplectic: odd length");
  const std::size_t n = xz.size() / 2;
  Bits x(xz.begin(), xz.begin() + static_cast<std::ptrdiff_t>(n));
  Bits z(xz.begin() + static_cast<std::ptrdiff_t>(n), xz.end());
  const int k = static_cast<int>(popcount_and(x, z)) + (negative ? 2 : 0);
  return PauliString(std::move(x), std::move(z), k);
}

Vector PauliString::apply(const Vector& psi) const {
  const std::size_t n = num_qubits();
  if (static_cast<std::size_t>(psi.size()) != (std::size_t{1} << n)) throw DimensionMismatch("PauliString::apply");
  const std::size_t xm = mask_of(x_);
  const std::size_t zm = mask_of(z_);
  const cplx c = i_power(k_);
  Vector out(psi.size());
  for (std::size_t b = 0; b < static_cast<std::size_t>(psi.size()); ++b) {
    const double s = (std::popcount(zm & b) & 1) ? -1.0 : 1.0;
    out[static_cast<Eigen::Index>(b ^ xm)] = c * s * psi[static_cast<Eigen::Index>(b)];
  }
  return out;
}

Matrix pauli_to_dense(const PauliString& p) {
  const std::size_t n = p.num_qubits();
  if (n > 12) throw InvalidInput("pauli_to_dense: too many qubits for a dense matrix");
  const std::size_t d = std::size_t{1} << n;
  const std::size_t xm = mask_of(p.x_bits());
  const std::size_t zm = mask_of(p.z_bits());
  const cplx c = i_power(p.phase_exponent());
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t b = 0; b < d; ++b) {
    const double s = (std::popcount(zm & b) & 1) ? -1.0 : 1.0;
    m(static_cast<Eigen::Index>(b ^ xm), static_cast<Eigen::Index>(b)) = c * s;
  }
  return m;
}

int symplectic_product(const Bits& a, const Bits& b) {
  if (a.size() != b.size() || a.size() % 2 != 0) throw DimensionMismatch("symplectic_product");
  const std::size_t n = a.size() / 2;
  int s = 0;
  for (std::size_t q = 0; q < n; ++q) s ^= (a[q] & b[n + q]) ^ (a[n + q] & b[q]);
  return s;
}

// ---------------------------------------------------------------------------
// CliffordElement

CliffordElement::CliffordElement(std::vector<PauliString> x_images, std::vector<PauliString> z_images)
    : x_images_(std::move(x_images)), z_images_(std::move(z_images)) {
  const std::size_t n = x_images_.size();
  if (n == 0 || z_images_.size() != n) throw DimensionMismatch("CliffordElement: need n X and n Z images");
  for (std::size_t j = 0; j < n; ++j) {
    if (x_images_[j].num_qubits() != n || z_images_[j].num_qubits() != n)
      throw DimensionMismatch("CliffordElement: image qubit count");
    if (!x_images_[j].is_hermitian() || !z_images_[j].is_hermitian())
      throw InvalidInput("CliffordElement: images must be Hermitian");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool ok = x_images_[i].commutes_with(x_images_[j]) && z_images_[i].commutes_with(z_images_[j]) &&
                      (x_images_[i].commutes_with(z_images_[j]) == (i != j));
      if (!ok) throw InvalidInput("CliffordElement: images violate the Pauli commutation relations");
    }
  }
}

CliffordElement CliffordElement::identity(std::size_t n) {
  std::vector<PauliString> xs, zs;
  for (std::size_t q = 0; q < n; ++q) {
    xs.push_back(PauliString::single(n, q, 'X'));
    zs.push_back(PauliString::single(n, q, 'Z'));
  }
  return CliffordElement(std::move(xs), std::move(zs));
}

CliffordElement CliffordElement::hadamard(std::size_t n, std::size_t q) {
  auto c = identity(n);
  std::swap(c.x_images_[q], c.z_images_[q]);
  return c;
}

CliffordElement CliffordElement::phase(std::size_t n, std::size_t q) {
  auto c = identity(n);
  c.x_images_[q] = PauliString::single(n, q, 'Y');
  return c;
}

CliffordElement CliffordElement::cnot(std::size_t n, std::size_t control, std::size_t target) {
  if (control == target || control >= n || target >= n) throw InvalidInput("CliffordElement::cnot: bad qubits");
  auto c = identity(n);
  c.x_images_[control] = PauliString::single(n, control, 'X') * PauliString::single(n, target, 'X');
  c.z_images_[target] = PauliString::single(n, control, 'Z') * PauliString::single(n, target, 'Z');
  return c;
}

PauliString CliffordElement::conjugate(const PauliString& p) const {
  const std::size_t n = num_qubits();
  if (p.num_qubits() != n) throw DimensionMismatch("CliffordElement::conjugate");
  PauliString acc(n);
  acc = PauliString(acc.x_bits(), acc.z_bits(), p.phase_exponent());
  for (std::size_t j = 0; j < n; ++j)
    if (p.x(j)) acc = acc * x_images_[j];
  for (std::size_t j = 0; j < n; ++j)
    if (p.z(j)) acc = acc * z_images_[j];
  return acc;
}

CliffordElement CliffordElement::then(const CliffordElement& next) const {
  if (next.num_qubits() != num_qubits()) throw DimensionMismatch("CliffordElement::then");
  CliffordElement out;
  out.x_images_.reserve(num_qubits());
  out.z_images_.reserve(num_qubits());
  for (const auto& p : x_images_) out.x_images_.push_back(next.conjugate(p));
  for (const auto& p : z_images_) out.z_images_.push_back(next.conjugate(p));
  return out;
}

std::vector<Bits> CliffordElement::symplectic_matrix() const {
  const std::size_t n = num_qubits();
  std::vector<Bits> m(2 * n, Bits(2 * n, 0));
  for (std::size_t j = 0; j < n; ++j) {
    const Bits xj = x_images_[j].symplectic();
    const Bits zj = z_images_[j].symplectic();
    for (std::size_t r = 0; r < 2 * n; ++r) {
      m[r][j] = xj[r];
      m[r][n + j] = zj[r];
    }
  }
  return m;
}

CliffordElement CliffordElement::inverse() const {
  const std::size_t n = num_qubits();
  const auto m = symplectic_matrix();
  auto flip = [n](std::size_t i) { return i < n ? i + n : i - n; };
  std::vector<PauliString> xs, zs;
  for (std::size_t c = 0; c < 2 * n; ++c) {
    Bits col(2 * n);
    for (std::size_t r = 0; r < 2 * n; ++r) col[r] = m[flip(c)][flip(r)];
    PauliString p = PauliString::from_symplectic(col, false);
    const PauliString basis = c < n ? PauliString::single(n, c, 'X') : PauliString::single(n, c - n, 'Z');
    const PauliString img = conjugate(p);
    if (!img.same_support(basis)) throw std::logic_error("CliffordElement::inverse: tableau is not symplectic");
    if (img.phase_exponent() != basis.phase_exponent()) p = p.negated();
    (c < n ? xs : zs).push_back(std::move(p));
  }
  return CliffordElement(std::move(xs), std::move(zs));
}

std::string CliffordElement::key() const {
  std::string k;
  for (const auto& p : x_images_) k += p.to_string() + '|';
  for (const auto& p : z_images_) k += p.to_string() + '|';
  return k;
}

bool CliffordElement::operator==(const CliffordElement& other) const {
  return x_images_ == other.x_images_ && z_images_ == other.z_images_;
}

Matrix clifford_to_dense(const CliffordElement& c) {
  const std::size_t n = c.num_qubits();
  if (n > kMaxDenseQubits) throw InvalidInput("clifford_to_dense: too many qubits");
  const std::size_t d = std::size_t{1} << n;
  const Vector psi0 = StabilizerGroup(c.z_images()).state_vector();
  Matrix u(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t x = 0; x < d; ++x) {
    PauliString p(n);
    for (std::size_t j = 0; j < n; ++j)
      if ((x >> (n - 1 - j)) & 1) p = p * c.x_images()[j];
    u.col(static_cast<Eigen::Index>(x)) = p.apply(psi0);
  }
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const cplx v = u(i, 0);
    if (std::abs(v) > 1e-12) {
      u *= std::conj(v) / std::abs(v);
      break;
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// Sampling and enumeration

CliffordElement sample_clifford_symplectic(SeededRng& rng, std::size_t n) {
  if (n == 0) throw InvalidInput("sample_clifford: need at least one qubit");
  const std::size_t len = 2 * n;
  // Symplectic basis of the complement of the pairs chosen so far: (e_0, f_0, e_1, f_1, ...).
  std::vector<Bits> basis;
  for (std::size_t q = 0; q < n; ++q) {
    Bits e(len, 0), f(len, 0);
    e[q] = 1;
    f[n + q] = 1;
    basis.push_back(e);
    basis.push_back(f);
  }
  auto combine = [&](const Bits& coeffs) {
    Bits v(len, 0);
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (coeffs[i])
        for (std::size_t r = 0; r < len; ++r) v[r] ^= basis[i][r];
    return v;
  };
  auto random_coeffs = [&](bool nonzero) {
    Bits c(basis.size());
    for (;;) {
      bool any = false;
      for (auto& b : c) {
        b = rng.coin() ? 1 : 0;
        any = any || b;
      }
      if (any || !nonzero) return c;
    }
  };

  std::vector<PauliString> xs, zs;
  for (std::size_t j = 0; j < n; ++j) {
    const Bits v = combine(random_coeffs(true));
    Bits w;
    do {
      w = combine(random_coeffs(false));
    } while (symplectic_product(v, w) != 1);
    xs.push_back(PauliString::from_symplectic(v, rng.coin()));
    zs.push_back(PauliString::from_symplectic(w, rng.coin()));

    // Project the old basis onto the complement of span{v, w}, then re-pair it.
    std::vector<Bits> rest;
    for (auto b : basis) {
      const int bw = symplectic_product(b, w);
      const int bv = symplectic_product(b, v);
      for (std::size_t r = 0; r < len; ++r) b[r] ^= static_cast<std::uint8_t>((bw & v[r]) ^ (bv & w[r]));
      rest.push_back(std::move(b));
    }
    std::vector<Bits> next;
    while (next.size() < 2 * (n - j - 1)) {
      std::size_t ai = 0;
      while (ai < rest.size() && std::all_of(rest[ai].begin(), rest[ai].end(), [](auto bit) { return bit == 0; })) ++ai;
      if (ai == rest.size()) throw std::logic_error("sample_clifford: complement basis collapsed");
      const Bits a = rest[ai];
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(ai));
      std::size_t bi = 0;
      while (bi < rest.size() && symplectic_product(a, rest[bi]) != 1) ++bi;
      if (bi == rest.size()) throw std::logic_error("sample_clifford: degenerate complement");
      const Bits b = rest[bi];
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(bi));
      for (auto& s : rest) {
        const int sb = symplectic_product(s, b);
        const int sa = symplectic_product(s, a);
        for (std::size_t r = 0; r < len; ++r) s[r] ^= static_cast<std::uint8_t>((sb & a[r]) ^ (sa & b[r]));
      }
      next.push_back(a);
      next.push_back(b);
    }
    basis = std::move(next);
  }
  return CliffordElement(std::move(xs), std::move(zs));
}

namespace {

std::vector<CliffordElement> enumerate_clifford_group(std::size_t n) {
  std::vector<CliffordElement> gens;
  for (std::size_t q = 0; q < n; ++q) {
    gens.push_back(CliffordElement::hadamard(n, q));
    gens.push_back(CliffordElement::phase(n, q));
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) gens.push_back(CliffordElement::cnot(n, a, b));

  std::vector<CliffordElement> group{CliffordElement::identity(n)};
  std::unordered_set<std::string> seen{group.front().key()};
  for (std::size_t head = 0; head < group.size(); ++head) {
    for (const auto& g : gens) {
      CliffordElement next = group[head].then(g);
      if (seen.insert(next.key()).second) group.push_back(std::move(next));
    }
  }
  return group;
}

}  // namespace

const std::vector<CliffordElement>& clifford_group(std::size_t n) {
  static const std::vector<CliffordElement> one = enumerate_clifford_group(1);
  if (n == 1) return one;
  if (n == 2) {
    static const std::vector<CliffordElement> two = enumerate_clifford_group(2);
    return two;
  }
  throw InvalidInput("clifford_group: enumeration is only available for 1 or 2 qubits");
}

const std::vector<Matrix>& clifford_group_dense(std::size_t n) {
  auto build = [](std::size_t q) {
    std::vector<Matrix> out;
    for (const auto& c : clifford_group(q)) out.push_back(clifford_to_dense(c));
    return out;
  };
  if (n == 1) {
    static const std::vector<Matrix> one = build(1);
    return one;
  }
  if (n == 2) {
    static const std::vector<Matrix> two = build(2);
    return two;
  }
  throw InvalidInput("clifford_group_dense: enumeration is only available for 1 or 2 qubits");
}

CliffordElement sample_clifford(SeededRng& rng, std::size_t n) {
  if (n == 1 || n == 2) {
    const auto& group = clifford_group(n);
    return group[rng.index(group.size())];
  }
  return sample_clifford_symplectic(rng, n);
}

// ---------------------------------------------------------------------------
// StabilizerGroup

StabilizerGroup::StabilizerGroup(std::vector<PauliString> generators) : generators_(std::move(generators)) {
  if (generators_.empty()) throw InvalidInput("StabilizerGroup: no generators");
  const std::size_t n = generators_.front().num_qubits();
  if (generators_.size() != n)
    throw InvalidInput("StabilizerGroup: expected " + std::to_string(n) + " generators, got " +
                       std::to_string(generators_.size()));
  std::vector<Bits> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = generators_[i];
    if (g.num_qubits() != n) throw DimensionMismatch("StabilizerGroup: generator " + std::to_string(i) + " length");
    if (!g.is_hermitian())
      throw InvalidInput("StabilizerGroup: generator " + g.to_string() + " has a non-real sign");
    for (std::size_t j = 0; j < i; ++j)
      if (!g.commutes_with(generators_[j]))
        throw InvalidInput("StabilizerGroup: generators " + generators_[j].to_string() + " and " + g.to_string() +
                           " anticommute");
    rows.push_back(g.symplectic());
  }
  if (gf2_rank(rows) != n) throw InvalidInput("StabilizerGroup: generators are not independent");
}

StabilizerGroup StabilizerGroup::parse(std::string_view text) {
  std::vector<PauliString> gens;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    gens.push_back(PauliString::parse(std::string_view(line).substr(first, last - first + 1)));
  }
  return StabilizerGroup(std::move(gens));
}

StabilizerGroup StabilizerGroup::computational_zero(std::size_t n) {
  std::vector<PauliString> gens;
  for (std::size_t q = 0; q < n; ++q) gens.push_back(PauliString::single(n, q, 'Z'));
  return StabilizerGroup(std::move(gens));
}

std::string StabilizerGroup::to_string() const {
  std::string out;
  for (const auto& g : generators_) out += g.to_string() + '\n';
  return out;
}

std::vector<PauliString> StabilizerGroup::elements() const {
  const std::size_t n = num_qubits();
  if (n > 20) throw InvalidInput("StabilizerGroup::elements: group too large to list");
  std::vector<PauliString> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t i = 0; i < (std::size_t{1} << n); ++i) {
    Bits sel(n);
    for (std::size_t j = 0; j < n; ++j) sel[j] = static_cast<std::uint8_t>((i >> j) & 1);
    out.push_back(product_of(generators_, sel));
  }
  return out;
}

StabilizerGroup StabilizerGroup::conjugated_by(const CliffordElement& c) const {
  std::vector<PauliString> gens;
  gens.reserve(generators_.size());
  for (const auto& g : generators_) gens.push_back(c.conjugate(g));
  return StabilizerGroup(std::move(gens));
}

std::vector<std::pair<Bits, int>> StabilizerGroup::z_constraints() const {
  const std::size_t n = num_qubits();
  std::vector<PauliString> rows = generators_;
  std::size_t r = 0;
  for (std::size_t q = 0; q < n && r < n; ++q) {
    std::size_t p = r;
    while (p < n && !rows[p].x(q)) ++p;
    if (p == n) continue;
    std::swap(rows[p], rows[r]);
    for (std::size_t i = 0; i < n; ++i)
      if (i != r && rows[i].x(q)) rows[i] = rows[i] * rows[r];
    ++r;
  }
  std::vector<std::pair<Bits, int>> out;
  for (std::size_t i = r; i < n; ++i) out.emplace_back(rows[i].z_bits(), rows[i].phase_exponent() / 2);
  return out;
}

Vector StabilizerGroup::state_vector() const {
  const std::size_t n = num_qubits();
  if (n > kMaxDenseQubits) throw InvalidInput("StabilizerGroup::state_vector: too many qubits");
  const auto constraints = z_constraints();
  std::vector<Bits> a;
  Bits rhs;
  for (const auto& [z, parity] : constraints) {
    a.push_back(z);
    rhs.push_back(static_cast<std::uint8_t>(parity));
  }
  Bits b(n, 0);
  if (!a.empty()) {
    auto sol = gf2_solve(a, rhs, n);
    if (!sol) throw std::logic_error("StabilizerGroup::state_vector: inconsistent Z constraints");
    b = *sol;
  }
  const std::size_t d = std::size_t{1} << n;
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(d));
  psi[static_cast<Eigen::Index>(bits_to_index(b))] = 1.0;
  for (const auto& g : generators_) psi = 0.5 * (psi + g.apply(psi));
  const double norm = psi.norm();
  if (norm < 1e-9) throw std::logic_error("StabilizerGroup::state_vector: projection vanished");
  return psi / norm;
}

int pauli_expectation_stabilizer(const StabilizerGroup& s, const PauliString& p) {
  if (p.num_qubits() != s.num_qubits()) throw DimensionMismatch("pauli_expectation_stabilizer");
  if (!p.is_hermitian()) throw InvalidInput("pauli_expectation_stabilizer: Pauli must be Hermitian");
  for (const auto& g : s.generators())
    if (!p.commutes_with(g)) return 0;
  const auto sel = decompose(s.generators(), p);
  if (!sel) throw std::logic_error("pauli_expectation_stabilizer: commuting Pauli outside a maximal group");
  const PauliString q = product_of(s.generators(), *sel);
  return q.phase_exponent() == p.phase_exponent() ? 1 : -1;
}

DensityMatrix stabilizer_state_dense(const StabilizerGroup& s) {
  if (s.num_qubits() > 12) throw InvalidInput("stabilizer_state_dense: at most 12 qubits");
  const Vector psi = s.state_vector();
  return DensityMatrix(psi * psi.adjoint());
}

double stabilizer_overlap(const StabilizerGroup& s, const CliffordElement& c, const Bits& b) {
  const std::size_t n = s.num_qubits();
  if (b.size() != n || c.num_qubits() != n) throw DimensionMismatch("stabilizer_overlap");
  const auto constraints = s.conjugated_by(c).z_constraints();
  for (const auto& [z, parity] : constraints)
    if (static_cast<int>(popcount_and(z, b) & 1) != parity) return 0.0;
  return std::ldexp(1.0, -static_cast<int>(n - constraints.size()));
}

std::size_t bits_to_index(const Bits& b) { return mask_of(b); }

Bits index_to_bits(std::size_t index, std::size_t n) {
  Bits b(n);
  for (std::size_t q = 0; q < n; ++q) b[q] = static_cast<std::uint8_t>((index >> (n - 1 - q)) & 1);
  return b;
}

}  // namespace qcert
