#include "qcert/protocols.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <unordered_map>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "qcert/kernels.hpp"
#include "qcert/randomness.hpp"
#include "qcert/tolerances.hpp"

namespace qcert {

namespace {

// Fixed sub-streams of a protocol seed.
constexpr std::uint64_t kDrawStream = 0xd7a3;
constexpr std::uint64_t kOrderStream = 0x0dde;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 15];
  return s;
}

std::string matrix_tag(const Matrix& m) {
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  std::uint64_t h = fnv1a(dims, sizeof dims);
  h = fnv1a(m.data(), static_cast<std::size_t>(m.size()) * sizeof(cplx), h);
  return hex(h);
}

std::string string_tag(const std::string& s) { return hex(fnv1a(s.data(), s.size())); }

std::shared_ptr<const Matrix> zero_state(std::size_t d) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  m(0, 0) = 1.0;
  return std::make_shared<const Matrix>(std::move(m));
}

// Pauli with sigma coefficient +1 for the given bits.
PauliString sigma(Bits x, Bits z) {
  int ys = 0;
  for (std::size_t q = 0; q < x.size(); ++q) ys += (x[q] & z[q]);
  return PauliString(std::move(x), std::move(z), ys % 4);
}

int count_y(const PauliString& p) {
  int ys = 0;
  for (std::size_t q = 0; q < p.num_qubits(); ++q) ys += (p.x(q) && p.z(q)) ? 1 : 0;
  return ys;
}

PauliString with_sign(const PauliString& unsigned_p, int sign) { return sign < 0 ? unsigned_p.negated() : unsigned_p; }

PauliString product_of(const std::vector<PauliString>& gens, std::uint64_t mask) {
  PauliString p(gens.front().num_qubits());
  for (std::size_t i = 0; i < gens.size(); ++i)
    if ((mask >> i) & 1) p = p * gens[i];
  return p;
}

Vector dense_target(const CertTarget& t) {
  if (const auto* s = std::get_if<StabilizerGroup>(&t)) {
    if (s->num_qubits() > 12) throw InvalidInput("dense target limited to 12 qubits");
    return s->state_vector();
  }
  return std::get<PureState>(t).amplitudes();
}

std::size_t target_qubits(const CertTarget& t) {
  if (const auto* s = std::get_if<StabilizerGroup>(&t)) return s->num_qubits();
  return qubit_count(std::get<PureState>(t).dim());
}

// Appends draws to a plan, merging repeated settings into one measurement when aggregating.
class PlanBuilder {
 public:
  PlanBuilder(ExperimentPlan& plan, bool aggregate) : plan_(plan), aggregate_(aggregate) {}

  template <class MakeSetting>
  std::size_t draw(const std::string& id, std::uint64_t shots, bool ordered, MakeSetting&& make) {
    std::size_t j;
    const auto it = aggregate_ ? index_.find(id) : index_.end();
    if (it != index_.end()) {
      j = it->second;
      plan_.measurements[j].shots += shots;
    } else {
      j = plan_.measurements.size();
      PlannedMeasurement m;
      m.setting = make();
      m.setting.id = id;
      m.shots = shots;
      m.stream = mix_seed(plan_.seed, j);
      m.first_shot = clock_;
      plan_.measurements.push_back(std::move(m));
      if (aggregate_) index_.emplace(id, j);
    }
    clock_ += shots;
    if (ordered) plan_.sequence.push_back(j);
    return j;
  }

 private:
  ExperimentPlan& plan_;
  bool aggregate_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t clock_ = 0;
};

void check_batches(const ExperimentPlan& plan, const std::vector<ShotBatch>& batches) {
  if (batches.size() != plan.measurements.size())
    throw InvalidInput(plan.protocol + ": expected " + std::to_string(plan.measurements.size()) + " batches, got " +
                       std::to_string(batches.size()));
  for (std::size_t j = 0; j < batches.size(); ++j) {
    if (batches[j].setting_id != plan.measurements[j].setting.id)
      throw InvalidInput(plan.protocol + ": batch " + std::to_string(j) + " answers setting '" +
                         batches[j].setting_id + "', expected '" + plan.measurements[j].setting.id + "'");
    if (batches[j].shots() != plan.measurements[j].shots)
      throw InvalidInput(plan.protocol + ": batch " + std::to_string(j) + " has the wrong shot count");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t ExperimentPlan::total_shots() const {
  std::uint64_t n = 0;
  for (const auto& m : measurements) n += m.shots;
  return n;
}

std::vector<ShotBatch> execute(MeasurementDevice& device, const ExperimentPlan& plan) {
  std::vector<ShotBatch> out(plan.measurements.size());
  kernels::for_each_index(plan.measurements.size(), [&](std::size_t j) {
    const auto& m = plan.measurements[j];
    if (m.shots == 0) throw InvalidInput(plan.protocol + ": planned measurement without shots");
    // Calls above the per-call cap are split; piece c > 0 runs on stream mix(stream, c).
    std::uint64_t done = 0;
    for (std::uint64_t c = 0; done < m.shots; ++c) {
      const std::uint64_t take = std::min(kMaxShotsPerCall, m.shots - done);
      ShotBatch b = device.measure(m.setting, take, c == 0 ? m.stream : mix_seed(m.stream, c), m.first_shot + done);
      if (c == 0) {
        out[j] = std::move(b);
      } else {
        if (b.counts.size() != out[j].counts.size()) throw InvalidInput(plan.protocol + ": outcome count changed");
        for (std::size_t k = 0; k < b.counts.size(); ++k) out[j].counts[k] += b.counts[k];
      }
      done += take;
    }
    out[j].stream = m.stream;
  });
  return out;
}

std::vector<std::size_t> ordered_outcomes(const ExperimentPlan& plan, const std::vector<ShotBatch>& batches) {
  check_batches(plan, batches);
  std::vector<std::size_t> uses(plan.measurements.size(), 0);
  for (auto j : plan.sequence) ++uses[j];
  std::vector<std::vector<std::size_t>> pools(plan.measurements.size());
  for (std::size_t j = 0; j < pools.size(); ++j) {
    if (uses[j] == 0) continue;
    if (batches[j].shots() != uses[j])
      throw InvalidInput(plan.protocol + ": measurement " + std::to_string(j) + " has " +
                         std::to_string(batches[j].shots()) + " shots for " + std::to_string(uses[j]) + " draws");
    auto& pool = pools[j];
    pool.reserve(uses[j]);
    for (std::size_t k = 0; k < batches[j].counts.size(); ++k) pool.insert(pool.end(), batches[j].counts[k], k);
    if (pool.size() > 1) {
      SeededRng rng(plan.seed, mix_seed(kOrderStream, j));
      for (std::size_t i = pool.size() - 1; i > 0; --i) std::swap(pool[i], pool[rng.index(i + 1)]);
    }
  }
  std::vector<std::size_t> next(pools.size(), 0);
  std::vector<std::size_t> out;
  out.reserve(plan.sequence.size());
  for (auto j : plan.sequence) out.push_back(pools[j][next[j]++]);
  return out;
}

// ---------------------------------------------------------------------------
// Observables

ObservablePlan plan_observable(const Matrix& observable, const ConfidenceSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (!is_hermitian(observable, tol::kHermitian)) throw InvalidInput("estimate_observable: observable is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(observable);
  const auto& vals = es.eigenvalues();
  const auto& vecs = es.eigenvectors();
  const Eigen::Index d = observable.rows();

  ObservablePlan plan;
  plan.spec = spec;
  std::vector<Matrix> effects;
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < d;) {
    Eigen::Index j = i;
    double sum = 0.0;
    Matrix proj = Matrix::Zero(d, d);
    while (j < d && vals[j] - vals[i] <= 1e-9 * std::max(1.0, std::abs(vals[i]))) {
      proj += vecs.col(j) * vecs.col(j).adjoint();
      sum += vals[j];
      ++j;
    }
    plan.eigenvalues.push_back(sum / static_cast<double>(j - i));
    labels.push_back("o" + std::to_string(effects.size()));
    effects.push_back(std::move(proj));
    i = j;
  }
  const double range = vals[d - 1] - vals[0];
  const std::uint64_t n = hoeffding_n(range, spec);

  plan.experiment.protocol = "estimate_observable";
  plan.experiment.seed = seed;
  plan.experiment.planned_n = n;
  PlanBuilder b(plan.experiment, true);
  auto povm = std::make_shared<const Povm>(std::move(effects), std::move(labels));
  b.draw("obs:" + matrix_tag(observable), n, false,
         [&] { return MeasurementSetting::povm_measurement("", povm); });
  return plan;
}

Estimate analyze_observable(const ObservablePlan& plan, const std::vector<ShotBatch>& batches) {
  check_batches(plan.experiment, batches);
  const auto& counts = batches.front().counts;
  if (counts.size() != plan.eigenvalues.size()) throw InvalidInput("estimate_observable: outcome count mismatch");
  std::vector<double> sq(plan.eigenvalues.size());
  for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = plan.eigenvalues[k] * plan.eigenvalues[k];
  const double m1 = kernels::count_weighted_mean(counts, plan.eigenvalues);
  const double m2 = kernels::count_weighted_mean(counts, sq);
  const auto n = batches.front().shots();
  Estimate e;
  e.value = m1;
  e.epsilon = plan.spec.epsilon;
  e.delta = plan.spec.delta;
  e.n_samples_used = n;
  e.method = "observable_mean";
  e.std_error = n > 1 ? std::sqrt(std::max(0.0, m2 - m1 * m1) / static_cast<double>(n - 1)) : 0.0;
  return e;
}

Estimate estimate_observable(MeasurementDevice& device, const Matrix& observable, const ConfidenceSpec& spec,
                             std::uint64_t seed) {
  if (static_cast<std::size_t>(observable.rows()) != device.dim())
    throw DimensionMismatch("estimate_observable: observable dimension differs from the device");
  const auto plan = plan_observable(observable, spec, seed);
  return analyze_observable(plan, execute(device, plan.experiment));
}

// ---------------------------------------------------------------------------
// Direct certification

double minimax_spectral_gap(std::size_t n_qubits) {
  if (n_qubits == 0 || n_qubits > 62) throw InvalidInput("minimax_spectral_gap: n must lie in [1, 62]");
  const double two_n = std::ldexp(1.0, static_cast<int>(n_qubits));
  return (two_n / 2.0) / (two_n - 1.0);
}

Matrix minimax_operator(const StabilizerGroup& s) {
  const std::size_t n = s.num_qubits();
  if (n > 10) throw InvalidInput("minimax_operator: dense form limited to 10 qubits");
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << n);
  const auto elements = s.elements();
  Matrix omega = Matrix::Zero(d, d);
  for (std::size_t i = 1; i < elements.size(); ++i) omega += pauli_to_dense(elements[i]);
  const double m = static_cast<double>(elements.size() - 1);
  return 0.5 * Matrix::Identity(d, d) + (0.5 / m) * omega;
}

namespace {

Matrix custom_omega(const std::vector<CustomTest>& tests, std::vector<double>& weights) {
  if (tests.empty()) throw InvalidInput("direct certification: custom strategy without tests");
  double total = 0.0;
  for (const auto& t : tests) {
    if (!(t.weight > 0.0) || !std::isfinite(t.weight)) throw InvalidInput("direct certification: test weights must be positive");
    total += t.weight;
  }
  const auto d = tests.front().pass_effect.rows();
  Matrix omega = Matrix::Zero(d, d);
  weights.clear();
  for (const auto& t : tests) {
    if (t.pass_effect.rows() != d || t.pass_effect.cols() != d)
      throw DimensionMismatch("direct certification: test effects differ in dimension");
    Povm::binary(t.pass_effect);  // validates 0 <= E <= 1
    weights.push_back(t.weight / total);
    omega += weights.back() * t.pass_effect;
  }
  return omega;
}

// 1 - lambda_2 of Omega after checking Tr[Omega rho] = 1 on the target.
double custom_gap(const Matrix& omega, const Vector& psi) {
  if (omega.rows() != psi.size()) throw DimensionMismatch("direct certification: strategy and target dimensions differ");
  const double pass = psi.dot(omega * psi).real();
  if (pass < 1.0 - 1e-9)
    throw InvalidInput("direct certification: strategy passes the target with probability " + std::to_string(pass) +
                       " < 1");
  const RealVector ev = hermitian_eigenvalues(omega);  // ascending
  if (ev.size() < 2) return 1.0;
  return 1.0 - ev[ev.size() - 2];
}

}  // namespace

std::uint64_t direct_cert_sample_count(const CertTarget& target, const ConfidenceSpec& spec,
                                       const DirectCertOptions& options) {
  spec.validate();
  const double l = std::log(1.0 / spec.delta);
  switch (options.strategy) {
    case CertStrategy::ExactPovm:
      return ceil_count(l / spec.epsilon);
    case CertStrategy::StabilizerMinimax:
      if (!std::holds_alternative<StabilizerGroup>(target))
        throw InvalidInput("direct certification: the minimax strategy needs a stabilizer target");
      return ceil_count(2.0 * l / spec.epsilon);
    case CertStrategy::Custom: {
      std::vector<double> w;
      const double nu = custom_gap(custom_omega(options.custom, w), dense_target(target));
      if (!(nu > 1e-12)) throw InvalidInput("direct certification: custom strategy has no spectral gap");
      return ceil_count(l / (nu * spec.epsilon));
    }
  }
  return 0;
}

DirectCertPlan plan_direct_state(const CertTarget& target, const ConfidenceSpec& spec, const DirectCertOptions& options,
                                 std::uint64_t seed, bool aggregate) {
  const std::uint64_t n = direct_cert_sample_count(target, spec, options);
  DirectCertPlan plan;
  plan.spec = spec;
  plan.adaptive = options.adaptive;
  auto& ex = plan.experiment;
  ex.seed = seed;
  ex.planned_n = n;
  PlanBuilder b(ex, aggregate);
  SeededRng rng(seed, kDrawStream);

  switch (options.strategy) {
    case CertStrategy::ExactPovm: {
      ex.protocol = "direct_state_exact_povm";
      const Vector psi = dense_target(target);
      if (psi.size() > 1024) throw InvalidInput("direct certification: exact POVM limited to 10 qubits");
      const std::string id = "cert:exact:" + matrix_tag(psi);
      std::shared_ptr<const Povm> povm;
      for (std::uint64_t i = 0; i < n; ++i)
        b.draw(id, 1, true, [&] {
          povm = std::make_shared<const Povm>(Povm::binary(psi * psi.adjoint()));
          return MeasurementSetting::povm_measurement("", povm);
        });
      break;
    }
    case CertStrategy::StabilizerMinimax: {
      ex.protocol = "direct_state_stabilizer_minimax";
      const auto& s = std::get<StabilizerGroup>(target);
      const std::size_t nq = s.num_qubits();
      if (nq > 62) throw InvalidInput("direct certification: at most 62 qubits");
      const std::uint64_t nontrivial = (std::uint64_t{1} << nq) - 1;
      for (std::uint64_t i = 0; i < n; ++i) {
        const PauliString g = product_of(s.generators(), 1 + rng.index(nontrivial));
        b.draw("stab:" + g.to_string(), 1, true, [&] { return MeasurementSetting::pauli_measurement("", g); });
      }
      break;
    }
    case CertStrategy::Custom: {
      ex.protocol = "direct_state_custom";
      std::vector<double> w;
      custom_omega(options.custom, w);
      const auto cdf = kernels::cumulative(w);
      std::vector<std::string> tags(options.custom.size());
      for (std::size_t t = 0; t < tags.size(); ++t) tags[t] = matrix_tag(options.custom[t].pass_effect);
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::size_t t = kernels::inverse_cdf(cdf, rng.uniform());
        b.draw("cert:custom:" + tags[t], 1, true, [&] {
          return MeasurementSetting::povm_measurement(
              "", std::make_shared<const Povm>(Povm::binary(options.custom[t].pass_effect)));
        });
      }
      break;
    }
  }
  return plan;
}

Verdict analyze_direct(const DirectCertPlan& plan, const std::vector<ShotBatch>& batches) {
  const auto outcomes = ordered_outcomes(plan.experiment, batches);
  Verdict v;
  v.epsilon = plan.spec.epsilon;
  v.delta = plan.spec.delta;
  v.n_planned = plan.experiment.planned_n;
  v.protocol = plan.experiment.protocol;
  v.distance = "infidelity";
  v.decision = Verdict::Decision::Accept;
  v.n_used = outcomes.size();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i] != 0) {
      v.decision = Verdict::Decision::Reject;
      if (plan.adaptive) v.n_used = i + 1;
      break;
    }
  }
  return v;
}

Verdict direct_state_certify(MeasurementDevice& device, const CertTarget& target, const ConfidenceSpec& spec,
                             const DirectCertOptions& options, std::uint64_t seed) {
  if ((std::size_t{1} << target_qubits(target)) != device.dim())
    throw DimensionMismatch("direct certification: target and device dimensions differ");
  const auto plan = plan_direct_state(target, spec, options, seed, device.is_iid());
  return analyze_direct(plan, execute(device, plan.experiment));
}

DirectCertPlan plan_direct_process(const CliffordElement& target, const std::string& gate_id,
                                   const ConfidenceSpec& spec, bool adaptive, std::uint64_t seed, bool aggregate) {
  spec.validate();
  const std::size_t n = target.num_qubits();
  if (n == 0 || n > 6) throw InvalidInput("direct process certification: 1 to 6 qubits");
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << n);
  const std::uint64_t count = ceil_count(2.0 * std::log(1.0 / spec.delta) / spec.epsilon);

  // Choi state stabilizers C(X_j) (x) X_j and C(Z_j) (x) Z_j on 2n qubits (output first).
  std::vector<PauliString> gens;
  for (int kind = 0; kind < 2; ++kind) {
    for (std::size_t j = 0; j < n; ++j) {
      const PauliString& img = kind == 0 ? target.x_images()[j] : target.z_images()[j];
      Bits x = img.x_bits(), z = img.z_bits();
      Bits xb(n, 0), zb(n, 0);
      (kind == 0 ? xb : zb)[j] = 1;
      x.insert(x.end(), xb.begin(), xb.end());
      z.insert(z.end(), zb.begin(), zb.end());
      gens.emplace_back(std::move(x), std::move(z), img.phase_exponent());
    }
  }

  DirectCertPlan plan;
  plan.spec = spec;
  plan.adaptive = adaptive;
  auto& ex = plan.experiment;
  ex.protocol = "direct_process_clifford";
  ex.seed = seed;
  ex.planned_n = count;
  PlanBuilder b(ex, aggregate);
  SeededRng rng(seed, kDrawStream);
  const auto gate = std::make_shared<const Matrix>(clifford_to_dense(target));
  const std::string prefix = "dpc:" + gate_id + ":" + string_tag(target.key()) + ":";
  const std::uint64_t nontrivial = (std::uint64_t{1} << (2 * n)) - 1;
  std::unordered_map<std::string, std::shared_ptr<const Matrix>> inputs;

  for (std::uint64_t i = 0; i < count; ++i) {
    const PauliString s = product_of(gens, 1 + rng.index(nontrivial));
    const int bsign = rng.coin() ? 1 : -1;
    const int c = s.coefficient().real() > 0 ? 1 : -1;
    const PauliString sa = sigma(Bits(s.x_bits().begin(), s.x_bits().begin() + static_cast<std::ptrdiff_t>(n)),
                                 Bits(s.z_bits().begin(), s.z_bits().begin() + static_cast<std::ptrdiff_t>(n)));
    const PauliString sb = sigma(Bits(s.x_bits().begin() + static_cast<std::ptrdiff_t>(n), s.x_bits().end()),
                                 Bits(s.z_bits().begin() + static_cast<std::ptrdiff_t>(n), s.z_bits().end()));
    // Input (1 + b sigma_B^T) / d; pass iff the measured sigma_A outcome equals c b.
    const bool trivial_b = sb.is_identity();
    const int input_sign = trivial_b ? 0 : bsign * ((count_y(sb) % 2) ? -1 : 1);
    const PauliString measured = with_sign(sa, trivial_b ? c : c * bsign);
    const std::string in_key = trivial_b ? std::string("I") : (input_sign > 0 ? "+" : "-") + sb.to_string();
    b.draw(prefix + in_key + ":" + measured.to_string(), 1, true, [&] {
      auto& in = inputs[in_key];
      if (!in) {
        Matrix rho = Matrix::Identity(d, d);
        if (!trivial_b) rho += static_cast<double>(input_sign) * pauli_to_dense(sb);
        in = std::make_shared<const Matrix>(rho / static_cast<double>(d));
      }
      auto setting = MeasurementSetting::pauli_measurement("", measured);
      setting.input_state = in;
      setting.gates = {Gate{gate_id, gate}};
      return setting;
    });
  }
  return plan;
}

Verdict direct_process_certify(MeasurementDevice& device, const CliffordElement& target, const ConfidenceSpec& spec,
                               const std::string& gate_id, bool adaptive, std::uint64_t seed) {
  if ((std::size_t{1} << target.num_qubits()) != device.dim())
    throw DimensionMismatch("direct process certification: target and device dimensions differ");
  const auto plan = plan_direct_process(target, gate_id, spec, adaptive, seed, device.is_iid());
  auto v = analyze_direct(plan, execute(device, plan.experiment));
  v.distance = "entanglement_infidelity";
  return v;
}

// ---------------------------------------------------------------------------
// DFE

std::uint64_t dfe_ell(const ConfidenceSpec& spec, const DfeOptions& options) {
  spec.validate();
  const double eps = spec.epsilon;
  if (options.mode == DfeMode::General) return ceil_count(1.0 / (eps * eps * spec.delta));
  if (!(options.alpha > 0.0 && options.alpha <= 1.0)) throw InvalidInput("dfe: alpha must lie in (0, 1]");
  const double ae = options.alpha * eps;
  return ceil_count(2.0 / (ae * ae) * std::log(2.0 / spec.delta));
}

DfePlan plan_dfe(const FidelityTarget& target, const ConfidenceSpec& spec, const DfeOptions& options,
                 std::uint64_t seed, bool aggregate) {
  const std::uint64_t ell = dfe_ell(spec, options);

  // Sampling space: Paulis with nonzero Tr[W rho]; q_k = Tr[W_k rho]^2 / d.
  std::vector<PauliString> paulis;
  std::vector<double> expect;
  std::size_t n;
  if (const auto* s = std::get_if<StabilizerGroup>(&target)) {
    n = s->num_qubits();
    if (n > 20) throw InvalidInput("dfe: stabilizer targets limited to 20 qubits");
    for (const auto& g : s->elements()) {
      paulis.push_back(g.unsigned_copy());
      expect.push_back(g.coefficient().real());
    }
  } else {
    const auto& psi = std::get<PureState>(target).amplitudes();
    n = qubit_count(static_cast<std::size_t>(psi.size()));
    if (n > 8) throw InvalidInput("dfe: dense targets limited to 8 qubits");
    const std::size_t total = std::size_t{1} << (2 * n);
    for (std::size_t idx = 0; idx < total; ++idx) {
      Bits x(n), z(n);
      for (std::size_t q = 0; q < n; ++q) {
        x[q] = (idx >> (2 * q)) & 1;
        z[q] = (idx >> (2 * q + 1)) & 1;
      }
      PauliString p = sigma(std::move(x), std::move(z));
      const double e = psi.dot(p.apply(psi)).real();
      if (std::abs(e) < 1e-12) continue;
      paulis.push_back(std::move(p));
      expect.push_back(e);
    }
  }
  const double d = std::ldexp(1.0, static_cast<int>(n));
  std::vector<double> q(expect.size());
  double qsum = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) qsum += (q[k] = expect[k] * expect[k] / d);
  if (std::abs(qsum - 1.0) > 1e-10) throw InvalidInput("dfe: target is not pure (sum of q_k differs from 1)");
  if (options.mode == DfeMode::WellConditioned) {
    for (double e : expect)
      if (std::abs(e) < options.alpha - 1e-12)
        throw InvalidInput("dfe: target is not well-conditioned for alpha = " + std::to_string(options.alpha));
  }

  const double eps = spec.epsilon;
  const double log_term = std::log(2.0 / spec.delta);
  std::vector<std::uint64_t> m(expect.size(), 1);
  double expected = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (options.mode == DfeMode::General)
      m[k] = ceil_count(2.0 / (expect[k] * expect[k] * static_cast<double>(ell) * eps * eps) * log_term);
    expected += q[k] * static_cast<double>(m[k]);
  }

  DfePlan plan;
  plan.spec = spec;
  plan.mode = options.mode;
  plan.ell = ell;
  plan.expected_total = expected * static_cast<double>(ell);
  auto& ex = plan.experiment;
  ex.protocol = options.mode == DfeMode::General ? "dfe_general" : "dfe_well_conditioned";
  ex.seed = seed;
  ex.planned_n = ell;
  PlanBuilder b(ex, aggregate);
  SeededRng rng(seed, kDrawStream);
  const auto cdf = kernels::cumulative(q);
  for (std::uint64_t i = 0; i < ell; ++i) {
    const std::size_t k = kernels::inverse_cdf(cdf, rng.uniform());
    const std::size_t before = ex.measurements.size();
    b.draw("pauli:" + paulis[k].to_string(), m[k], false,
           [&] { return MeasurementSetting::pauli_measurement("", paulis[k]); });
    if (ex.measurements.size() != before) {
      plan.expectation.push_back(expect[k]);
      plan.shots_per_draw.push_back(m[k]);
    }
  }
  return plan;
}

Estimate analyze_dfe(const DfePlan& plan, const std::vector<ShotBatch>& batches) {
  check_batches(plan.experiment, batches);
  // Each draw contributes A_i / Tr[W rho] with A_i its mean outcome; draws of one Pauli share m_k,
  // so their sum is (total +1 minus total -1) / m_k.
  double acc = 0.0;
  for (std::size_t j = 0; j < batches.size(); ++j) {
    const auto& c = batches[j].counts;
    const double s = static_cast<double>(c[0]) - static_cast<double>(c[1]);
    acc += s / static_cast<double>(plan.shots_per_draw[j]) / plan.expectation[j];
  }
  Estimate e;
  e.value = acc / static_cast<double>(plan.ell);
  const bool general = plan.mode == DfeMode::General;
  e.epsilon = general ? 2.0 * plan.spec.epsilon : plan.spec.epsilon;
  e.delta = general ? 2.0 * plan.spec.delta : plan.spec.delta;
  e.n_samples_used = plan.experiment.total_shots();
  e.method = plan.experiment.protocol;
  return e;
}

Estimate dfe(MeasurementDevice& device, const FidelityTarget& target, const ConfidenceSpec& spec,
             const DfeOptions& options, std::uint64_t seed) {
  if ((std::size_t{1} << target_qubits(target)) != device.dim())
    throw DimensionMismatch("dfe: target and device dimensions differ");
  const auto plan = plan_dfe(target, spec, options, seed, device.is_iid());
  return analyze_dfe(plan, execute(device, plan.experiment));
}

// ---------------------------------------------------------------------------
// SFE

std::pair<std::uint64_t, std::uint64_t> sfe_sample_count(const ConfidenceSpec& spec, const SfeOptions& options) {
  spec.validate();
  if (!(options.constant > 0.0)) throw InvalidInput("sfe: constant must be positive");
  const double l = std::log(1.0 / spec.delta);
  const std::uint64_t k = ceil_count(8.0 * l);
  const std::uint64_t n0 =
      options.n_override ? *options.n_override : ceil_count(options.constant / (spec.epsilon * spec.epsilon) * l);
  if (n0 == 0) throw InvalidInput("sfe: sample count must be positive");
  return {k, (n0 + k - 1) / k * k};
}

SfePlan plan_sfe(const FidelityTarget& target, const ConfidenceSpec& spec, const SfeOptions& options,
                 std::uint64_t seed, bool aggregate) {
  const auto [k, n] = sfe_sample_count(spec, options);
  const std::size_t nq = target_qubits(target);
  const bool stab = std::holds_alternative<StabilizerGroup>(target);
  if (options.ensemble == SfeEnsemble::Haar && nq > 6) throw InvalidInput("sfe: Haar ensemble limited to 6 qubits");
  if (nq > 8) throw InvalidInput("sfe: at most 8 qubits");
  const std::size_t d = std::size_t{1} << nq;
  const Vector psi = stab && options.ensemble == SfeEnsemble::Clifford && nq > 2 ? Vector() : dense_target(target);

  SfePlan plan;
  plan.spec = spec;
  plan.group_size = k;
  plan.n_groups = n / k;
  auto& ex = plan.experiment;
  ex.protocol = options.ensemble == SfeEnsemble::Clifford ? "sfe_clifford" : "sfe_haar";
  ex.seed = seed;
  ex.planned_n = n;
  PlanBuilder b(ex, aggregate);
  SeededRng rng(seed, kDrawStream);

  auto dense_overlaps = [&](const Matrix& u) {
    const Vector out = u * psi;
    std::vector<double> ov(d);
    for (std::size_t x = 0; x < d; ++x) ov[x] = std::norm(out[static_cast<Eigen::Index>(x)]);
    return ov;
  };
  auto add = [&](const std::string& id, const std::function<std::shared_ptr<const Matrix>()>& unitary,
                 const std::function<std::vector<double>()>& overlaps) {
    const std::size_t before = ex.measurements.size();
    b.draw(id, 1, true, [&] {
      auto s = MeasurementSetting::computational("");
      s.pre_rotation = unitary();
      return s;
    });
    if (ex.measurements.size() != before) plan.overlaps.push_back(overlaps());
  };

  static std::mutex cache_mu;
  static std::unordered_map<std::size_t, std::vector<std::shared_ptr<const Matrix>>> group_cache;
  const std::vector<std::shared_ptr<const Matrix>>* group = nullptr;
  if (options.ensemble == SfeEnsemble::Clifford && nq <= 2) {
    std::lock_guard lock(cache_mu);
    auto& g = group_cache[nq];
    if (g.empty())
      for (const auto& u : clifford_group_dense(nq)) g.push_back(std::make_shared<const Matrix>(u));
    group = &g;
  }

  for (std::uint64_t i = 0; i < n; ++i) {
    if (options.ensemble == SfeEnsemble::Haar) {
      const Matrix u = sample_haar_unitary(rng, d);
      add("sfe:haar:" + hex(seed) + ":" + std::to_string(i), [&] { return std::make_shared<const Matrix>(u); },
          [&] { return dense_overlaps(u); });
    } else if (group) {
      const std::size_t idx = rng.index(group->size());
      const auto& c = clifford_group(nq)[idx];
      add("sfe:c" + std::to_string(nq) + ":" + std::to_string(idx), [&] { return (*group)[idx]; },
          [&] {
            if (!stab) return dense_overlaps(*(*group)[idx]);
            std::vector<double> ov(d);
            for (std::size_t x = 0; x < d; ++x)
              ov[x] = stabilizer_overlap(std::get<StabilizerGroup>(target), c, index_to_bits(x, nq));
            return ov;
          });
    } else {
      const CliffordElement c = sample_clifford(rng, nq);
      add("sfe:c:" + string_tag(c.key()), [&] { return std::make_shared<const Matrix>(clifford_to_dense(c)); },
          [&] {
            if (!stab) return dense_overlaps(clifford_to_dense(c));
            std::vector<double> ov(d);
            for (std::size_t x = 0; x < d; ++x)
              ov[x] = stabilizer_overlap(std::get<StabilizerGroup>(target), c, index_to_bits(x, nq));
            return ov;
          });
    }
  }
  return plan;
}

SfeResult analyze_sfe(const SfePlan& plan, const std::vector<ShotBatch>& batches) {
  const auto outcomes = ordered_outcomes(plan.experiment, batches);
  const auto& seq = plan.experiment.sequence;
  SfeResult r;
  r.fhat.resize(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& ov = plan.overlaps[seq[i]];
    const double d = static_cast<double>(ov.size());
    r.fhat[i] = (d + 1.0) * ov[outcomes[i]] - 1.0;
  }
  r.mean = mean(r.fhat);
  r.variance = variance(r.fhat);
  r.estimate.value = median_of_means(r.fhat, plan.n_groups);
  r.estimate.epsilon = plan.spec.epsilon;
  r.estimate.delta = plan.spec.delta;
  r.estimate.n_samples_used = r.fhat.size();
  r.estimate.method = plan.experiment.protocol;
  r.estimate.std_error = standard_error(r.fhat);
  return r;
}

SfeResult sfe(MeasurementDevice& device, const FidelityTarget& target, const ConfidenceSpec& spec,
              const SfeOptions& options, std::uint64_t seed) {
  if ((std::size_t{1} << target_qubits(target)) != device.dim())
    throw DimensionMismatch("sfe: target and device dimensions differ");
  const auto plan = plan_sfe(target, spec, options, seed, device.is_iid());
  return analyze_sfe(plan, execute(device, plan.experiment));
}

// ---------------------------------------------------------------------------
// RB

namespace {

struct DecayFunctor : Eigen::DenseFunctor<double> {
  const std::vector<double>& m;
  const std::vector<double>& y;

  DecayFunctor(const std::vector<double>& lengths, const std::vector<double>& values)
      : Eigen::DenseFunctor<double>(3, static_cast<int>(values.size())), m(lengths), y(values) {}

  int operator()(const InputType& x, ValueType& f) const {
    for (std::size_t i = 0; i < y.size(); ++i)
      f[static_cast<Eigen::Index>(i)] = x[0] * std::pow(x[2], m[i]) + x[1] - y[i];
    return 0;
  }
  int df(const InputType& x, JacobianType& j) const {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      j(r, 0) = std::pow(x[2], m[i]);
      j(r, 1) = 1.0;
      j(r, 2) = m[i] > 0.0 ? x[0] * m[i] * std::pow(x[2], m[i] - 1.0) : 0.0;
    }
    return 0;
  }
};

// Least-squares A, B for a fixed p.
void linear_ab(const std::vector<double>& m, const std::vector<double>& y, double p, double& a, double& b) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(y.size()), 2);
  Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = std::pow(p, m[i]);
    x(static_cast<Eigen::Index>(i), 1) = 1.0;
    v[static_cast<Eigen::Index>(i)] = y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < 2) {
    a = 0.0;
    b = v.mean();
    return;
  }
  const Eigen::VectorXd sol = qr.solve(v);
  a = sol[0];
  b = sol[1];
}

}  // namespace

RbFit fit_rb_decay(const std::vector<std::size_t>& lengths, const std::vector<double>& survival) {
  if (lengths.size() != survival.size()) throw DimensionMismatch("fit_rb_decay: lengths and values differ in size");
  if (lengths.size() < 3) throw InvalidInput("fit_rb_decay: need at least 3 sequence lengths");
  for (std::size_t i = 1; i < lengths.size(); ++i)
    if (lengths[i] <= lengths[i - 1]) throw InvalidInput("fit_rb_decay: lengths must be strictly increasing");
  for (double y : survival)
    if (!std::isfinite(y)) throw InvalidInput("fit_rb_decay: non-finite survival value");

  const std::size_t L = lengths.size();
  std::vector<double> m(L);
  for (std::size_t i = 0; i < L; ++i) m[i] = static_cast<double>(lengths[i]);
  RbFit fit;

  const auto [lo, hi] = std::minmax_element(survival.begin(), survival.end());
  if (*hi - *lo <= 1e-12) {
    fit.a = 0.0;
    fit.b = survival.front();
    fit.p = 1.0;
    fit.residuals.assign(L, 0.0);
    fit.converged = true;
    return fit;
  }

  // Start: B0 from the tail, A0 from the first point, p0 from a log-linear fit of y - B0.
  const std::size_t tail = std::max<std::size_t>(1, L / 4);
  double b0 = 0.0;
  for (std::size_t i = L - tail; i < L; ++i) b0 += survival[i];
  b0 /= static_cast<double>(tail);
  const double a0 = survival.front() - b0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (std::size_t i = 0; i < L; ++i) {
    const double r = (survival[i] - b0) / (a0 == 0.0 ? 1.0 : a0);
    if (r <= 1e-12) continue;
    const double ly = std::log(r);
    sx += m[i];
    sy += ly;
    sxx += m[i] * m[i];
    sxy += m[i] * ly;
    ++used;
  }
  double p0 = 0.9;
  if (used >= 2 && used * sxx - sx * sx > 0.0) p0 = std::exp((used * sxy - sx * sy) / (used * sxx - sx * sx));
  p0 = std::clamp(p0, 0.05, 0.999);

  DecayFunctor functor(m, survival);
  Eigen::LevenbergMarquardt<DecayFunctor> lm(functor);
  lm.setMaxfev(2000);
  Eigen::VectorXd x(3);
  x << a0, b0, p0;
  const auto status = lm.minimize(x);
  fit.evaluations = static_cast<int>(lm.nfev());
  using namespace Eigen::LevenbergMarquardtSpace;
  fit.converged = status == RelativeReductionTooSmall || status == RelativeErrorTooSmall ||
                  status == RelativeErrorAndReductionTooSmall || status == CosinusTooSmall ||
                  status == FtolTooSmall || status == XtolTooSmall || status == GtolTooSmall;
  fit.a = x[0];
  fit.b = x[1];
  fit.p = x[2];
  if (!std::isfinite(fit.p) || !std::isfinite(fit.a) || !std::isfinite(fit.b)) fit.converged = false;
  if (fit.converged && (fit.p < 0.0 || fit.p > 1.0)) {
    fit.p = std::clamp(fit.p, 0.0, 1.0);
    linear_ab(m, survival, fit.p, fit.a, fit.b);
  }

  fit.residuals.resize(L);
  double ss = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    fit.residuals[i] = survival[i] - (fit.a * std::pow(fit.p, m[i]) + fit.b);
    ss += fit.residuals[i] * fit.residuals[i];
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(L));
  if (!fit.converged) {
    throw ProtocolFailure("rb: decay fit did not converge (status " + std::to_string(static_cast<int>(status)) +
                          ", residual rms " + std::to_string(fit.residual_rms) + ")");
  }

  if (L > 3) {
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(L), 3);
    Eigen::VectorXd xp(3);
    xp << fit.a, fit.b, fit.p;
    functor.df(xp, jac);
    const Eigen::Matrix3d info = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(info);
    if (lu.isInvertible()) {
      const double s2 = ss / static_cast<double>(L - 3);
      fit.p_std_error = std::sqrt(std::max(0.0, s2 * lu.inverse()(2, 2)));
    }
  }
  return fit;
}

RbPlan plan_rb(std::size_t n_qubits, const RbOptions& options, std::uint64_t seed,
               const std::optional<CliffordElement>& interleaved, const std::string& interleaved_id) {
  if (n_qubits == 0 || n_qubits > 6) throw InvalidInput("rb: 1 to 6 qubits");
  if (options.lengths.empty()) throw InvalidInput("rb: no sequence lengths");
  for (std::size_t i = 1; i < options.lengths.size(); ++i)
    if (options.lengths[i] <= options.lengths[i - 1]) throw InvalidInput("rb: lengths must be strictly increasing");
  if (options.sequences_per_length == 0 || options.shots_per_sequence == 0 ||
      options.sequences_per_length * options.shots_per_sequence < 10)
    throw InvalidInput("rb: need at least 10 shots per length (K * s)");
  if (interleaved && interleaved->num_qubits() != n_qubits) throw DimensionMismatch("rb: interleaved gate size");

  RbPlan plan;
  plan.options = options;
  plan.n_qubits = n_qubits;
  auto& ex = plan.experiment;
  ex.protocol = interleaved ? "rb_interleaved" : "rb_standard";
  ex.seed = seed;
  ex.planned_n = options.lengths.size() * options.sequences_per_length;
  const std::size_t d = std::size_t{1} << n_qubits;
  const auto input = zero_state(d);
  const auto target_gate =
      interleaved ? std::make_shared<const Matrix>(clifford_to_dense(*interleaved)) : std::shared_ptr<const Matrix>();
  const std::string tag = interleaved ? "int:" + string_tag(interleaved->key()) : std::string("ref");

  std::vector<std::shared_ptr<const Matrix>> group;
  if (n_qubits <= 2)
    for (const auto& u : clifford_group_dense(n_qubits)) group.push_back(std::make_shared<const Matrix>(u));
  const CliffordElement id = CliffordElement::identity(n_qubits);

  ex.measurements.resize(ex.planned_n);
  kernels::for_each_index(ex.planned_n, [&](std::size_t j) {
    const std::size_t li = j / options.sequences_per_length;
    const std::size_t q = j % options.sequences_per_length;
    const std::size_t len = options.lengths[li];
    SeededRng rng(seed, mix_seed(kDrawStream, j));
    CliffordElement total = id;
    std::vector<Gate> gates;
    gates.reserve(interleaved ? 2 * len + 1 : len + 1);
    for (std::size_t g = 0; g < len; ++g) {
      if (!group.empty()) {
        const std::size_t idx = rng.index(group.size());
        total = total.then(clifford_group(n_qubits)[idx]);
        gates.push_back(Gate{"clifford", group[idx]});
      } else {
        const CliffordElement c = sample_clifford(rng, n_qubits);
        total = total.then(c);
        gates.push_back(Gate{"clifford", std::make_shared<const Matrix>(clifford_to_dense(c))});
      }
      if (interleaved) {
        total = total.then(*interleaved);
        gates.push_back(Gate{interleaved_id, target_gate});
      }
    }
    const CliffordElement inv = total.inverse();
    if (!(total.then(inv) == id)) throw std::logic_error("rb: sequence does not compose to the identity");
    gates.push_back(Gate{"clifford", std::make_shared<const Matrix>(clifford_to_dense(inv))});

    auto& m = ex.measurements[j];
    m.setting = MeasurementSetting::computational("rb:" + tag + ":" + hex(seed) + ":m" + std::to_string(len) + ":" +
                                                  std::to_string(q));
    m.setting.input_state = input;
    m.setting.gates = std::move(gates);
    m.shots = options.shots_per_sequence;
    m.stream = mix_seed(seed, j);
    m.first_shot = j * options.shots_per_sequence;
  });
  return plan;
}

RbResult analyze_rb(const RbPlan& plan, const std::vector<ShotBatch>& batches) {
  check_batches(plan.experiment, batches);
  const auto& o = plan.options;
  const std::size_t K = o.sequences_per_length;
  RbResult r;
  auto& c = r.curve;
  c.lengths = o.lengths;
  for (std::size_t li = 0; li < o.lengths.size(); ++li) {
    std::vector<double> s(K);
    for (std::size_t q = 0; q < K; ++q) {
      const auto& b = batches[li * K + q];
      s[q] = static_cast<double>(b.counts[0]) / static_cast<double>(b.shots());
    }
    c.survival.push_back(mean(s));
    c.std_error.push_back(K > 1 ? standard_error(s) : 0.0);
    c.shots.push_back(K * o.shots_per_sequence);
  }
  c.fit = fit_rb_decay(c.lengths, c.survival);

  const double d = std::ldexp(1.0, static_cast<int>(plan.n_qubits));
  r.p.value = c.fit.p;
  r.p.std_error = c.fit.p_std_error;
  r.p.epsilon = 3.0 * c.fit.p_std_error;
  r.p.delta = 0.0027;
  r.p.n_samples_used = plan.experiment.total_shots();
  r.p.method = "rb_fit";
  r.agf = r.p;
  r.agf.value = (1.0 - 1.0 / d) * c.fit.p + 1.0 / d;
  r.agf.std_error = (1.0 - 1.0 / d) * c.fit.p_std_error;
  r.agf.epsilon = 3.0 * r.agf.std_error;
  r.agf.method = "rb_agf";
  return r;
}

RbResult rb_standard(MeasurementDevice& device, const RbOptions& options, std::uint64_t seed) {
  const auto plan = plan_rb(qubit_count(device.dim()), options, seed);
  return analyze_rb(plan, execute(device, plan.experiment));
}

InterleavedResult rb_interleaved(MeasurementDevice& device, const CliffordElement& target, const RbOptions& options,
                                 const UnitaritySource& unitarity, std::uint64_t seed, const std::string& gate_id) {
  const std::size_t n = qubit_count(device.dim());
  const auto ref_plan = plan_rb(n, options, seed);
  const auto int_plan = plan_rb(n, options, mix_seed(seed, 1), target, gate_id);
  InterleavedResult r;
  r.reference = analyze_rb(ref_plan, execute(device, ref_plan.experiment));
  r.interleaved = analyze_rb(int_plan, execute(device, int_plan.experiment));

  const double p_ref = r.reference.p.value;
  const double p_int = r.interleaved.p.value;
  if (unitarity.kind == UnitaritySource::Kind::Oracle) {
    r.unitarity = unitarity.value;
  } else {
    if (!(unitarity.value >= 0.0)) throw InvalidInput("rb_interleaved: assumed excess coherence must be >= 0");
    r.unitarity = std::min(1.0, p_ref * p_ref + unitarity.value);
  }
  if (!(r.unitarity > 0.0 && r.unitarity <= 1.0 + 1e-12)) throw InvalidInput("rb_interleaved: unitarity must lie in (0, 1]");

  // Fitted parameters above sqrt(u) are inconsistent with the unitarity; project them onto the bound.
  const double cap = std::sqrt(r.unitarity);
  const double p_y = std::min(p_ref, cap);
  const double p_xy = std::min(p_int, cap);
  const auto bound = composite_param_bound(p_xy, p_y, r.unitarity);
  r.center = bound.center;
  r.systematic_halfwidth = bound.halfwidth;
  const double sx = r.interleaved.p.std_error * p_y / r.unitarity;
  const double sy = r.reference.p.std_error * p_xy / r.unitarity;
  r.statistical_halfwidth = 3.0 * std::sqrt(sx * sx + sy * sy);
  r.halfwidth = r.systematic_halfwidth + r.statistical_halfwidth;
  r.uninformative = r.halfwidth > 0.5;

  const double d = static_cast<double>(device.dim());
  r.agf.value = (1.0 - 1.0 / d) * r.center + 1.0 / d;
  r.agf.epsilon = (1.0 - 1.0 / d) * r.halfwidth;
  r.agf.delta = 0.0027;
  r.agf.std_error = (1.0 - 1.0 / d) * r.statistical_halfwidth / 3.0;
  r.agf.n_samples_used = r.reference.p.n_samples_used + r.interleaved.p.n_samples_used;
  r.agf.method = "rb_interleaved_agf";
  return r;
}

// ---------------------------------------------------------------------------
// XEB

std::uint64_t xeb_planned_shots(const ConfidenceSpec& spec, std::size_t d) {
  spec.validate();
  if (d < 2) throw InvalidInput("xeb: dimension must be at least 2");
  const double e2 = std::exp(2.0);
  const double l = std::log(2.0 * static_cast<double>(d) / spec.delta);
  return ceil_count(e2 / (2.0 * spec.epsilon * spec.epsilon) * l * l * std::log(2.0 / spec.delta));
}

std::vector<double> ideal_distribution(const Matrix& u) {
  if (u.rows() != u.cols() || u.rows() == 0) throw InvalidInput("xeb: circuit must be a square matrix");
  std::vector<double> p(static_cast<std::size_t>(u.rows()));
  for (Eigen::Index x = 0; x < u.rows(); ++x) p[static_cast<std::size_t>(x)] = std::norm(u(x, 0));
  return p;
}

XebPlan plan_xeb(const XebCircuit& circuit, std::uint64_t shots, XebEstimator estimator, std::uint64_t seed) {
  if (!circuit.unitary) throw InvalidInput("xeb: circuit without a unitary");
  if (circuit.id.empty()) throw InvalidInput("xeb: circuit id must not be empty");
  const std::size_t d = static_cast<std::size_t>(circuit.unitary->rows());
  const std::size_t n = qubit_count(d);
  if (n > 12) throw InvalidInput("xeb: at most 12 qubits");
  if (shots == 0) throw InvalidInput("xeb: shots must be positive");
  if (!is_unitary(*circuit.unitary, tol::kUnitary)) throw InvalidInput("xeb: circuit matrix is not unitary");
  XebPlan plan;
  plan.estimator = estimator;
  plan.ideal = ideal_distribution(*circuit.unitary);
  auto& ex = plan.experiment;
  ex.protocol = estimator == XebEstimator::Linear ? "xeb_linear" : "xeb_log";
  ex.seed = seed;
  ex.planned_n = shots;
  PlanBuilder b(ex, true);
  b.draw("xeb:" + circuit.id, shots, false, [&] {
    auto s = MeasurementSetting::computational("");
    s.gates = {Gate{circuit.id, circuit.unitary}};
    return s;
  });
  return plan;
}

XebResult analyze_xeb(const XebPlan& plan, const std::vector<ShotBatch>& batches) {
  check_batches(plan.experiment, batches);
  const auto& counts = batches.front().counts;
  const std::size_t d = plan.ideal.size();
  if (counts.size() != d) throw InvalidInput("xeb: outcome count mismatch");
  const auto m = batches.front().shots();
  XebResult r;
  r.estimate.n_samples_used = m;
  r.estimate.method = plan.experiment.protocol;

  double shift = 0.0;
  bool shift_finite = true;
  for (double p : plan.ideal) {
    if (p <= 0.0) shift_finite = false;
    else shift -= std::log(p);
  }
  r.cross_entropy_shift = shift_finite ? shift / static_cast<double>(d) : std::numeric_limits<double>::infinity();

  std::vector<double> v(d), v2(d);
  if (plan.estimator == XebEstimator::Linear) {
    for (std::size_t x = 0; x < d; ++x) v[x] = static_cast<double>(d) * plan.ideal[x] - 1.0;
  } else {
    for (std::size_t x = 0; x < d; ++x) {
      if (plan.ideal[x] <= 0.0) {
        if (counts[x] > 0) r.infinite_cross_entropy = true;
        v[x] = 0.0;
      } else {
        v[x] = -std::log(plan.ideal[x]);
      }
    }
  }
  for (std::size_t x = 0; x < d; ++x) v2[x] = v[x] * v[x];
  const double m1 = kernels::count_weighted_mean(counts, v);
  const double m2 = kernels::count_weighted_mean(counts, v2);
  r.estimate.std_error = m > 1 ? std::sqrt(std::max(0.0, m2 - m1 * m1) / static_cast<double>(m - 1)) : 0.0;
  r.estimate.epsilon = 3.0 * r.estimate.std_error;
  r.estimate.delta = 0.0027;
  if (r.infinite_cross_entropy) {
    r.estimate.value = std::numeric_limits<double>::infinity();
    r.d_xe = -std::numeric_limits<double>::infinity();
  } else {
    r.estimate.value = m1;
    if (plan.estimator == XebEstimator::Log) r.d_xe = r.cross_entropy_shift - m1;
  }
  return r;
}

XebResult xeb(MeasurementDevice& device, const XebCircuit& circuit, std::uint64_t shots, XebEstimator estimator,
              std::uint64_t seed) {
  if (!circuit.unitary || static_cast<std::size_t>(circuit.unitary->rows()) != device.dim())
    throw DimensionMismatch("xeb: circuit and device dimensions differ");
  const auto plan = plan_xeb(circuit, shots, estimator, seed);
  return analyze_xeb(plan, execute(device, plan.experiment));
}

PorterThomasReport porter_thomas_check(const Matrix& u) {
  const auto p = ideal_distribution(u);
  const std::size_t d = p.size();
  const double dd = static_cast<double>(d);
  std::vector<double> v(d);
  for (std::size_t x = 0; x < d; ++x) v[x] = dd * p[x];
  std::sort(v.begin(), v.end());
  PorterThomasReport r;
  for (std::size_t i = 0; i < d; ++i) {
    const double f = 1.0 - std::exp(-v[i]);
    r.ks_statistic = std::max({r.ks_statistic, static_cast<double>(i + 1) / dd - f, f - static_cast<double>(i) / dd});
    r.moments[0] += v[i];
    r.moments[1] += v[i] * v[i];
    r.moments[2] += v[i] * v[i] * v[i];
  }
  for (auto& m : r.moments) m /= dd;
  r.expected_moments = {1.0, 2.0 * dd / (dd + 1.0), 6.0 * dd * dd / ((dd + 1.0) * (dd + 2.0))};
  r.passes = r.ks_statistic < 0.05;
  return r;
}

// ---------------------------------------------------------------------------

Verdict certify_from_estimate(const Estimate& est, double epsilon, ThresholdPolicy policy) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("certify_from_estimate: epsilon must lie in (0, 1)");
  const double threshold = policy == ThresholdPolicy::Infidelity ? epsilon : 0.5 * epsilon * epsilon;
  Verdict v;
  v.decision = est.value >= 1.0 - threshold ? Verdict::Decision::Accept : Verdict::Decision::Reject;
  v.epsilon = epsilon;
  v.delta = est.delta;
  v.n_used = est.n_samples_used;
  v.n_planned = est.n_samples_used;
  v.protocol = "threshold:" + est.method;
  v.distance = policy == ThresholdPolicy::Infidelity ? "infidelity" : "trace_distance";
  v.infidelity_threshold = threshold;
  return v;
}

}  // namespace qcert
