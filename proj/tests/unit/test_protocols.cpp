#include <doctest.h>

#include <functional>

#include "helpers.hpp"
#include "qcert/devicesim.hpp"
#include "qcert/oracle.hpp"
#include "qcert/protocols.hpp"

using namespace qcert;
using qcert::testing::dist;

namespace {

StabilizerGroup ghz3() { return StabilizerGroup::parse("XXX\nZZI\nIZZ"); }

DeviceConfig device_for(StabilizerGroup s, std::uint64_t seed = 1) {
  DeviceConfig cfg;
  cfg.n_qubits = s.num_qubits();
  cfg.noise = NoiseModel::noiseless(cfg.dim());
  cfg.target = std::move(s);
  cfg.seed = seed;
  return cfg;
}

// A device answering from a caller-supplied distribution; protocols only ever see this interface.
class MockDevice : public MeasurementDevice {
 public:
  MockDevice(std::size_t d, std::function<std::vector<double>(const MeasurementSetting&)> probs)
      : d_(d), probs_(std::move(probs)) {}
  std::size_t dim() const override { return d_; }
  bool is_iid() const override { return true; }
  ShotBatch measure(const MeasurementSetting& s, std::uint64_t shots, std::uint64_t stream, std::uint64_t) override {
    ShotBatch b;
    b.setting_id = s.id;
    b.stream = stream;
    b.labels = setting_labels(s, d_);
    const auto p = probs_(s);
    b.counts.assign(p.size(), 0);
    SeededRng rng(99, stream);
    for (std::uint64_t t = 0; t < shots; ++t) {
      double u = rng.uniform(), acc = 0.0;
      std::size_t k = 0;
      while (k + 1 < p.size() && u >= (acc += p[k])) ++k;
      ++b.counts[k];
    }
    return b;
  }

 private:
  std::size_t d_;
  std::function<std::vector<double>(const MeasurementSetting&)> probs_;
};

}  // namespace

TEST_CASE("observable estimation") {
  SimulatedDevice zero(device_for(StabilizerGroup::parse("Z")));
  const ConfidenceSpec spec{0.02, 0.05};
  CHECK(estimate_observable(zero, Matrix::Identity(2, 2), spec, 1).value == 1.0);
  CHECK(estimate_observable(zero, pauli_to_dense(PauliString::parse("Z")), spec, 1).value == 1.0);

  auto cfg = device_for(StabilizerGroup::parse("Z"));
  cfg.noise.prep_error = Channel::depolarizing(2, 0.8);
  SimulatedDevice noisy(cfg);
  const auto est = estimate_observable(noisy, pauli_to_dense(PauliString::parse("Z")), spec, 2);
  CHECK(std::abs(est.value - 0.8) <= spec.epsilon);
  CHECK(est.n_samples_used == hoeffding_n(2.0, spec));
}

TEST_CASE("minimax strategy spectrum") {
  CHECK(minimax_spectral_gap(1) == doctest::Approx(1.0));
  CHECK(minimax_spectral_gap(2) == doctest::Approx(2.0 / 3.0));
  const RealVector ev = hermitian_eigenvalues(minimax_operator(ghz3()));
  CHECK(ev[ev.size() - 2] == doctest::Approx(3.0 / 7.0).epsilon(1e-12));

  // Worst case along the lambda_2 eigenspace: pass probability 1 - nu eps.
  const double eps = 0.05;
  const Vector psi = ghz3().state_vector();
  const Vector phi = PauliString::parse("ZII").apply(psi);
  const Matrix rho = (1 - eps) * psi * psi.adjoint() + eps * phi * phi.adjoint();
  CHECK(hs_inner(minimax_operator(ghz3()), rho).real() == doctest::Approx(1.0 - minimax_spectral_gap(3) * eps));
}

TEST_CASE("direct state certification sample counts") {
  const ConfidenceSpec spec{0.05, 0.1};
  DirectCertOptions exact{CertStrategy::ExactPovm, {}, true};
  CHECK(direct_cert_sample_count(ghz3(), spec, exact) == 47);
  DirectCertOptions mm{CertStrategy::StabilizerMinimax, {}, true};
  CHECK(direct_cert_sample_count(ghz3(), spec, mm) == 93);

  // Custom strategy built from the minimax tests reproduces nu(Omega).
  DirectCertOptions custom{CertStrategy::Custom, {}, true};
  for (const auto& g : ghz3().elements()) {
    if (g.is_identity()) continue;
    custom.custom.push_back({0.5 * (Matrix::Identity(8, 8) + pauli_to_dense(g)), 1.0});
  }
  const double nu = minimax_spectral_gap(3);
  CHECK(direct_cert_sample_count(ghz3(), spec, custom) == static_cast<std::uint64_t>(std::ceil(std::log(10.0) / (nu * 0.05))));
  custom.custom.push_back({Matrix::Zero(8, 8), 1.0});  // Tr[Omega rho] < 1
  CHECK_THROWS(direct_cert_sample_count(ghz3(), spec, custom));
}

TEST_CASE("direct state certification verdicts") {
  const ConfidenceSpec spec{0.05, 0.1};
  SimulatedDevice clean(device_for(ghz3()));
  for (auto strategy : {CertStrategy::StabilizerMinimax, CertStrategy::ExactPovm}) {
    DirectCertOptions o{strategy, {}, true};
    int accepted = 0;
    for (std::uint64_t t = 0; t < 1000; ++t)
      if (direct_state_certify(clean, ghz3(), spec, o, t).accepted()) ++accepted;
    CHECK(accepted == 1000);
  }
  // Pure-state target through the exact POVM.
  const PureState ghz(ghz3().state_vector());
  CHECK(direct_state_certify(clean, ghz, spec, {CertStrategy::ExactPovm, {}, true}, 3).accepted());

  // Every test fails: adaptive mode stops at the first draw.
  MockDevice fail(8, [](const MeasurementSetting& s) {
    auto p = std::vector<double>(setting_labels(s, 8)->size(), 0.0);
    p[1] = 1.0;
    return p;
  });
  const auto v = direct_state_certify(fail, ghz3(), spec, {}, 4);
  CHECK_FALSE(v.accepted());
  CHECK(v.n_used == 1);
  CHECK(v.n_planned == 93);
  const auto batch = direct_state_certify(fail, ghz3(), spec, {CertStrategy::StabilizerMinimax, {}, false}, 4);
  CHECK(batch.n_used == 93);
}

TEST_CASE("planted state is rejected at the designed rate") {
  const ConfidenceSpec spec{0.05, 0.1};
  const Vector psi = ghz3().state_vector();
  const Vector phi = PauliString::parse("ZII").apply(psi);
  auto cfg = device_for(ghz3(), 7);
  cfg.target = Matrix(0.9 * psi * psi.adjoint() + 0.1 * phi * phi.adjoint());
  SimulatedDevice dev(cfg);
  int rejected = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t)
    if (!direct_state_certify(dev, ghz3(), spec, {}, static_cast<std::uint64_t>(t)).accepted()) ++rejected;
  const double expected = 1.0 - std::pow(1.0 - minimax_spectral_gap(3) * 0.1, 93);
  CHECK(std::abs(rejected / double(trials) - expected) < 3.0 * std::sqrt(expected * (1 - expected) / trials) + 1e-3);
}

TEST_CASE("aggregated and per-draw plans describe the same draws") {
  const ConfidenceSpec spec{0.05, 0.1};
  const auto agg = plan_direct_state(ghz3(), spec, {}, 5, true);
  const auto per = plan_direct_state(ghz3(), spec, {}, 5, false);
  REQUIRE(agg.experiment.sequence.size() == per.experiment.sequence.size());
  CHECK(per.experiment.measurements.size() == 93);
  CHECK(agg.experiment.total_shots() == per.experiment.total_shots());
  for (std::size_t i = 0; i < agg.experiment.sequence.size(); ++i)
    CHECK(agg.experiment.measurements[agg.experiment.sequence[i]].setting.id ==
          per.experiment.measurements[per.experiment.sequence[i]].setting.id);
  SimulatedDevice dev(device_for(ghz3()));
  CHECK(ordered_outcomes(agg.experiment, execute(dev, agg.experiment)).size() == 93);
}

TEST_CASE("direct process certification") {
  const ConfidenceSpec spec{0.05, 0.1};
  const auto cx = CliffordElement::hadamard(2, 0).then(CliffordElement::cnot(2, 0, 1));
  SimulatedDevice clean(device_for(StabilizerGroup::computational_zero(2)));
  int accepted = 0;
  for (std::uint64_t t = 0; t < 1000; ++t)
    if (direct_process_certify(clean, cx, spec, "target", true, t).accepted()) ++accepted;
  CHECK(accepted == 1000);

  // Entanglement infidelity 2 eps from a depolarized gate.
  const double p = 1.0 - 2.0 * spec.epsilon / (1.0 - 1.0 / 16.0);
  auto cfg = device_for(StabilizerGroup::computational_zero(2), 3);
  cfg.noise.overrides["target"] = Channel::depolarizing(4, p);
  SimulatedDevice noisy(cfg);
  const Channel gate = compose(Channel::depolarizing(4, p), Channel::unitary(clifford_to_dense(cx)));
  CHECK(1.0 - entanglement_fidelity(Channel::unitary(clifford_to_dense(cx)), gate) == doctest::Approx(0.1));
  int rejected = 0;
  for (std::uint64_t t = 0; t < 1000; ++t)
    if (!direct_process_certify(noisy, cx, spec, "target", true, 1000 + t).accepted()) ++rejected;
  CHECK(rejected >= 900);

  // Prepare-and-measure equivalence for every planned setting: Tr[(N (x) rho^T) Choi] = Tr[N U~(rho)].
  const auto plan = plan_direct_process(cx, "target", spec, false, 9);
  for (const auto& m : plan.experiment.measurements) {
    const Matrix& rho = *m.setting.input_state;
    const Matrix n = 0.5 * (Matrix::Identity(4, 4) + pauli_to_dense(*m.setting.pauli));
    const double lhs = (kron(n, Matrix(rho.transpose())) * gate.choi()).trace().real();
    const double rhs = hs_inner(n, gate.apply(rho)).real();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(noisy.exact_probabilities(m.setting)[0] == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(clean.exact_probabilities(m.setting)[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("direct fidelity estimation") {
  const ConfidenceSpec spec{0.05, 0.05};
  SimulatedDevice clean(device_for(ghz3()));
  CHECK(dfe(clean, ghz3(), spec, {DfeMode::WellConditioned, 1.0}, 1).value == 1.0);
  CHECK(dfe_ell(spec, {DfeMode::WellConditioned, 1.0}) == 2952);
  CHECK(dfe_ell(spec, {DfeMode::General, 1.0}) == 8000);

  // General mode on a non-stabilizer target: m_k from the characteristic function.
  SeededRng rng(2);
  const PureState haar = sample_haar_state(rng, 4);
  const ConfidenceSpec loose{0.1, 0.1};
  const auto plan = plan_dfe(haar, loose, {DfeMode::General, 1.0}, 3);
  const double ell = static_cast<double>(plan.ell);
  for (std::size_t i = 0; i < plan.experiment.measurements.size(); ++i) {
    const double e = plan.expectation[i];
    CHECK(plan.shots_per_draw[i] ==
          static_cast<std::uint64_t>(std::ceil(2.0 / (e * e * ell * 0.01) * std::log(2.0 / 0.1) - 1e-9)));
  }

  auto cfg = device_for(ghz3(), 4);
  cfg.noise.prep_error = Channel::depolarizing(8, 0.9);
  SimulatedDevice dev(cfg);
  int hits = 0;
  for (std::uint64_t t = 0; t < 1000; ++t)
    if (std::abs(dfe(dev, ghz3(), spec, {DfeMode::WellConditioned, 1.0}, t).value - 0.9125) <= spec.epsilon) ++hits;
  CHECK(hits >= 950);
}

TEST_CASE("shadow fidelity estimation") {
  const ConfidenceSpec spec{0.1, 0.05};
  const auto bell = StabilizerGroup::parse("XX\nZZ");
  SimulatedDevice clean(device_for(bell));
  const auto r = sfe(clean, bell, spec, {}, 1);
  CHECK(r.variance < 5.0);
  CHECK(std::abs(r.estimate.value - 1.0) <= spec.epsilon);
  CHECK(r.fhat.size() == 47952);

  // Haar ensemble on a non-stabilizer target.
  SeededRng rng(5);
  const PureState psi = sample_haar_state(rng, 4);
  auto cfg = device_for(StabilizerGroup::computational_zero(2), 6);
  cfg.target = psi.amplitudes();
  SimulatedDevice dev(cfg);
  SfeOptions haar;
  haar.ensemble = SfeEnsemble::Haar;
  haar.n_override = 4800;
  const auto h = sfe(dev, psi, spec, haar, 2);
  CHECK(std::abs(h.mean - 1.0) < 3.0 * std::sqrt(h.variance / static_cast<double>(h.fhat.size())));
}

TEST_CASE("rb decay fit") {
  const std::vector<std::size_t> m{1, 2, 4, 8, 16, 32, 64};
  std::vector<double> y;
  for (auto l : m) y.push_back(0.7 * std::pow(0.93, static_cast<double>(l)) + 0.25);
  const auto f = fit_rb_decay(m, y);
  CHECK(f.converged);
  CHECK(f.p == doctest::Approx(0.93).epsilon(1e-8));
  CHECK(f.a == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(f.b == doctest::Approx(0.25).epsilon(1e-8));

  const auto flat = fit_rb_decay(m, std::vector<double>(m.size(), 1.0));
  CHECK(flat.p == 1.0);
  CHECK(flat.a + flat.b == doctest::Approx(1.0));
}

TEST_CASE("standard rb") {
  RbOptions o;
  o.lengths = {1, 2, 4, 8, 16, 32, 64, 128};
  auto cfg = device_for(StabilizerGroup::computational_zero(2));
  SimulatedDevice clean(cfg);
  const auto r0 = rb_standard(clean, o, 1);
  CHECK(r0.p.value == doctest::Approx(1.0));
  CHECK(r0.curve.fit.a + r0.curve.fit.b == doctest::Approx(1.0));

  cfg.noise.gate_noise = Channel::depolarizing(4, 0.95);
  SimulatedDevice noisy(cfg);
  const auto r = rb_standard(noisy, o, 2);
  CHECK(std::abs(r.p.value - 0.95) <= 0.01);
  CHECK(r.agf.value == doctest::Approx(r.p.value + (1 - r.p.value) / 4));

  // Exact survival from the channel oracle: 3/4 p^{g} + 1/4 for a sequence of g noisy gates.
  const auto plan = plan_rb(2, o, 3);
  for (const auto& m : plan.experiment.measurements) {
    const Channel seq = oracle::run_gate_sequence(cfg.noise, m.setting.gates, 4);
    const double surv = hs_inner(qcert::testing::ket0_projector(4), seq.apply(*m.setting.input_state)).real();
    CHECK(surv == doctest::Approx(0.75 * std::pow(0.95, static_cast<double>(m.setting.gates.size())) + 0.25).epsilon(1e-10));
  }
}

TEST_CASE("interleaved rb") {
  RbOptions o;
  o.lengths = {1, 2, 4, 8, 16, 32};
  o.sequences_per_length = 20;
  o.shots_per_sequence = 1000;
  const auto cx = CliffordElement::cnot(2, 0, 1);

  auto cfg = device_for(StabilizerGroup::computational_zero(2));
  SimulatedDevice clean(cfg);
  const auto r0 = rb_interleaved(clean, cx, o, {UnitaritySource::Kind::Oracle, 1.0}, 1);
  CHECK(r0.center == doctest::Approx(1.0));
  CHECK(r0.halfwidth == doctest::Approx(0.0).epsilon(1e-9));

  const double q = 0.96;
  cfg.noise.gate_noise = Channel::depolarizing(4, q);
  SimulatedDevice same(cfg);
  const auto r = rb_interleaved(same, cx, o, {UnitaritySource::Kind::Oracle, q * q}, 2);
  CHECK(std::abs(r.center - q) <= r.halfwidth);
  CHECK(r.systematic_halfwidth < 0.05);

  const auto assumed = rb_interleaved(same, cx, o, {UnitaritySource::Kind::AssumedIncoherence, 0.0}, 2);
  CHECK(std::abs(assumed.center - q) <= assumed.halfwidth);
}

TEST_CASE("cross-entropy benchmarking") {
  SeededRng rng(1);
  const std::size_t n = 8, d = 256;
  const XebCircuit c{"u", std::make_shared<const Matrix>(sample_haar_unitary(rng, d))};
  const auto ideal = ideal_distribution(*c.unitary);
  double ideal_fx = 0.0;  // F_X(p_U, p_U) of this circuit
  for (double p : ideal) ideal_fx += static_cast<double>(d) * p * p;
  ideal_fx -= 1.0;

  auto cfg = device_for(StabilizerGroup::computational_zero(n));
  const double phi = 0.7;
  cfg.noise.gate_noise = Channel::depolarizing(d, phi);
  SimulatedDevice dev(cfg);
  const auto r = xeb(dev, c, 100000, XebEstimator::Linear, 2);
  CHECK(std::abs(r.estimate.value - phi * ideal_fx) < 3.0 * r.estimate.std_error);

  // Log estimator: d_XE is about 1 for ideal sampling and about 0 for uniform sampling.
  auto clean_cfg = device_for(StabilizerGroup::computational_zero(n), 3);
  SimulatedDevice clean(clean_cfg);
  CHECK(xeb(clean, c, 100000, XebEstimator::Log, 4).d_xe == doctest::Approx(1.0).epsilon(0.1));
  cfg.noise.gate_noise = Channel::depolarizing(d, 0.0);
  SimulatedDevice uniform(cfg);
  CHECK(std::abs(xeb(uniform, c, 100000, XebEstimator::Log, 5).d_xe) < 0.05);

  CHECK(xeb_planned_shots({0.05, 0.05}, 1024) == 614882);
}

TEST_CASE("porter-thomas check") {
  SeededRng rng(2);
  const auto pt = porter_thomas_check(sample_haar_unitary(rng, 1024));
  CHECK(pt.passes);
  CHECK(pt.moments[0] == doctest::Approx(1.0));
  CHECK(pt.moments[1] == doctest::Approx(2.0 * 1024 / 1025).epsilon(0.1));
  const auto id = porter_thomas_check(Matrix::Identity(64, 64));
  CHECK_FALSE(id.passes);
  CHECK(id.ks_statistic > 0.9);
}

TEST_CASE("certification from an estimate") {
  Estimate e;
  e.value = 1.0;
  CHECK(certify_from_estimate(e, 0.1, ThresholdPolicy::TraceDistance).accepted());
  CHECK(certify_from_estimate(e, 0.1, ThresholdPolicy::Infidelity).accepted());
  e.value = 1.0 - 0.01;  // 1 - eps^2 at eps = 0.1
  const auto v = certify_from_estimate(e, 0.1, ThresholdPolicy::TraceDistance);
  CHECK_FALSE(v.accepted());
  CHECK(*v.infidelity_threshold == doctest::Approx(0.005));

  // End to end: a state at trace distance 0.3 is rejected by the DFE certifier at eps = 0.2.
  const Vector psi = ghz3().state_vector();
  const Vector phi = PauliString::parse("ZII").apply(psi);
  auto cfg = device_for(ghz3(), 8);
  cfg.target = Matrix(0.7 * psi * psi.adjoint() + 0.3 * phi * phi.adjoint());
  SimulatedDevice dev(cfg);
  CHECK(trace_distance(PureState(psi).density(), oracle::prepared_state(cfg)) == doctest::Approx(0.3));
  int rejected = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const auto est = dfe(dev, ghz3(), {0.05, 0.05}, {DfeMode::WellConditioned, 1.0}, t);
    if (!certify_from_estimate(est, 0.2, ThresholdPolicy::TraceDistance).accepted()) ++rejected;
  }
  CHECK(rejected >= 190);
}
