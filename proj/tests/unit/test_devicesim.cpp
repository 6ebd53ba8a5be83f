#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "qcert/devicesim.hpp"
#include "qcert/oracle.hpp"

using namespace qcert;
using qcert::testing::dist;

namespace {

DeviceConfig one_qubit(const char* stabilizer) {
  DeviceConfig cfg;
  cfg.n_qubits = 1;
  cfg.target = StabilizerGroup::parse(stabilizer);
  cfg.noise = NoiseModel::noiseless(2);
  cfg.seed = 17;
  return cfg;
}

double freq0(const ShotBatch& b) { return static_cast<double>(b.counts[0]) / static_cast<double>(b.shots()); }

}  // namespace

TEST_CASE("prepare and measure") {
  SimulatedDevice zero(one_qubit("Z"));
  CHECK(freq0(zero.measure(MeasurementSetting::computational("z"), 1000, 1)) == 1.0);

  SimulatedDevice plus(one_qubit("X"));
  const auto b = plus.measure(MeasurementSetting::computational("z"), 100000, 1);
  CHECK(std::abs(freq0(b) - 0.5) < 3.0 * std::sqrt(0.25 / 100000));

  auto cfg = one_qubit("Z");
  cfg.noise.prep_error = Channel::depolarizing(2, 0.8);
  SimulatedDevice noisy(cfg);
  CHECK(noisy.exact_probabilities(MeasurementSetting::computational("z"))[0] == doctest::Approx(0.9));
  CHECK(oracle::exact_probabilities(noisy, MeasurementSetting::computational("z"))[0] == doctest::Approx(0.9));
}

TEST_CASE("pauli and povm settings") {
  SimulatedDevice plus(one_qubit("X"));
  const auto px = plus.exact_probabilities(MeasurementSetting::pauli_measurement("x", PauliString::parse("X")));
  CHECK(px[0] == doctest::Approx(1.0));
  const auto pm = plus.exact_probabilities(MeasurementSetting::pauli_measurement("-x", PauliString::parse("-X")));
  CHECK(pm[1] == doctest::Approx(1.0));
  auto povm = std::make_shared<const Povm>(Povm::binary(Matrix::Constant(2, 2, 0.5)));
  CHECK(plus.exact_probabilities(MeasurementSetting::povm_measurement("p", povm))[0] == doctest::Approx(1.0));
}

TEST_CASE("sampling is reproducible per stream") {
  SimulatedDevice a(one_qubit("X")), b(one_qubit("X"));
  const auto s = MeasurementSetting::computational("z");
  CHECK(a.measure(s, 5000, 3).counts == b.measure(s, 5000, 3).counts);
  CHECK(a.measure(s, 5000, 3).counts != a.measure(s, 5000, 4).counts);
}

TEST_CASE("gate sequences") {
  NoiseModel nm = NoiseModel::noiseless(2);
  nm.prep_error = Channel::depolarizing(2, 0.9);
  nm.meas_error = Channel::amplitude_damping(0.1);
  const auto spam_only = oracle::run_gate_sequence(nm, {}, 2);
  CHECK(dist(spam_only.choi(), compose(nm.meas_error, nm.prep_error).choi()) < 1e-12);

  SeededRng rng(1);
  const Matrix u = sample_haar_unitary(rng, 2);
  const std::vector<Gate> inv{{"u", std::make_shared<const Matrix>(u)},
                              {"udag", std::make_shared<const Matrix>(u.adjoint())}};
  CHECK(dist(oracle::run_gate_sequence(NoiseModel::noiseless(2), inv, 2).choi(), Channel::identity(2).choi()) < 1e-12);

  NoiseModel dep = NoiseModel::noiseless(2);
  dep.gate_noise = Channel::depolarizing(2, 0.9);
  const std::vector<Gate> ids(5, Gate{"i", std::make_shared<const Matrix>(Matrix::Identity(2, 2))});
  CHECK(dist(oracle::run_gate_sequence(dep, ids, 2).choi(), Channel::depolarizing(2, std::pow(0.9, 5)).choi()) < 1e-12);

  // Per-gate overrides.
  dep.overrides["t"] = Channel::identity(2);
  const std::vector<Gate> t{{"t", std::make_shared<const Matrix>(Matrix::Identity(2, 2))}};
  CHECK(dist(oracle::run_gate_sequence(dep, t, 2).choi(), Channel::identity(2).choi()) < 1e-12);
}

TEST_CASE("device probabilities match the dense oracle") {
  DeviceConfig cfg;
  cfg.n_qubits = 2;
  cfg.target = StabilizerGroup::parse("XX\nZZ");
  cfg.noise = NoiseModel::noiseless(4);
  cfg.noise.prep_error = Channel::amplitude_damping(0.2, 2);
  cfg.noise.gate_noise = Channel::depolarizing(4, 0.9);
  cfg.noise.meas_error = Channel::bit_flip(0.05, 2);
  SimulatedDevice dev(cfg);
  SeededRng rng(2);
  const Matrix u = sample_haar_unitary(rng, 4);
  auto s = MeasurementSetting::computational("g");
  s.gates.push_back({"g", std::make_shared<const Matrix>(u)});
  const auto got = dev.exact_probabilities(s);
  const Matrix rho = oracle::prepared_state(cfg).matrix();
  const Matrix out = cfg.noise.meas_error.apply(cfg.noise.gate_noise.apply(Matrix(u * rho * u.adjoint())));
  for (int i = 0; i < 4; ++i) CHECK(got[static_cast<std::size_t>(i)] == doctest::Approx(out(i, i).real()).epsilon(1e-12));
}

TEST_CASE("drift decays toward the maximally mixed state") {
  auto cfg = one_qubit("Z");
  cfg.drift_rate = 1e-5;
  SimulatedDevice dev(cfg);
  CHECK_FALSE(dev.is_iid());
  const auto s = MeasurementSetting::computational("z");
  const auto early = dev.measure(s, 1000, 1, 0);
  const auto late = dev.measure(s, 20000, 2, 10000000);
  CHECK(freq0(early) > 0.95);
  CHECK(std::abs(freq0(late) - 0.5) < 0.02);
}

TEST_CASE("config validation") {
  DeviceConfig cfg;
  cfg.n_qubits = 2;
  cfg.target = StabilizerGroup::parse("Z");
  CHECK_THROWS_AS(SimulatedDevice{cfg}, DimensionMismatch);
  cfg.target = StabilizerGroup::computational_zero(2);
  cfg.noise = NoiseModel::noiseless(4);
  cfg.drift_rate = 2.0;
  CHECK_THROWS_AS(SimulatedDevice{cfg}, InvalidInput);
  cfg.drift_rate = 0.0;
  SimulatedDevice dev(cfg);
  CHECK_THROWS(dev.measure(MeasurementSetting::computational("z"), 0, 1));
}

TEST_CASE("records round trip") {
  SimulatedDevice dev(one_qubit("X"));
  RecordingDevice rec(dev);
  const auto s = MeasurementSetting::computational("z");
  const auto b1 = rec.measure(s, 100, 7);
  const auto b2 = rec.measure(s, 100, 8);
  std::stringstream io;
  for (const auto& b : rec.batches()) write_batch_jsonl(io, b);
  RecordDevice replay(read_records_jsonl(io), 2);
  CHECK(replay.measure(s, 100, 8).counts == b2.counts);
  CHECK(replay.measure(s, 100, 7).counts == b1.counts);

  std::stringstream bad("{\"setting_id\": \"z\", \"counts\": {\"0\": 1}}\n{not json\n");
  CHECK_THROWS(read_records_jsonl(bad));
}
