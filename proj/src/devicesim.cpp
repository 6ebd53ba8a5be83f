#include "qcert/devicesim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "qcert/kernels.hpp"
#include "qcert/oracle.hpp"
#include "qcert/tolerances.hpp"

namespace qcert {

namespace {

// rho = lambda |psi><psi| + (1 - lambda) 1/d while every map on the path is unitary or depolarizing;
// otherwise a dense density matrix.
struct StateRep {
  bool pure = true;
  Vector psi;
  double lambda = 1.0;
  Matrix rho;

  std::size_t dim() const { return static_cast<std::size_t>(pure ? psi.size() : rho.rows()); }

  void densify() {
    if (!pure) return;
    const auto d = static_cast<Eigen::Index>(psi.size());
    rho = lambda * (psi * psi.adjoint()) +
          ((1.0 - lambda) / static_cast<double>(d)) * Matrix::Identity(d, d);
    pure = false;
    psi.resize(0);
  }

  void apply_unitary(const Matrix& u) {
    if (u.rows() != static_cast<Eigen::Index>(dim())) throw DimensionMismatch("device: gate dimension mismatch");
    if (pure) {
      psi = u * psi;
    } else {
      rho = u * rho * u.adjoint();
    }
  }

  void apply_channel(const Channel& c) {
    if (c.dim_in() != dim()) throw DimensionMismatch("device: channel dimension mismatch");
    switch (c.kind()) {
      case Channel::Kind::Identity:
        return;
      case Channel::Kind::Unitary:
        apply_unitary(c.unitary_matrix());
        return;
      case Channel::Kind::Depolarizing:
        if (pure) {
          lambda *= c.depolarizing_parameter();
        } else {
          rho = c.apply(rho);
        }
        return;
      case Channel::Kind::Kraus:
        densify();
        rho = c.apply(rho);
        return;
    }
  }
};

std::vector<double> normalize_probs(std::vector<double> p) {
  double total = 0.0;
  for (auto& x : p) {
    if (!std::isfinite(x)) throw InvalidInput("device: non-finite outcome probability");
    x = std::max(0.0, x);
    total += x;
  }
  if (total <= 0.0) throw InvalidInput("device: outcome distribution vanished");
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace

namespace oracle {

cplx pauli_expectation(const PauliString& p, const Matrix& rho) {
  const std::size_t n = p.num_qubits();
  const std::size_t d = std::size_t{1} << n;
  if (static_cast<std::size_t>(rho.rows()) != d) throw DimensionMismatch("pauli_expectation: dimension");
  const std::size_t xm = bits_to_index(p.x_bits());
  const std::size_t zm = bits_to_index(p.z_bits());
  const cplx c = std::pow(cplx(0.0, 1.0), p.phase_exponent());
  // P|b'> = c (-1)^{z.b'} |b' ^ x>, so (P rho)_{bb} = c (-1)^{z.(b ^ x)} rho_{b ^ x, b}.
  cplx acc = 0.0;
  for (std::size_t b = 0; b < d; ++b) {
    const std::size_t bp = b ^ xm;
    const double s = (std::popcount(zm & bp) & 1) ? -1.0 : 1.0;
    acc += s * rho(static_cast<Eigen::Index>(bp), static_cast<Eigen::Index>(b));
  }
  return c * acc;
}

}  // namespace oracle

void DeviceConfig::validate() const {
  if (n_qubits == 0 || n_qubits > 14) throw InvalidInput("device: n_qubits must lie in [1, 14]");
  const std::size_t d = dim();
  if (!(drift_rate >= 0.0 && drift_rate <= 1.0)) throw InvalidInput("device: drift_rate must lie in [0, 1]");
  if (const auto* s = std::get_if<StabilizerGroup>(&target)) {
    if (s->num_qubits() != n_qubits) throw DimensionMismatch("device: stabilizer target qubit count");
  } else if (const auto* v = std::get_if<Vector>(&target)) {
    if (static_cast<std::size_t>(v->size()) != d) throw DimensionMismatch("device: target vector dimension");
    PureState check(*v);
  } else {
    const auto& m = std::get<Matrix>(target);
    if (static_cast<std::size_t>(m.rows()) != d) throw DimensionMismatch("device: target matrix dimension");
    DensityMatrix check(m);
  }
  noise.validate(d);
}

SimulatedDevice::SimulatedDevice(DeviceConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (const auto* s = std::get_if<StabilizerGroup>(&cfg_.target)) {
    target_vector_ = s->state_vector();
    target_pure_ = true;
  } else if (const auto* v = std::get_if<Vector>(&cfg_.target)) {
    target_vector_ = *v;
    target_pure_ = true;
  }
}

std::vector<double> SimulatedDevice::compute(const MeasurementSetting& setting, bool mixed_input) const {
  const std::size_t d = dim();
  StateRep st;
  if (mixed_input) {
    st.psi = Vector::Zero(static_cast<Eigen::Index>(d));
    st.psi[0] = 1.0;
    st.lambda = 0.0;
  } else if (setting.input_state) {
    if (static_cast<std::size_t>(setting.input_state->rows()) != d)
      throw DimensionMismatch("device: input state dimension for setting '" + setting.id + "'");
    st.pure = false;
    st.rho = *setting.input_state;
  } else if (target_pure_) {
    st.psi = target_vector_;
  } else {
    st.pure = false;
    st.rho = std::get<Matrix>(cfg_.target);
  }

  st.apply_channel(cfg_.noise.prep_error);
  for (const auto& g : setting.gates) {
    if (!g.unitary) throw InvalidInput("device: gate '" + g.id + "' has no unitary");
    st.apply_unitary(*g.unitary);
    st.apply_channel(cfg_.noise.noise_for(g.id));
  }
  if (setting.pre_rotation) st.apply_unitary(*setting.pre_rotation);
  // Measurement noise acts on the effects as the adjoint map; Tr[M^dagger(E) rho] = Tr[E M(rho)].
  st.apply_channel(cfg_.noise.meas_error);

  switch (setting.kind) {
    case MeasurementSetting::Kind::ComputationalBasis: {
      std::vector<double> p(d);
      if (st.pure) {
        const double floor = (1.0 - st.lambda) / static_cast<double>(d);
        for (std::size_t i = 0; i < d; ++i) p[i] = st.lambda * std::norm(st.psi[static_cast<Eigen::Index>(i)]) + floor;
      } else {
        for (std::size_t i = 0; i < d; ++i) p[i] = st.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
      }
      return normalize_probs(std::move(p));
    }
    case MeasurementSetting::Kind::Pauli: {
      const PauliString& pauli = *setting.pauli;
      if ((std::size_t{1} << pauli.num_qubits()) != d) throw DimensionMismatch("device: Pauli measurement size");
      double e;
      if (st.pure) {
        e = st.lambda * st.psi.dot(pauli.apply(st.psi)).real();
        if (pauli.is_identity()) e += (1.0 - st.lambda) * pauli.coefficient().real();
      } else {
        e = oracle::pauli_expectation(pauli, st.rho).real();
      }
      e = std::clamp(e, -1.0, 1.0);
      return normalize_probs({0.5 * (1.0 + e), 0.5 * (1.0 - e)});
    }
    case MeasurementSetting::Kind::Povm: {
      if (!setting.povm || setting.povm->dim() != d) throw DimensionMismatch("device: POVM dimension");
      st.densify();
      return normalize_probs(setting.povm->probabilities(st.rho));
    }
  }
  return {};
}

std::vector<double> SimulatedDevice::exact_probabilities(const MeasurementSetting& setting) const {
  return compute(setting, false);
}

std::vector<double> SimulatedDevice::mixed_probabilities(const MeasurementSetting& setting) const {
  return compute(setting, true);
}

std::shared_ptr<const SimulatedDevice::Distribution> SimulatedDevice::distribution(const MeasurementSetting& setting) {
  {
    std::shared_lock lock(mu_);
    const auto it = cache_.find(setting.id);
    if (it != cache_.end()) return it->second;
  }
  auto dist = std::make_shared<Distribution>();
  dist->probs = compute(setting, false);
  dist->cdf = kernels::cumulative(dist->probs);
  if (!is_iid()) dist->mixed_cdf = kernels::cumulative(compute(setting, true));
  dist->labels = setting_labels(setting, dim());
  if (dist->labels->size() != dist->probs.size()) throw InvalidInput("device: label count differs from outcome count");
  std::unique_lock lock(mu_);
  auto [it, inserted] = cache_.emplace(setting.id, std::move(dist));
  return it->second;
}

ShotBatch SimulatedDevice::measure(const MeasurementSetting& setting, std::uint64_t shots, std::uint64_t stream,
                                   std::uint64_t first_shot) {
  if (shots == 0 || shots > kMaxShotsPerCall) throw InvalidInput("device: shots per call must lie in [1, 1e8]");
  const auto dist = distribution(setting);
  ShotBatch b;
  b.setting_id = setting.id;
  b.stream = stream;
  b.labels = dist->labels;
  if (is_iid()) {
    b.counts = kernels::sample_counts(dist->cdf, shots, cfg_.seed, stream);
  } else {
    b.counts.assign(dist->probs.size(), 0);
    SeededRng rng(cfg_.seed, stream);
    const double keep = 1.0 - cfg_.drift_rate;
    for (std::uint64_t t = 0; t < shots; ++t) {
      const double lambda = std::pow(keep, static_cast<double>(first_shot + t));
      const bool coherent = rng.uniform() < lambda;
      ++b.counts[kernels::inverse_cdf(coherent ? dist->cdf : dist->mixed_cdf, rng.uniform())];
    }
  }
  return b;
}

// ---------------------------------------------------------------------------

namespace oracle {

Channel run_gate_sequence(const NoiseModel& noise, const std::vector<Gate>& gates, std::size_t d, bool include_spam) {
  Channel total = include_spam ? noise.prep_error : Channel::identity(d);
  for (const auto& g : gates) {
    if (!g.unitary) throw InvalidInput("run_gate_sequence: gate '" + g.id + "' has no unitary");
    total = compose(noise.noise_for(g.id), compose(Channel::unitary(*g.unitary), total));
  }
  if (include_spam) total = compose(noise.meas_error, total);
  return total;
}

DensityMatrix target_state(const DeviceConfig& cfg) {
  if (const auto* s = std::get_if<StabilizerGroup>(&cfg.target)) return stabilizer_state_dense(*s);
  if (const auto* v = std::get_if<Vector>(&cfg.target)) return PureState(*v).density();
  return DensityMatrix(std::get<Matrix>(cfg.target));
}

DensityMatrix prepared_state(const DeviceConfig& cfg) { return cfg.noise.prep_error.apply(target_state(cfg)); }

std::vector<double> exact_probabilities(const SimulatedDevice& device, const MeasurementSetting& setting) {
  return device.exact_probabilities(setting);
}

}  // namespace oracle

}  // namespace qcert
