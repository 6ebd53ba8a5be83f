#include "qcert/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "qcert/devicesim.hpp"
#include "qcert/kernels.hpp"
#include "qcert/protocols.hpp"
#include "qcert/suites.hpp"

namespace qcert::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config access with field paths in the error messages.

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError("config: '" + (path.empty() ? "<root>" : path) + "' must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("config: missing field '" + join(path, key) + "'");
  return *it;
}

const json* optional_field(const json& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError("config: field '" + where + "' must be a number");
  return v.get<double>();
}

double number_field(const json& obj, const std::string& key, const std::string& path) {
  return number(require(obj, key, path), join(path, key));
}

double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
  const json* v = optional_field(obj, key);
  return v ? number(*v, join(path, key)) : fallback;
}

std::uint64_t count(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) throw ConfigError("config: field '" + where + "' must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::uint64_t count_or(const json& obj, const std::string& key, const std::string& path, std::uint64_t fallback) {
  const json* v = optional_field(obj, key);
  return v ? count(*v, join(path, key)) : fallback;
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError("config: field '" + where + "' must be a string");
  return v.get<std::string>();
}

std::string text_or(const json& obj, const std::string& key, const std::string& path, const std::string& fallback) {
  const json* v = optional_field(obj, key);
  return v ? text(*v, join(path, key)) : fallback;
}

bool flag_or(const json& obj, const std::string& key, const std::string& path, bool fallback) {
  const json* v = optional_field(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError("config: field '" + join(path, key) + "' must be true or false");
  return v->get<bool>();
}

cplx complex_entry(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError("config: '" + where + "' must be a number or a [re, im] pair");
}

Matrix matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError("config: '" + where + "' must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  if (!v[0].is_array() || v[0].empty()) throw ConfigError("config: '" + where + "[0]' must be a nonempty row");
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = v[static_cast<std::size_t>(r)];
    const std::string rw = where + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError("config: '" + rw + "' must have " + std::to_string(cols) + " entries");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = complex_entry(row[static_cast<std::size_t>(c)], rw + "[" + std::to_string(c) + "]");
  }
  return m;
}

Vector vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError("config: '" + where + "' must be a nonempty array");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = complex_entry(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

Channel channel(const json& v, const std::string& path, std::size_t n_qubits) {
  const std::size_t d = std::size_t{1} << n_qubits;
  if (v.is_null()) return Channel::identity(d);
  const std::string type = text(require(v, "type", path), join(path, "type"));
  if (type == "identity") return Channel::identity(d);
  if (type == "depolarizing") return Channel::depolarizing(d, number_field(v, "p", path));
  if (type == "amplitude_damping") return Channel::amplitude_damping(number_field(v, "gamma", path), n_qubits);
  if (type == "bit_flip") return Channel::bit_flip(number_field(v, "p", path), n_qubits);
  if (type == "unitary") return Channel::unitary(matrix(require(v, "matrix", path), join(path, "matrix")));
  if (type == "kraus_list") {
    const json& ks = require(v, "kraus", path);
    if (!ks.is_array() || ks.empty()) throw ConfigError("config: '" + join(path, "kraus") + "' must be a nonempty array");
    std::vector<Matrix> kraus;
    for (std::size_t i = 0; i < ks.size(); ++i)
      kraus.push_back(matrix(ks[i], join(path, "kraus") + "[" + std::to_string(i) + "]"));
    return Channel::kraus_list(std::move(kraus));
  }
  throw ConfigError("config: unknown channel type '" + type + "' at '" + join(path, "type") + "'");
}

StabilizerGroup stabilizer(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError("config: '" + where + "' must be a nonempty array of Pauli strings");
  std::vector<PauliString> gens;
  for (std::size_t i = 0; i < v.size(); ++i) gens.push_back(PauliString::parse(text(v[i], where + "[" + std::to_string(i) + "]")));
  return StabilizerGroup(std::move(gens));
}

CliffordElement clifford(const json& v, const std::string& where, std::size_t n) {
  if (!v.is_array()) throw ConfigError("config: '" + where + "' must be an array of gates");
  CliffordElement c = CliffordElement::identity(n);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = where + "[" + std::to_string(i) + "]";
    const std::string g = text(require(v[i], "gate", p), join(p, "gate"));
    auto qubit = [&](const std::string& key) {
      const auto q = count(require(v[i], key, p), join(p, key));
      if (q >= n) throw ConfigError("config: '" + join(p, key) + "' is out of range");
      return static_cast<std::size_t>(q);
    };
    if (g == "h") c = c.then(CliffordElement::hadamard(n, qubit("qubit")));
    else if (g == "s") c = c.then(CliffordElement::phase(n, qubit("qubit")));
    else if (g == "cnot") c = c.then(CliffordElement::cnot(n, qubit("control"), qubit("target")));
    else throw ConfigError("config: unknown gate '" + g + "' at '" + join(p, "gate") + "' (use h, s, cnot)");
  }
  return c;
}

DeviceConfig device_config(const json& root) {
  const json& dev = require(root, "device", "");
  DeviceConfig cfg;
  cfg.n_qubits = count(require(dev, "n_qubits", "device"), "device.n_qubits");
  if (cfg.n_qubits == 0 || cfg.n_qubits > 14) throw ConfigError("config: 'device.n_qubits' must lie in [1, 14]");
  cfg.target = StabilizerGroup::computational_zero(cfg.n_qubits);
  if (const json* t = optional_field(dev, "target")) {
    if (const json* s = optional_field(*t, "stabilizer")) cfg.target = stabilizer(*s, "device.target.stabilizer");
    else if (const json* vec = optional_field(*t, "vector")) cfg.target = vector(*vec, "device.target.vector");
    else if (const json* m = optional_field(*t, "density_matrix")) cfg.target = matrix(*m, "device.target.density_matrix");
    else throw ConfigError("config: 'device.target' needs one of 'stabilizer', 'vector', 'density_matrix'");
  }
  cfg.noise = NoiseModel::noiseless(cfg.dim());
  if (const json* nz = optional_field(dev, "noise")) {
    if (const json* c = optional_field(*nz, "gate")) cfg.noise.gate_noise = channel(*c, "device.noise.gate", cfg.n_qubits);
    if (const json* c = optional_field(*nz, "prep")) cfg.noise.prep_error = channel(*c, "device.noise.prep", cfg.n_qubits);
    if (const json* c = optional_field(*nz, "meas")) cfg.noise.meas_error = channel(*c, "device.noise.meas", cfg.n_qubits);
    if (const json* ov = optional_field(*nz, "overrides")) {
      if (!ov->is_object()) throw ConfigError("config: 'device.noise.overrides' must be an object");
      for (const auto& [id, c] : ov->items())
        cfg.noise.overrides[id] = channel(c, "device.noise.overrides." + id, cfg.n_qubits);
    }
  }
  cfg.drift_rate = number_or(dev, "drift_rate", "device", 0.0);
  cfg.seed = count_or(dev, "seed", "device", 0);
  cfg.validate();
  return cfg;
}

ConfidenceSpec confidence(const json& root) {
  const json& s = require(root, "spec", "");
  ConfidenceSpec spec{number_field(s, "epsilon", "spec"), number_field(s, "delta", "spec")};
  spec.validate();
  return spec;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string body = ss.str();
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < body.size(); ++i) {
      if (body[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
}

// ---------------------------------------------------------------------------
// Output

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const Estimate& e) {
  return {{"value", num(e.value)},  {"epsilon", num(e.epsilon)}, {"delta", num(e.delta)},
          {"n_samples_used", e.n_samples_used}, {"method", e.method}, {"std_error", num(e.std_error)}};
}

json to_json(const Verdict& v) {
  json j = {{"decision", v.accepted() ? "accept" : "reject"},
            {"epsilon", v.epsilon},
            {"delta", v.delta},
            {"n_used", v.n_used},
            {"n_planned", v.n_planned},
            {"protocol", v.protocol},
            {"distance", v.distance}};
  if (v.infidelity_threshold) j["infidelity_threshold"] = *v.infidelity_threshold;
  return j;
}

std::string g17(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << body;
}

std::string rb_csv(const RbCurve& c) {
  // fit_p, fit_A, fit_B repeat on every row so the table is self-contained.
  std::string s = "m,survival,stderr,shots,fit,fit_p,fit_A,fit_B\n";
  for (std::size_t i = 0; i < c.lengths.size(); ++i) {
    const double fit = c.fit.a * std::pow(c.fit.p, static_cast<double>(c.lengths[i])) + c.fit.b;
    s += std::to_string(c.lengths[i]) + "," + g17(c.survival[i]) + "," + g17(c.std_error[i]) + "," +
         std::to_string(c.shots[i]) + "," + g17(fit) + "," + g17(c.fit.p) + "," + g17(c.fit.a) + "," + g17(c.fit.b) +
         "\n";
  }
  return s;
}

json rb_json(const RbResult& r) {
  const auto& f = r.curve.fit;
  return {{"p", to_json(r.p)},
          {"agf", to_json(r.agf)},
          {"fit", {{"A", f.a}, {"B", f.b}, {"p", f.p}, {"p_std_error", f.p_std_error},
                   {"residual_rms", f.residual_rms}, {"residuals", f.residuals}, {"evaluations", f.evaluations}}}};
}

// A record replay that reports the iid-ness of the configured device, so plans match the recording run.
class ReplayDevice : public MeasurementDevice {
 public:
  ReplayDevice(RecordDevice& inner, bool iid) : inner_(inner), iid_(iid) {}
  std::size_t dim() const override { return inner_.dim(); }
  bool is_iid() const override { return iid_; }
  ShotBatch measure(const MeasurementSetting& s, std::uint64_t shots, std::uint64_t stream,
                    std::uint64_t first_shot) override {
    return inner_.measure(s, shots, stream, first_shot);
  }

 private:
  RecordDevice& inner_;
  bool iid_;
};

struct Outcome {
  json result;
  std::vector<std::pair<std::string, std::string>> tables;  // file name, CSV body
};

Outcome run_protocol(const std::string& protocol, const json& root, const DeviceConfig& cfg, std::uint64_t seed,
                     MeasurementDevice& device) {
  const json empty = json::object();
  const json& params = optional_field(root, "params") ? root["params"] : empty;
  const std::size_t n = cfg.n_qubits;
  Outcome out;
  json& r = out.result;

  auto fidelity_target = [&]() -> FidelityTarget {
    if (const json* t = optional_field(params, "target"))
      return stabilizer(require(*t, "stabilizer", "params.target"), "params.target.stabilizer");
    if (const auto* s = std::get_if<StabilizerGroup>(&cfg.target)) return *s;
    if (const auto* v = std::get_if<Vector>(&cfg.target)) return PureState(*v);
    throw ConfigError("config: protocol '" + protocol + "' needs a pure target ('params.target' or a pure device target)");
  };

  if (protocol == "observable") {
    Matrix a;
    if (const json* p = optional_field(params, "pauli")) a = pauli_to_dense(PauliString::parse(text(*p, "params.pauli")));
    else a = matrix(require(params, "matrix", "params"), "params.matrix");
    const auto est = estimate_observable(device, a, confidence(root), seed);
    r["planned_n"] = est.n_samples_used;
    r["used_n"] = est.n_samples_used;
    r["estimate"] = to_json(est);
  } else if (protocol == "direct_state") {
    DirectCertOptions o;
    const std::string strat = text_or(params, "strategy", "params", "stabilizer_minimax");
    if (strat == "stabilizer_minimax") o.strategy = CertStrategy::StabilizerMinimax;
    else if (strat == "exact_povm") o.strategy = CertStrategy::ExactPovm;
    else throw ConfigError("config: 'params.strategy' must be 'stabilizer_minimax' or 'exact_povm'");
    o.adaptive = flag_or(params, "adaptive", "params", true);
    const auto target = fidelity_target();
    const CertTarget ct = std::holds_alternative<StabilizerGroup>(target) ? CertTarget(std::get<StabilizerGroup>(target))
                                                                          : CertTarget(std::get<PureState>(target));
    const auto v = direct_state_certify(device, ct, confidence(root), o, seed);
    r["planned_n"] = v.n_planned;
    r["used_n"] = v.n_used;
    r["verdict"] = to_json(v);
  } else if (protocol == "direct_process") {
    const auto target = clifford(require(params, "gates", "params"), "params.gates", n);
    const auto v = direct_process_certify(device, target, confidence(root), "target",
                                          flag_or(params, "adaptive", "params", true), seed);
    r["planned_n"] = v.n_planned;
    r["used_n"] = v.n_used;
    r["verdict"] = to_json(v);
  } else if (protocol == "dfe") {
    DfeOptions o;
    const std::string mode = text_or(params, "mode", "params", "general");
    if (mode == "general") o.mode = DfeMode::General;
    else if (mode == "well_conditioned") o.mode = DfeMode::WellConditioned;
    else throw ConfigError("config: 'params.mode' must be 'general' or 'well_conditioned'");
    o.alpha = number_or(params, "alpha", "params", 1.0);
    const auto spec = confidence(root);
    const auto plan = plan_dfe(fidelity_target(), spec, o, seed, device.is_iid());
    const auto est = analyze_dfe(plan, execute(device, plan.experiment));
    r["planned_n"] = plan.ell;
    r["used_n"] = est.n_samples_used;
    r["estimate"] = to_json(est);
    r["expected_total_shots"] = plan.expected_total;
    if (const json* c = optional_field(params, "certify")) {
      const std::string pol = text_or(*c, "policy", "params.certify", "trace_distance");
      ThresholdPolicy policy;
      if (pol == "trace_distance") policy = ThresholdPolicy::TraceDistance;
      else if (pol == "infidelity") policy = ThresholdPolicy::Infidelity;
      else throw ConfigError("config: 'params.certify.policy' must be 'trace_distance' or 'infidelity'");
      r["verdict"] = to_json(certify_from_estimate(est, number_field(*c, "epsilon", "params.certify"), policy));
    }
  } else if (protocol == "sfe") {
    SfeOptions o;
    const std::string ens = text_or(params, "ensemble", "params", "clifford");
    if (ens == "clifford") o.ensemble = SfeEnsemble::Clifford;
    else if (ens == "haar") o.ensemble = SfeEnsemble::Haar;
    else throw ConfigError("config: 'params.ensemble' must be 'clifford' or 'haar'");
    if (const json* v = optional_field(params, "n")) o.n_override = count(*v, "params.n");
    const auto res = sfe(device, fidelity_target(), confidence(root), o, seed);
    r["planned_n"] = res.fhat.size();
    r["used_n"] = res.fhat.size();
    r["estimate"] = to_json(res.estimate);
    r["fhat_mean"] = res.mean;
    r["fhat_variance"] = res.variance;
  } else if (protocol == "rb" || protocol == "rb_interleaved") {
    RbOptions o;
    const json& ls = require(params, "lengths", "params");
    if (!ls.is_array()) throw ConfigError("config: 'params.lengths' must be an array");
    for (std::size_t i = 0; i < ls.size(); ++i) o.lengths.push_back(count(ls[i], "params.lengths[" + std::to_string(i) + "]"));
    o.sequences_per_length = count_or(params, "sequences", "params", 30);
    o.shots_per_sequence = count_or(params, "shots", "params", 200);
    if (protocol == "rb") {
      const auto res = rb_standard(device, o, seed);
      r["planned_n"] = o.lengths.size() * o.sequences_per_length;
      r["used_n"] = res.p.n_samples_used;
      r["estimate"] = to_json(res.agf);
      r["rb"] = rb_json(res);
      out.tables.emplace_back("rb_curve.csv", rb_csv(res.curve));
    } else {
      const auto target = clifford(require(params, "gates", "params"), "params.gates", n);
      UnitaritySource u;
      const json& us = require(params, "unitarity", "params");
      const std::string src = text(require(us, "source", "params.unitarity"), "params.unitarity.source");
      if (src == "oracle") {
        u.kind = UnitaritySource::Kind::Oracle;
        u.value = unitarity(cfg.noise.gate_noise);
      } else if (src == "assumed") {
        u.kind = UnitaritySource::Kind::AssumedIncoherence;
        u.value = number_or(us, "excess", "params.unitarity", 0.0);
      } else {
        throw ConfigError("config: 'params.unitarity.source' must be 'oracle' or 'assumed'");
      }
      const auto res = rb_interleaved(device, target, o, u, seed);
      r["planned_n"] = 2 * o.lengths.size() * o.sequences_per_length;
      r["used_n"] = res.agf.n_samples_used;
      r["estimate"] = to_json(res.agf);
      r["interleaved"] = {{"center", res.center},
                          {"halfwidth", res.halfwidth},
                          {"systematic_halfwidth", res.systematic_halfwidth},
                          {"statistical_halfwidth", res.statistical_halfwidth},
                          {"unitarity", res.unitarity},
                          {"uninformative", res.uninformative},
                          {"reference", rb_json(res.reference)},
                          {"interleaved", rb_json(res.interleaved)}};
      out.tables.emplace_back("rb_reference.csv", rb_csv(res.reference.curve));
      out.tables.emplace_back("rb_interleaved.csv", rb_csv(res.interleaved.curve));
    }
  } else if (protocol == "xeb") {
    const std::size_t d = cfg.dim();
    const std::uint64_t circuits = count_or(params, "circuits", "params", 1);
    if (circuits == 0) throw ConfigError("config: 'params.circuits' must be positive");
    const std::string est_name = text_or(params, "estimator", "params", "linear");
    XebEstimator estimator;
    if (est_name == "linear") estimator = XebEstimator::Linear;
    else if (est_name == "log") estimator = XebEstimator::Log;
    else throw ConfigError("config: 'params.estimator' must be 'linear' or 'log'");
    const json* shots_field = optional_field(params, "shots");
    const std::uint64_t planned = xeb_planned_shots(confidence(root), d);
    const std::uint64_t shots = shots_field ? count(*shots_field, "params.shots") : planned;
    std::string csv = "circuit,estimate,std_error,running_mean\n";
    std::vector<double> values;
    double shift = 0.0;
    bool infinite = false;
    for (std::uint64_t c = 0; c < circuits; ++c) {
      SeededRng rng(seed, mix_seed(0x7eb, c));
      XebCircuit circ{"haar-" + fnv1a_hex(std::to_string(seed)) + "-" + std::to_string(c),
                      std::make_shared<const Matrix>(sample_haar_unitary(rng, d))};
      const auto res = xeb(device, circ, shots, estimator, mix_seed(seed, c));
      infinite = infinite || res.infinite_cross_entropy;
      shift += res.cross_entropy_shift;
      values.push_back(res.estimate.value);
      csv += std::to_string(c) + "," + g17(res.estimate.value) + "," + g17(res.estimate.std_error) + "," +
             g17(mean(values)) + "\n";
    }
    Estimate e;
    e.value = infinite ? std::numeric_limits<double>::infinity() : mean(values);
    e.std_error = values.size() > 1 ? standard_error(values) : 0.0;
    e.epsilon = 3.0 * e.std_error;
    e.delta = 0.0027;
    e.n_samples_used = shots * circuits;
    e.method = estimator == XebEstimator::Linear ? "xeb_linear" : "xeb_log";
    r["planned_n"] = planned;
    r["used_n"] = e.n_samples_used;
    r["estimate"] = to_json(e);
    r["infinite_cross_entropy"] = infinite;
    r["cross_entropy_shift"] = num(shift / static_cast<double>(circuits));
    if (estimator == XebEstimator::Log) r["d_xe"] = num(shift / static_cast<double>(circuits) - e.value);
    out.tables.emplace_back("xeb_trace.csv", csv);
  } else {
    throw ConfigError("config: unknown protocol '" + protocol +
                      "' (observable, direct_state, direct_process, dfe, sfe, rb, rb_interleaved, xeb)");
  }
  return out;
}

}  // namespace

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (options.threads > 0) kernels::set_thread_cap(options.threads);
    const json root = load_json(options.config_path);
    const std::string protocol = text(require(root, "protocol", ""), "protocol");
    const std::uint64_t seed = options.seed ? *options.seed : count(require(root, "seed", ""), "seed");
    const DeviceConfig cfg = device_config(root);

    std::unique_ptr<SimulatedDevice> sim;
    std::unique_ptr<RecordDevice> records;
    std::unique_ptr<ReplayDevice> replay;
    MeasurementDevice* device;
    if (options.records_path) {
      std::ifstream in(*options.records_path);
      if (!in) throw ConfigError("cannot open records file '" + *options.records_path + "'");
      records = std::make_unique<RecordDevice>(read_records_jsonl(in), cfg.dim());
      replay = std::make_unique<ReplayDevice>(*records, cfg.drift_rate == 0.0);
      device = replay.get();
    } else {
      sim = std::make_unique<SimulatedDevice>(cfg);
      device = sim.get();
    }
    std::unique_ptr<RecordingDevice> recorder;
    if (options.save_records_path) {
      recorder = std::make_unique<RecordingDevice>(*device);
      device = recorder.get();
    }

    Outcome out = run_protocol(protocol, root, cfg, seed, *device);
    json result = {{"protocol", protocol}, {"config_hash", fnv1a_hex(root.dump())}, {"seed", seed},
                   {"source", options.records_path ? "records" : "simulator"}};
    result.update(out.result);

    const fs::path dir(options.out_dir);
    fs::create_directories(dir);
    write_text(dir / "result.json", result.dump(2) + "\n");
    for (const auto& [name, body] : out.tables) write_text(dir / name, body);
    if (recorder) {
      std::ofstream rec(*options.save_records_path, std::ios::binary);
      if (!rec) throw std::runtime_error("cannot write '" + *options.save_records_path + "'");
      for (const auto& b : recorder->batches()) write_batch_jsonl(rec, b);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "timing.json", json{{"wall_time", secs}}.dump(2) + "\n");
    return kExitOk;
  } catch (const ProtocolFailure& e) {
    std::cerr << "qcert: protocol failure: " << e.what() << "\n";
    return kExitProtocolFailure;
  } catch (const ConfigError& e) {
    std::cerr << "qcert: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {  // InvalidInput, DimensionMismatch
    std::cerr << "qcert: invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const json::exception& e) {
    std::cerr << "qcert: invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {  // I/O
    std::cerr << "qcert: error: " << e.what() << "\n";
    return kExitError;
  }
}

int verify(const std::string& suite, std::uint64_t seed, const std::string& out_dir, int threads) {
  if (threads > 0) kernels::set_thread_cap(threads);
  suites::Report report;
  try {
    report = suites::run_suite(suite, seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "qcert: " << e.what() << "\n";
    return kExitInvalid;
  }
  json checks = json::array();
  std::printf("%-52s %14s %14s  %s\n", "check", "measured", "expected", "result");
  for (const auto& c : report.checks) {
    std::printf("%-52s %14.6g %14.6g  %s   (%s)\n", c.name.c_str(), c.measured, c.expected, c.pass ? "PASS" : "FAIL",
                c.rule.c_str());
    checks.push_back({{"name", c.name}, {"measured", num(c.measured)}, {"expected", num(c.expected)},
                      {"rule", c.rule}, {"pass", c.pass}});
  }
  std::printf("suite %s: %s\n", suite.c_str(), report.passed() ? "PASS" : "FAIL");
  try {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_text(dir / (suite + ".json"),
               json{{"suite", suite}, {"seed", seed}, {"pass", report.passed()}, {"checks", checks}}.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "qcert: error: " << e.what() << "\n";
    return kExitError;
  }
  return report.passed() ? kExitOk : kExitError;
}

}  // namespace qcert::cli
