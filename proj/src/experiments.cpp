#include "dualrail/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>

#include "dualrail/logical.hpp"
#include "dualrail/sim.hpp"
#include "dualrail/toggling.hpp"
#include "dualrail/tomography.hpp"
#include "reference_data.hpp"

namespace dualrail {

namespace {

// RNG streams for finite-shot readout.
constexpr std::uint64_t kStreamTomography = 0x746f6d6fULL;
constexpr std::uint64_t kStreamReadout = 0x72656164ULL;

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

// ---------------------------------------------------------------------------
// JSON helpers

double read_time(const Json& v, const char* what) {
  if (v.is_null()) return kInfinity;
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") return kInfinity;
    throw std::invalid_argument(std::string(what) + ": unrecognised value '" + s + "'");
  }
  if (!v.is_number()) throw std::invalid_argument(std::string(what) + " must be a number, \"inf\" or null");
  return v.get<double>();
}

std::vector<double> read_times(const Json& v, int n, const char* what) {
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& x : v) out.push_back(read_time(x, what));
    if (static_cast<int>(out.size()) != n)
      throw std::invalid_argument(std::string(what) + " must have one entry per qubit");
    return out;
  }
  return std::vector<double>(static_cast<std::size_t>(n), read_time(v, what));
}

Json time_json(double t) { return std::isfinite(t) ? Json(t) : Json("inf"); }
Json number_json(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

template <class T>
T get_as(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw std::invalid_argument(std::string("unknown key '") + key + "' in " + where);
  }
}

NoiseModel parse_noise_model(const std::string& s) {
  if (s == "quasiStatic") return NoiseModel::QuasiStatic;
  if (s == "ornsteinUhlenbeck") return NoiseModel::OrnsteinUhlenbeck;
  throw std::invalid_argument("unknown noise model '" + s + "'");
}

const char* noise_model_name(NoiseModel m) {
  return m == NoiseModel::QuasiStatic ? "quasiStatic" : "ornsteinUhlenbeck";
}

const char* curve_kind_name(CurveKind k) {
  switch (k) {
    case CurveKind::Fidelity: return "fidelity";
    case CurveKind::Probability: return "probability";
    case CurveKind::Expectation: return "expectation";
    case CurveKind::Leakage: return "leakage";
  }
  return "?";
}

std::vector<double> linspace_grid(double first, double step, int count) {
  std::vector<double> g;
  for (int k = 0; k < count; ++k) g.push_back(std::round((first + step * k) * 1e9) / 1e9);
  return g;
}

int default_register(ExperimentKind kind, const std::string& seq) {
  if (kind == ExperimentKind::Bell || kind == ExperimentKind::Superdense) return 4;
  const std::string s = upper(seq);
  return (s == "D4" || s == "DN" || s == "D2PAR") ? 4 : 2;
}

// ---------------------------------------------------------------------------
// Schedules

NoiseConfig run_noise(const ExperimentConfig& cfg) {
  NoiseConfig nc = cfg.noise;
  nc.seed = cfg.seed;
  return nc;
}

NoiseConfig select_qubits(const NoiseConfig& full, const std::vector<int>& qubits, std::uint64_t seed) {
  NoiseConfig nc = full;
  nc.n = static_cast<int>(qubits.size());
  nc.t1.clear();
  nc.t2.clear();
  for (int q : qubits) {
    nc.t1.push_back(full.t1.at(static_cast<std::size_t>(q)));
    nc.t2.push_back(full.t2.at(static_cast<std::size_t>(q)));
  }
  nc.seed = seed;
  return nc;
}

// Decoupling window of length tau: period/reps from the sequence settings,
// tiled to cover tau exactly.
Schedule dd_window(const ExperimentConfig& cfg, int n, double tau, bool protect) {
  const std::string name = upper(cfg.sequence.name);
  if (tau == 0.0 || !protect || name == "FREE") return Schedule::idle(n, tau);
  int reps = cfg.sequence.reps;
  if (cfg.sequence.period) reps = std::max(1, static_cast<int>(std::lround(tau / *cfg.sequence.period)));
  return Schedule::from_sequence(build_sequence(name, n, tau / reps, reps), cfg.gate_error_rate);
}

class Timeline {
 public:
  explicit Timeline(int n) : sched_(Schedule::idle(n, 0.0)) {}

  // Sequential gates, each taking gate_time and followed by its own error.
  void gates(const std::vector<GateOp>& ops, double error_rate, double gate_time) {
    for (const auto& op : ops) {
      sched_.duration += gate_time;
      sched_.add(sched_.duration, {op}, error_rate);
    }
  }

  void window(const Schedule& w) {
    if (w.duration > 0.0) step_ = std::min(step_, w.trotter_step);
    const double offset = sched_.duration;
    for (auto ev : w.events) {
      ev.time += offset;
      sched_.events.push_back(std::move(ev));
    }
    sched_.duration += w.duration;
  }

  Schedule finish() {
    sched_.trotter_step = sched_.duration > 0.0 ? std::min(step_, sched_.duration / 64.0) : 1.0;
    sched_.validate();
    return sched_;
  }

 private:
  Schedule sched_;
  double step_ = kInfinity;
};

std::vector<GateOp> schedule_gates(const Schedule& s) {
  std::vector<GateOp> out;
  for (const auto& ev : s.events) out.insert(out.end(), ev.gates.begin(), ev.gates.end());
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

double clamp_unit(double x) {
  if (x < -1e-9 || x > 1.0 + 1e-9) return x;  // left for validate() to reject
  return std::clamp(x, 0.0, 1.0);
}

// Batch-means standard error over shot blocks.
double batch_stderr(const std::vector<double>& per_block, const std::vector<std::size_t>& block_shots, double value) {
  const std::size_t b = per_block.size();
  if (b < 2) return 0.0;
  double total = 0.0;
  for (auto s : block_shots) total += static_cast<double>(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double w = static_cast<double>(block_shots[i]) / total;
    acc += w * w * (per_block[i] - value) * (per_block[i] - value);
  }
  return std::sqrt(acc * static_cast<double>(b) / static_cast<double>(b - 1));
}

using BlockMetric = std::function<std::vector<double>(const std::vector<Matrix>&, std::size_t)>;

struct Estimate {
  std::vector<double> value;
  std::vector<std::vector<double>> per_block;  // [metric][block]
  std::vector<std::size_t> block_shots;
};

Estimate estimate(const ImageBlocks& blocks, const BlockMetric& metric, std::size_t shots) {
  Estimate e;
  e.value = metric(blocks.mean(), shots);
  e.block_shots = blocks.block_shots;
  e.per_block.assign(e.value.size(), {});
  if (blocks.sums.size() > 1)
    for (std::size_t b = 0; b < blocks.sums.size(); ++b) {
      const auto v = metric(blocks.block_mean(b), blocks.block_shots[b]);
      for (std::size_t m = 0; m < v.size(); ++m) e.per_block[m].push_back(v[m]);
    }
  return e;
}

CurvePoint point(const Estimate& e, std::size_t m, double tau) {
  return {tau, e.value[m], batch_stderr(e.per_block[m], e.block_shots, e.value[m])};
}

std::vector<DecayPoint> decay_points(const Curve& c) {
  std::vector<DecayPoint> out;
  for (const auto& p : c.points) out.push_back({p.tau, p.value});
  return out;
}

bool fittable(const Curve& c) {
  return c.points.size() >= 4 && std::any_of(c.points.begin(), c.points.end(), [](const CurvePoint& p) { return p.tau > 0.0; });
}

// ---------------------------------------------------------------------------
// Channel helpers

// rho -> sum_ij R_ij Tr(P_j rho)/d P_i
Matrix apply_ptm(const RealMatrix& r, const Matrix& rho, int n) {
  const Eigen::Index d = Eigen::Index{1} << n;
  Matrix out = Matrix::Zero(d, d);
  const std::size_t count = std::size_t{1} << (2 * n);
  std::vector<double> in(count);
  for (std::size_t j = 0; j < count; ++j) in[j] = pauli_overlap(pauli_label(j, n), rho).real();
  for (std::size_t i = 0; i < count; ++i) {
    double c = 0.0;
    for (std::size_t j = 0; j < count; ++j) c += r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * in[j];
    if (c != 0.0) out += (c / static_cast<double>(d)) * pauli_matrix(pauli_label(i, n));
  }
  return out;
}

// Channel composed with the inverse of the ideal unitary.
RealMatrix relative_ptm(const RealMatrix& r, const Matrix& ideal) { return unitary_ptm(ideal).transpose() * r; }

// Process fidelity of the marginal channel on qubit j (others fed I/d).
double marginal_fidelity(const RealMatrix& rel, int n, int j) {
  double acc = 0.0;
  for (std::size_t p = 0; p < 4; ++p) {
    const auto idx = static_cast<Eigen::Index>(p << (2 * (n - 1 - j)));
    acc += rel(idx, idx);
  }
  return acc / 4.0;
}

double z_retention(const RealMatrix& rel, int n, int j) {
  const auto idx = static_cast<Eigen::Index>(std::size_t{3} << (2 * (n - 1 - j)));
  return rel(idx, idx);
}

double fidelity_from_relative(const RealMatrix& rel) {
  const double d2 = static_cast<double>(rel.rows());
  return std::clamp(rel.trace() / d2, 0.0, 1.0);
}

RealMatrix sampled_ptm(const RealMatrix& r, int n, std::size_t shots, std::uint64_t seed, std::uint64_t index) {
  auto rng = make_rng(seed, kStreamTomography, index);
  return process_tomography([&](const Matrix& rho) { return apply_ptm(r, rho, n); }, n, shots, rng).ptm;
}

std::size_t binomial(std::size_t shots, double p, std::mt19937_64& rng) {
  std::binomial_distribution<std::size_t> draw(shots, std::clamp(p, 0.0, 1.0));
  return draw(rng);
}

Json matrix_json(const Matrix& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json rr = Json::array(), ii = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rr.push_back(m(i, j).real());
      ii.push_back(m(i, j).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return Json{{"real", re}, {"imag", im}};
}

Json gates_json(const std::vector<GateOp>& ops) {
  Json a = Json::array();
  for (const auto& op : ops) a.push_back(op.to_string());
  return a;
}

ExperimentResult start_result(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res;
  res.config = cfg;
  res.reference = reference_values(cfg.experiment);
  return res;
}

Curve& add_curve(ExperimentResult& res, std::string label, CurveKind kind) {
  res.curves.push_back({std::move(label), kind, {}});
  return res.curves.back();
}

Curve& curve_ref(ExperimentResult& res, std::string_view label) {
  for (auto& c : res.curves)
    if (c.label == label) return c;
  throw InvariantViolation("missing curve " + std::string(label));
}

void finish_curves(ExperimentResult& res) {
  for (auto& c : res.curves)
    if (c.kind != CurveKind::Expectation)
      for (auto& p : c.points) p.value = clamp_unit(p.value);
  res.validate();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentKind parse_experiment(std::string_view name) {
  if (name == "memory") return ExperimentKind::Memory;
  if (name == "ramsey") return ExperimentKind::Ramsey;
  if (name == "bell") return ExperimentKind::Bell;
  if (name == "superdense") return ExperimentKind::Superdense;
  if (name == "verify-sequence") return ExperimentKind::VerifySequence;
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Memory: return "memory";
    case ExperimentKind::Ramsey: return "ramsey";
    case ExperimentKind::Bell: return "bell";
    case ExperimentKind::Superdense: return "superdense";
    case ExperimentKind::VerifySequence: return "verify-sequence";
  }
  return "?";
}

int ExperimentConfig::register_size() const {
  if (experiment == ExperimentKind::Bell || experiment == ExperimentKind::Superdense) return 4;
  return sequence.n;
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  switch (kind) {
    case ExperimentKind::Memory:
      cfg.tau_grid = linspace_grid(0.5, 0.5, 12);
      break;
    case ExperimentKind::Ramsey:
      cfg.tau_grid = linspace_grid(0.0, 0.25, 25);
      break;
    case ExperimentKind::Bell:
      cfg.sequence.name = "D2PAR";
      cfg.tau_grid = {0.0};
      break;
    case ExperimentKind::Superdense:
      cfg.sequence.name = "D2PAR";
      cfg.tau_grid = linspace_grid(0.25, 0.25, 12);
      break;
    case ExperimentKind::VerifySequence:
      cfg.sequence.period = 1.0;
      cfg.tau_grid = {1.0};
      break;
  }
  cfg.sequence.n = default_register(kind, cfg.sequence.name);
  cfg.noise = NoiseConfig::defaults(cfg.register_size());
  return cfg;
}

void ExperimentConfig::validate() const {
  if (tau_grid.empty()) throw std::invalid_argument("tauGrid must not be empty");
  for (std::size_t k = 0; k < tau_grid.size(); ++k) {
    if (!(tau_grid[k] >= 0.0) || !std::isfinite(tau_grid[k])) throw std::invalid_argument("tauGrid entries must be finite and >= 0");
    if (k > 0 && !(tau_grid[k] > tau_grid[k - 1])) throw std::invalid_argument("tauGrid must be strictly increasing");
  }
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  if (!(gate_error_rate >= 0.0 && gate_error_rate <= 1.0)) throw std::invalid_argument("gateErrorRate must lie in [0, 1]");
  if (!(gate_time >= 0.0) || !std::isfinite(gate_time)) throw std::invalid_argument("gateTime must be finite and >= 0");
  if (sampled && tomography_shots < 1) throw std::invalid_argument("tomographyShots must be >= 1 in sampled mode");
  if (sequence.reps < 1) throw std::invalid_argument("sequence reps must be >= 1");
  if (sequence.period && (!(*sequence.period > 0.0) || !std::isfinite(*sequence.period)))
    throw std::invalid_argument("sequence period must be positive");

  const int n = register_size();
  if (noise.n != n)
    throw std::invalid_argument("noise.n = " + std::to_string(noise.n) + " but the experiment uses " + std::to_string(n) + " qubits");
  noise.validate();
  build_sequence(sequence.name, n, sequence.period.value_or(1.0), sequence.reps);

  switch (experiment) {
    case ExperimentKind::Memory:
      if (n % 2 != 0 || n > 4) throw std::invalid_argument("memory runs on 2 or 4 physical qubits");
      break;
    case ExperimentKind::Ramsey:
      if (n != 2) throw std::invalid_argument("ramsey runs on one logical qubit (2 physical qubits)");
      if (!detuning) throw std::invalid_argument("ramsey requires a detuning");
      if (!std::isfinite(*detuning)) throw std::invalid_argument("detuning must be finite");
      break;
    default:
      break;
  }
  if (circuit) {
    if (experiment != ExperimentKind::Bell) throw std::invalid_argument("a logical circuit is only used by bell");
    if (circuit->num_logical != 2) throw std::invalid_argument("bell circuits act on 2 logical qubits");
    circuit->validate();
  }
}

LogicalCircuit logical_circuit_from_json(const Json& j, int num_logical) {
  if (!j.is_array()) throw std::invalid_argument("circuit must be a list of ops");
  LogicalCircuit circ;
  circ.num_logical = num_logical;
  for (const auto& o : j) {
    if (!o.is_object()) throw std::invalid_argument("circuit ops must be objects");
    reject_unknown(o, {"gate", "targets", "angle", "wait"}, "circuit op");
    if (!o.contains("gate") || !o.contains("targets")) throw std::invalid_argument("circuit ops need 'gate' and 'targets'");
    LogicalOp op;
    op.kind = parse_logical_gate(get_as<std::string>(o, "gate"));
    op.targets = get_as<std::vector<int>>(o, "targets");
    if (o.contains("angle") && !o.at("angle").is_null()) op.angle = get_as<double>(o, "angle");
    if (o.contains("wait")) op.wait_us = get_as<double>(o, "wait");
    circ.ops.push_back(std::move(op));
  }
  circ.validate();
  return circ;
}

Json logical_circuit_to_json(const LogicalCircuit& circ) {
  Json a = Json::array();
  for (const auto& op : circ.ops) {
    Json o{{"gate", std::string(logical_gate_name(op.kind))}, {"targets", op.targets}};
    if (op.angle) o["angle"] = *op.angle;
    if (op.wait_us > 0.0) o["wait"] = op.wait_us;
    a.push_back(std::move(o));
  }
  return a;
}

ExperimentConfig config_from_json(const Json& j) {
  reject_unknown(j,
                 {"experiment", "seed", "noise", "sequence", "tauGrid", "shots", "gateErrorRate", "gateTime", "detuning",
                  "mode", "tomographyShots", "protectFirstLeg", "protectSecondLeg", "circuit", "output"},
                 "config");
  if (!j.contains("experiment")) throw std::invalid_argument("config needs an 'experiment' field");
  const auto kind = parse_experiment(get_as<std::string>(j, "experiment"));
  ExperimentConfig cfg = ExperimentConfig::defaults(kind);

  if (j.contains("sequence")) {
    const auto& s = j.at("sequence");
    reject_unknown(s, {"name", "n", "period", "reps"}, "sequence");
    if (s.contains("name")) cfg.sequence.name = get_as<std::string>(s, "name");
    if (s.contains("period")) cfg.sequence.period = s.at("period").is_null() ? std::nullopt : std::optional<double>(get_as<double>(s, "period"));
    if (s.contains("reps")) cfg.sequence.reps = get_as<int>(s, "reps");
    cfg.sequence.n = default_register(kind, cfg.sequence.name);
    if (s.contains("n")) cfg.sequence.n = get_as<int>(s, "n");
  }
  const Json noise = j.contains("noise") ? j.at("noise") : Json::object();
  reject_unknown(noise, {"n", "t1", "t2", "zCorrelation", "transverseFraction", "model", "ouCorrelationTime"}, "noise");
  if (noise.contains("n") && !(j.contains("sequence") && j.at("sequence").contains("n")) && kind != ExperimentKind::Bell &&
      kind != ExperimentKind::Superdense)
    cfg.sequence.n = get_as<int>(noise, "n");
  const int n = noise.contains("n") ? get_as<int>(noise, "n") : cfg.register_size();
  if (n < 1 || n > kMaxQubits) throw std::invalid_argument("noise.n out of range");
  cfg.noise = NoiseConfig::defaults(n);
  if (noise.contains("t1")) cfg.noise.t1 = read_times(noise.at("t1"), n, "noise.t1");
  if (noise.contains("t2")) cfg.noise.t2 = read_times(noise.at("t2"), n, "noise.t2");
  if (noise.contains("zCorrelation")) cfg.noise.z_correlation = get_as<double>(noise, "zCorrelation");
  if (noise.contains("transverseFraction")) cfg.noise.transverse_fraction = get_as<double>(noise, "transverseFraction");
  if (noise.contains("model")) cfg.noise.model = parse_noise_model(get_as<std::string>(noise, "model"));
  if (noise.contains("ouCorrelationTime")) cfg.noise.ou_correlation_time = get_as<double>(noise, "ouCorrelationTime");

  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j, "seed");
  cfg.noise.seed = cfg.seed;
  if (j.contains("tauGrid")) cfg.tau_grid = get_as<std::vector<double>>(j, "tauGrid");
  if (j.contains("shots")) {
    const auto s = get_as<std::int64_t>(j, "shots");
    if (s < 1) throw std::invalid_argument("shots must be >= 1");
    cfg.shots = static_cast<std::size_t>(s);
  }
  if (j.contains("gateErrorRate")) cfg.gate_error_rate = get_as<double>(j, "gateErrorRate");
  if (j.contains("gateTime")) cfg.gate_time = get_as<double>(j, "gateTime");
  if (j.contains("detuning") && !j.at("detuning").is_null()) cfg.detuning = get_as<double>(j, "detuning");
  if (j.contains("mode")) {
    const auto mode = get_as<std::string>(j, "mode");
    if (mode != "analytic" && mode != "sampled") throw std::invalid_argument("mode must be 'analytic' or 'sampled'");
    cfg.sampled = mode == "sampled";
  }
  if (j.contains("tomographyShots")) {
    const auto s = get_as<std::int64_t>(j, "tomographyShots");
    if (s < 1) throw std::invalid_argument("tomographyShots must be >= 1");
    cfg.tomography_shots = static_cast<std::size_t>(s);
  }
  if (j.contains("protectFirstLeg")) cfg.protect_first_leg = get_as<bool>(j, "protectFirstLeg");
  if (j.contains("protectSecondLeg")) cfg.protect_second_leg = get_as<bool>(j, "protectSecondLeg");
  if (j.contains("circuit") && !j.at("circuit").is_null()) cfg.circuit = logical_circuit_from_json(j.at("circuit"), 2);
  if (j.contains("output")) cfg.output = get_as<std::string>(j, "output");
  cfg.validate();
  return cfg;
}

Json config_to_json(const ExperimentConfig& cfg) {
  Json t1 = Json::array(), t2 = Json::array();
  for (double t : cfg.noise.t1) t1.push_back(time_json(t));
  for (double t : cfg.noise.t2) t2.push_back(time_json(t));
  Json j;
  j["experiment"] = std::string(experiment_name(cfg.experiment));
  j["seed"] = cfg.seed;
  j["noise"] = Json{{"n", cfg.noise.n},
                    {"t1", t1},
                    {"t2", t2},
                    {"zCorrelation", cfg.noise.z_correlation},
                    {"transverseFraction", cfg.noise.transverse_fraction},
                    {"model", noise_model_name(cfg.noise.model)},
                    {"ouCorrelationTime", cfg.noise.ou_correlation_time}};
  j["sequence"] = Json{{"name", cfg.sequence.name},
                       {"n", cfg.sequence.n},
                       {"period", cfg.sequence.period ? Json(*cfg.sequence.period) : Json(nullptr)},
                       {"reps", cfg.sequence.reps}};
  j["tauGrid"] = cfg.tau_grid;
  j["shots"] = cfg.shots;
  j["gateErrorRate"] = cfg.gate_error_rate;
  j["gateTime"] = cfg.gate_time;
  j["detuning"] = cfg.detuning ? Json(*cfg.detuning) : Json(nullptr);
  j["mode"] = cfg.sampled ? "sampled" : "analytic";
  j["tomographyShots"] = cfg.tomography_shots;
  j["protectFirstLeg"] = cfg.protect_first_leg;
  j["protectSecondLeg"] = cfg.protect_second_leg;
  j["circuit"] = cfg.circuit ? logical_circuit_to_json(*cfg.circuit) : Json(nullptr);
  j["output"] = cfg.output;
  return j;
}

// ---------------------------------------------------------------------------
// Results

const Curve& ExperimentResult::curve(std::string_view label) const {
  for (const auto& c : curves)
    if (c.label == label) return c;
  throw std::out_of_range("no curve '" + std::string(label) + "'");
}

const FitRecord& ExperimentResult::fit(std::string_view curve_label) const {
  for (const auto& f : fits)
    if (f.curve == curve_label) return f;
  throw std::out_of_range("no fit for curve '" + std::string(curve_label) + "'");
}

void ExperimentResult::validate() const {
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      const bool unit = c.kind != CurveKind::Expectation;
      const double lo = unit ? 0.0 : -1.0;
      if (!(p.value >= lo && p.value <= 1.0))
        throw InvariantViolation("curve " + c.label + " value " + std::to_string(p.value) + " out of range at tau " +
                                 std::to_string(p.tau));
      if (!(p.stderr_value >= 0.0)) throw InvariantViolation("curve " + c.label + " has a negative standard error");
    }
}

Json result_to_json(const ExperimentResult& res) {
  Json j;
  j["schemaVersion"] = kResultSchemaVersion;
  j["experiment"] = std::string(experiment_name(res.config.experiment));
  j["config"] = config_to_json(res.config);
  Json curves = Json::array();
  for (const auto& c : res.curves) {
    Json pts = Json::array();
    for (const auto& p : c.points) pts.push_back(Json{{"tau", p.tau}, {"value", p.value}, {"stderr", p.stderr_value}});
    curves.push_back(Json{{"label", c.label}, {"kind", curve_kind_name(c.kind)}, {"points", pts}});
  }
  j["curves"] = curves;
  Json fits = Json::array();
  for (const auto& f : res.fits) {
    Json o;
    o["curve"] = f.curve;
    o["model"] = f.ramsey ? "ramseyEnvelope" : std::string(decay_model_name(f.fit.model));
    o[f.fit.model == DecayModel::GaussianT2 ? "T2_us" : "T2p_us"] = number_json(f.fit.t2);
    o["T1_us"] = number_json(f.fit.t1);
    o["t1Fixed"] = f.fit.t1_fixed;
    o["residual"] = f.fit.residual;
    o["covarianceDiag"] = Json::array({number_json(f.fit.covariance_diag[0]), number_json(f.fit.covariance_diag[1])});
    fits.push_back(o);
  }
  j["fits"] = fits;
  Json ref = Json::array();
  for (const auto& r : res.reference) {
    Json o{{"quantity", r.quantity}, {"value", r.value}, {"unit", r.unit}};
    if (r.tau) o["tau_us"] = *r.tau;
    o["quote"] = r.quote;
    ref.push_back(o);
  }
  j["reference"] = ref;
  j["extra"] = res.extra;
  return j;
}

std::string curve_csv(const Curve& curve) {
  std::string out = "tau_us,value,stderr\n";
  char buf[96];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.6g\n", p.tau, p.value, p.stderr_value);
    out += buf;
  }
  return out;
}

std::vector<std::string> write_result(const ExperimentResult& res, const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::vector<std::string> written;
  {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot write " + path);
    f << result_to_json(res).dump(2) << '\n';
    written.push_back(p.string());
  }
  const fs::path stem = p.parent_path() / p.stem();
  for (const auto& c : res.curves) {
    const fs::path csv = stem.string() + "_" + c.label + ".csv";
    std::ofstream f(csv, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot write " + csv.string());
    f << curve_csv(c);
    written.push_back(csv.string());
  }
  return written;
}

std::vector<ReferenceValue> reference_values(ExperimentKind kind) {
  const auto j = Json::parse(generated::kReferenceJson);
  std::vector<ReferenceValue> out;
  for (const auto& v : j.at("values")) {
    if (v.at("experiment").get<std::string>() != experiment_name(kind)) continue;
    ReferenceValue r;
    r.quantity = v.at("quantity").get<std::string>();
    r.value = v.at("value").get<double>();
    r.unit = v.at("unit").get<std::string>();
    if (v.contains("tau_us")) r.tau = v.at("tau_us").get<double>();
    r.quote = v.at("quote").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Memory

ExperimentResult run_memory(const ExperimentConfig& cfg) {
  ExperimentResult res = start_result(cfg);
  const int n = cfg.register_size();
  const int nl = n / 2;
  const auto reg = LogicalRegister::standard(nl);
  const NoiseConfig noise = run_noise(cfg);
  const std::string seq = upper(cfg.sequence.name);
  const std::vector<std::string> variants{"unprotected", seq};

  for (int k = 0; k < n; ++k) {
    add_curve(res, "physical_Q" + std::to_string(k + 1), CurveKind::Fidelity);
    add_curve(res, "relaxation_Q" + std::to_string(k + 1), CurveKind::Expectation);
  }
  for (const auto& v : variants) {
    if (nl > 1) add_curve(res, "logical_" + v + "_joint", CurveKind::Fidelity);
    for (int j = 0; j < nl; ++j) {
      add_curve(res, "logical_" + v + "_L" + std::to_string(j + 1), CurveKind::Fidelity);
      add_curve(res, "relaxation_logical_" + v + "_L" + std::to_string(j + 1), CurveKind::Expectation);
    }
    add_curve(res, "leakage_logical_" + v, CurveKind::Leakage);
  }

  for (std::size_t ti = 0; ti < cfg.tau_grid.size(); ++ti) {
    const double tau = cfg.tau_grid[ti];

    for (int k = 0; k < n; ++k) {
      const NoiseConfig sub = select_qubits(noise, {k}, cfg.seed + static_cast<std::uint64_t>(k) + 1);
      const auto blocks = monte_carlo_blocks(Schedule::idle(1, tau), sub, cfg.shots, pauli_inputs(1));
      const auto e = estimate(
          blocks,
          [&](const std::vector<Matrix>& images, std::size_t shots) {
            RealMatrix r = channel_from_images(images, 1, shots).ptm;
            if (cfg.sampled) r = sampled_ptm(r, 1, cfg.tomography_shots, cfg.seed, ti * 64 + static_cast<std::size_t>(k));
            return std::vector<double>{fidelity_from_relative(r), r(3, 3)};
          },
          cfg.shots);
      curve_ref(res, "physical_Q" + std::to_string(k + 1)).points.push_back(point(e, 0, tau));
      curve_ref(res, "relaxation_Q" + std::to_string(k + 1)).points.push_back(point(e, 1, tau));
    }

    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      const auto& v = variants[vi];
      const Schedule sched = vi == 0 ? Schedule::idle(n, tau) : dd_window(cfg, n, tau, true);
      const Matrix ideal = restrict_to_codespace(sched.ideal_unitary(), reg);
      const auto blocks = monte_carlo_blocks(sched, noise, cfg.shots, codespace_inputs(reg));
      const auto e = estimate(
          blocks,
          [&](const std::vector<Matrix>& images, std::size_t shots) {
            const auto lc = logical_channel_from_images(images, reg, shots);
            RealMatrix r = lc.channel.ptm;
            if (cfg.sampled) r = sampled_ptm(r, nl, cfg.tomography_shots, cfg.seed, ti * 64 + 16 + vi);
            const RealMatrix rel = relative_ptm(r, ideal);
            std::vector<double> out{fidelity_from_relative(rel)};
            for (int j = 0; j < nl; ++j) {
              out.push_back(marginal_fidelity(rel, nl, j));
              out.push_back(z_retention(rel, nl, j));
            }
            out.push_back(lc.leakage_weight);
            return out;
          },
          cfg.shots);
      std::size_t m = 0;
      if (nl > 1) curve_ref(res, "logical_" + v + "_joint").points.push_back(point(e, m, tau));
      ++m;
      for (int j = 0; j < nl; ++j) {
        curve_ref(res, "logical_" + v + "_L" + std::to_string(j + 1)).points.push_back(point(e, m++, tau));
        curve_ref(res, "relaxation_logical_" + v + "_L" + std::to_string(j + 1)).points.push_back(point(e, m++, tau));
      }
      curve_ref(res, "leakage_logical_" + v).points.push_back(point(e, m, tau));
    }
  }
  finish_curves(res);

  auto fit_with_t1 = [&](const std::string& label, const std::string& relax, DecayModel model) -> std::optional<DecayFit> {
    const Curve& c = res.curve(label);
    if (!fittable(c)) return std::nullopt;
    FitOptions opts;
    opts.fixed_t1 = fit_relaxation_time(decay_points(res.curve(relax)));
    res.fits.push_back({label, fit_decay(decay_points(c), model, opts), false});
    return res.fits.back().fit;
  };

  std::vector<double> physical_t2(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < n; ++k) {
    const std::string q = "Q" + std::to_string(k + 1);
    if (const auto f = fit_with_t1("physical_" + q, "relaxation_" + q, DecayModel::GaussianT2))
      physical_t2[static_cast<std::size_t>(k)] = f->t2;
  }
  Json per_logical = Json::array();
  for (int j = 0; j < nl; ++j) {
    const std::string l = "_L" + std::to_string(j + 1);
    const auto un_exp = fit_with_t1("logical_unprotected" + l, "relaxation_logical_unprotected" + l, DecayModel::ExponentialT2);
    fit_with_t1("logical_unprotected" + l, "relaxation_logical_unprotected" + l, DecayModel::GaussianT2);
    const double un_exp_t2 = un_exp ? un_exp->t2 : std::numeric_limits<double>::quiet_NaN();
    const auto prot = fit_with_t1("logical_" + seq + l, "relaxation_logical_" + seq + l, DecayModel::ExponentialT2);

    const auto [a, b] = reg.pairs[static_cast<std::size_t>(j)];
    const double ta = physical_t2[static_cast<std::size_t>(a)], tb = physical_t2[static_cast<std::size_t>(b)];
    const double rho = cfg.noise.z_correlation;
    const double gauss_rate = 1.0 / (ta * ta) + 1.0 / (tb * tb) - 2.0 * rho / (ta * tb);
    const double best = std::max(ta, tb);
    Json o;
    o["logical"] = "L" + std::to_string(j + 1);
    o["physicalT2_us"] = Json::array({number_json(ta), number_json(tb)});
    o["t2UnPredictedGaussianRule_us"] = number_json(gauss_rate > 0.0 ? 1.0 / std::sqrt(gauss_rate) : kInfinity);
    o["t2UnPredictedProductRule_us"] = number_json(ta * tb / (ta + tb));
    o["t2UnFitted_us"] = number_json(un_exp_t2);
    o["t2pFitted_us"] = number_json(prot ? prot->t2 : std::numeric_limits<double>::quiet_NaN());
    o["improvementPercent"] = number_json(prot ? 100.0 * (prot->t2 / best - 1.0) : std::numeric_limits<double>::quiet_NaN());
    per_logical.push_back(o);
  }
  res.extra["sequence"] = seq;
  res.extra["coherence"] = per_logical;
  return res;
}

// ---------------------------------------------------------------------------
// Ramsey

ExperimentResult run_ramsey(const ExperimentConfig& cfg) {
  ExperimentResult res = start_result(cfg);
  const auto reg = LogicalRegister::standard(1);
  const NoiseConfig noise = run_noise(cfg);
  const double omega = *cfg.detuning;
  const LogicalOp half_pi{LogicalGateKind::RXM90, {0}, std::nullopt, 0.0};

  add_curve(res, "ramsey_L1", CurveKind::Expectation);
  add_curve(res, "leakage_L1", CurveKind::Leakage);

  Matrix rho0 = Matrix::Zero(4, 4);
  rho0(codeword_index(reg, 0), codeword_index(reg, 0)) = 1.0;

  for (std::size_t ti = 0; ti < cfg.tau_grid.size(); ++ti) {
    const double t = cfg.tau_grid[ti];
    Timeline tl(2);
    tl.gates(compile_logical_op(half_pi, reg), cfg.gate_error_rate, 0.0);
    const Schedule wait = dd_window(cfg, 2, t, true);
    tl.window(wait);
    tl.gates(compile_logical_op({LogicalGateKind::RZ, {0}, omega * t, 0.0}, reg), 0.0, 0.0);
    tl.gates(compile_logical_op(half_pi, reg), cfg.gate_error_rate, 0.0);
    const Schedule sched = tl.finish();

    PauliFrame frame(reg);
    const auto dd_gates = schedule_gates(wait);
    frame.absorb(dd_gates);
    const Matrix fix = frame.correction();
    const Matrix proj = codespace_projector(reg);

    const auto blocks = monte_carlo_blocks(sched, noise, cfg.shots, {rho0});
    const auto e = estimate(
        blocks,
        [&](const std::vector<Matrix>& images, std::size_t) {
          const Matrix logical = fix * decode_to_logical(images[0], reg) * fix.adjoint();
          const double leak = 1.0 - (proj * images[0]).trace().real();
          return std::vector<double>{(logical(0, 0) - logical(1, 1)).real(), leak};
        },
        cfg.shots);
    CurvePoint z = point(e, 0, t);
    if (cfg.sampled) {
      auto rng = make_rng(cfg.seed, kStreamReadout, ti);
      const double p0 = 0.5 * (1.0 + z.value);
      z.value = 2.0 * static_cast<double>(binomial(cfg.tomography_shots, p0, rng)) / static_cast<double>(cfg.tomography_shots) - 1.0;
    }
    curve_ref(res, "ramsey_L1").points.push_back(z);
    curve_ref(res, "leakage_L1").points.push_back(point(e, 1, t));
  }
  finish_curves(res);

  const Curve& c = res.curve("ramsey_L1");
  if (fittable(c)) res.fits.push_back({c.label, fit_ramsey(decay_points(c), omega), true});
  res.extra["detuning_rad_per_us"] = omega;
  res.extra["sequence"] = upper(cfg.sequence.name);
  return res;
}

// ---------------------------------------------------------------------------
// Bell

namespace {

LogicalCircuit bell_circuit() {
  LogicalCircuit c;
  c.num_logical = 2;
  c.ops = {{LogicalGateKind::H, {0}, std::nullopt, 0.0},
           {LogicalGateKind::H, {1}, std::nullopt, 0.0},
           {LogicalGateKind::CZ, {0, 1}, std::nullopt, 0.0},
           {LogicalGateKind::H, {1}, std::nullopt, 0.0}};
  return c;
}

std::vector<GateOp> physical_bell(int a, int b) {
  return {{GateKind::H, {a}, std::nullopt}, {GateKind::CNOT, {a, b}, std::nullopt}};
}


// Codespace action of `u` with the complement left alone.
Matrix lift_logical(const Matrix& u, const LogicalRegister& reg) {
  const Matrix v = encoding_isometry(reg);
  const Matrix p = v * v.adjoint();
  return v * u * v.adjoint() + (Matrix::Identity(p.rows(), p.cols()) - p);
}

struct BellRoute {
  std::string name;
  std::vector<GateOp> prep;                         // runs before the ops
  std::vector<std::vector<GateOp>> ops;             // compiled logical ops
  std::vector<double> waits;                        // idle after each op
  std::vector<Matrix> intents;                      // lifted logical action per op
};

}  // namespace

ExperimentResult run_bell(const ExperimentConfig& cfg) {
  ExperimentResult res = start_result(cfg);
  const auto reg = LogicalRegister::standard(2);
  const NoiseConfig noise = run_noise(cfg);
  const LogicalCircuit circ = cfg.circuit.value_or(bell_circuit());

  const auto encode = encode_circuit(reg);
  BellRoute compiled{"compiled", encode, {}, {}, {}};
  for (const auto& op : circ.ops) {
    compiled.ops.push_back(compile_logical_op(op, reg));
    compiled.waits.push_back(op.wait_us);
    LogicalCircuit one{circ.num_logical, {op}};
    compiled.intents.push_back(lift_logical(one.unitary(), reg));
  }
  std::vector<BellRoute> routes{compiled};
  if (!cfg.circuit) {
    std::vector<GateOp> prep = physical_bell(0, 2);
    prep.insert(prep.end(), encode.begin(), encode.end());
    routes.push_back({"encode_last", prep, {}, {}, {}});
  }

  Eigen::VectorXcd b1 = Eigen::VectorXcd::Zero(16);
  b1(codeword_index(reg, 0)) = 1.0;
  for (const auto& m : compiled.intents) b1 = m * b1;
  const Matrix v = encoding_isometry(reg);
  const Matrix proj = codespace_projector(reg);
  Matrix rho0 = Matrix::Zero(16, 16);
  rho0(0, 0) = 1.0;

  for (const auto& r : routes) {
    add_curve(res, "bell_" + r.name, CurveKind::Fidelity);
    add_curve(res, "codespace_" + r.name, CurveKind::Probability);
  }
  Json states = Json::object();

  for (std::size_t ti = 0; ti < cfg.tau_grid.size(); ++ti) {
    const double tau = cfg.tau_grid[ti];
    for (std::size_t ri = 0; ri < routes.size(); ++ri) {
      const auto& route = routes[ri];
      const std::string& name = route.name;
      Timeline tl(4);
      tl.gates(route.prep, cfg.gate_error_rate, cfg.gate_time);
      Eigen::VectorXcd target = route.ops.empty() ? b1 : Eigen::VectorXcd(Eigen::VectorXcd::Zero(16));
      if (!route.ops.empty()) target(codeword_index(reg, 0)) = 1.0;
      for (std::size_t k = 0; k < route.ops.size(); ++k) {
        tl.gates(route.ops[k], cfg.gate_error_rate, cfg.gate_time);
        target = route.intents[k] * target;
        if (route.waits[k] > 0.0) {
          const Schedule mid = dd_window(cfg, 4, route.waits[k], true);
          tl.window(mid);
          target = mid.ideal_unitary() * target;
        }
      }
      const Schedule wait = dd_window(cfg, 4, tau, true);
      tl.window(wait);
      const Schedule sched = tl.finish();
      target = wait.ideal_unitary() * target;

      const auto blocks = monte_carlo_blocks(sched, noise, cfg.shots, {rho0});
      const auto e = estimate(
          blocks,
          [&](const std::vector<Matrix>& images, std::size_t) {
            return std::vector<double>{state_fidelity(images[0], target), (proj * images[0]).trace().real()};
          },
          cfg.shots);
      CurvePoint fid = point(e, 0, tau);
      Matrix rho = blocks.mean()[0];
      if (cfg.sampled) {
        auto rng = make_rng(cfg.seed, kStreamTomography, ti * 8 + ri);
        rho = state_tomography(rho, cfg.tomography_shots, rng).state;
        fid.value = state_fidelity(rho, target);
      }
      curve_ref(res, "bell_" + name).points.push_back(fid);
      curve_ref(res, "codespace_" + name).points.push_back(point(e, 1, tau));
      if (ti == 0) {
        const Matrix logical = v.adjoint() * rho * v;
        states[name] = Json{{"tau", tau},
                            {"fidelity", fid.value},
                            {"codespacePopulation", (proj * rho).trace().real()},
                            {"logicalDensityMatrix", matrix_json(logical)},
                            {"physicalDensityMatrix", matrix_json(rho)}};
      }
    }
  }
  finish_curves(res);
  res.extra["logicalCircuit"] = logical_circuit_to_json(circ);
  for (const auto& r : routes) {
    std::vector<GateOp> all = r.prep;
    for (const auto& ops : r.ops) all.insert(all.end(), ops.begin(), ops.end());
    res.extra[r.name == "compiled" ? "compiledCircuit" : "encodeLastCircuit"] = gates_json(all);
  }
  res.extra["states"] = states;
  return res;
}

// ---------------------------------------------------------------------------
// Superdense coding

namespace {

struct SuperdenseVariant {
  int n;
  std::vector<int> readout;  // qubits carrying the two classical bits
  std::vector<GateOp> prepare;
  std::vector<GateOp> measure;
  bool logical;
};

std::vector<GateOp> alice_ops(const std::string& message, bool logical, const LogicalRegister& reg) {
  const GateOp z{GateKind::Z, {0}, std::nullopt};
  std::vector<GateOp> x = logical ? compile_logical_op({LogicalGateKind::X, {0}, std::nullopt, 0.0}, reg)
                                  : std::vector<GateOp>{{GateKind::X, {0}, std::nullopt}};
  if (message == "I") return {};
  if (message == "X") return x;
  if (message == "Z") return {z};
  std::vector<GateOp> out{z};
  out.insert(out.end(), x.begin(), x.end());
  return out;
}

// Marginal distribution of the readout qubits.
std::vector<double> readout_distribution(const Matrix& rho, int n, const std::vector<int>& qubits) {
  std::vector<double> p(std::size_t{1} << qubits.size(), 0.0);
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    std::size_t o = 0;
    for (int q : qubits) o = (o << 1) | static_cast<std::size_t>((i >> (n - 1 - q)) & 1);
    p[o] += rho(i, i).real();
  }
  return p;
}

}  // namespace

ExperimentResult run_superdense(const ExperimentConfig& cfg) {
  ExperimentResult res = start_result(cfg);
  const auto reg = LogicalRegister::standard(2);
  const NoiseConfig noise4 = run_noise(cfg);
  const NoiseConfig noise2 = select_qubits(noise4, {0, 2}, cfg.seed);
  const std::vector<std::string> messages{"I", "X", "Z", "XZ"};

  std::vector<GateOp> logical_prep = physical_bell(0, 2);
  for (const auto& g : encode_circuit(reg)) logical_prep.push_back(g);
  std::vector<GateOp> logical_measure = decode_circuit(reg);
  logical_measure.push_back({GateKind::CNOT, {0, 2}, std::nullopt});
  logical_measure.push_back({GateKind::H, {0}, std::nullopt});
  const std::vector<GateOp> physical_measure{{GateKind::CNOT, {0, 1}, std::nullopt}, {GateKind::H, {0}, std::nullopt}};

  const std::vector<std::pair<std::string, SuperdenseVariant>> variants{
      {"physical", {2, {0, 1}, physical_bell(0, 1), physical_measure, false}},
      {"logical", {4, {0, 2}, logical_prep, logical_measure, true}}};

  for (const auto& [name, v] : variants) {
    add_curve(res, "superdense_" + name, CurveKind::Probability);
    for (const auto& m : messages) add_curve(res, "superdense_" + name + "_" + m, CurveKind::Probability);
  }

  Json expected = Json::object();
  for (std::size_t ti = 0; ti < cfg.tau_grid.size(); ++ti) {
    const double tau = cfg.tau_grid[ti];
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      const auto& [name, v] = variants[vi];
      const NoiseConfig& noise = v.logical ? noise4 : noise2;
      std::vector<double> avg_blocks;
      std::vector<std::size_t> block_shots;
      double avg = 0.0;
      for (std::size_t mi = 0; mi < messages.size(); ++mi) {
        Timeline tl(v.n);
        tl.gates(v.prepare, cfg.gate_error_rate, cfg.gate_time);
        tl.window(v.logical ? dd_window(cfg, v.n, tau, cfg.protect_first_leg) : Schedule::idle(v.n, tau));
        tl.gates(alice_ops(messages[mi], v.logical, reg), cfg.gate_error_rate, 0.0);
        tl.window(v.logical ? dd_window(cfg, v.n, tau, cfg.protect_second_leg) : Schedule::idle(v.n, tau));
        tl.gates(v.measure, cfg.gate_error_rate, cfg.gate_time);
        const Schedule sched = tl.finish();

        Matrix rho0 = Matrix::Zero(Eigen::Index{1} << v.n, Eigen::Index{1} << v.n);
        rho0(0, 0) = 1.0;
        const Matrix u = sched.ideal_unitary();
        const auto ideal = readout_distribution(u * rho0 * u.adjoint(), v.n, v.readout);
        const auto target = static_cast<std::size_t>(std::max_element(ideal.begin(), ideal.end()) - ideal.begin());
        if (ti == 0) expected[name][messages[mi]] = target;

        const auto blocks = monte_carlo_blocks(sched, noise, cfg.shots, {rho0});
        const auto e = estimate(
            blocks,
            [&](const std::vector<Matrix>& images, std::size_t) {
              return std::vector<double>{readout_distribution(images[0], v.n, v.readout)[target]};
            },
            cfg.shots);
        CurvePoint p = point(e, 0, tau);
        if (cfg.sampled) {
          auto rng = make_rng(cfg.seed, kStreamReadout, (ti * 2 + vi) * 4 + mi);
          p.value = static_cast<double>(binomial(cfg.tomography_shots, p.value, rng)) / static_cast<double>(cfg.tomography_shots);
        }
        curve_ref(res, "superdense_" + name + "_" + messages[mi]).points.push_back(p);
        avg += p.value / static_cast<double>(messages.size());
        if (avg_blocks.empty()) {
          avg_blocks.assign(e.per_block[0].size(), 0.0);
          block_shots = e.block_shots;
        }
        for (std::size_t b = 0; b < avg_blocks.size(); ++b) avg_blocks[b] += e.per_block[0][b] / static_cast<double>(messages.size());
      }
      curve_ref(res, "superdense_" + name).points.push_back({tau, avg, batch_stderr(avg_blocks, block_shots, avg)});
    }
  }
  finish_curves(res);
  res.extra["expectedOutcome"] = expected;
  res.extra["physicalQubits"] = Json::array({0, 2});
  res.extra["sequence"] = upper(cfg.sequence.name);
  return res;
}

// ---------------------------------------------------------------------------
// Sequence verification

ExperimentResult run_verify(const ExperimentConfig& cfg) {
  ExperimentResult res = start_result(cfg);
  const auto seq = build_sequence(cfg.sequence.name, cfg.sequence.n, cfg.sequence.period.value_or(1.0), cfg.sequence.reps);
  const auto check = verify_symmetrization(seq);

  Json per = Json::object();
  for (const auto& label : check.report.labels) {
    Json terms = Json::array();
    for (const auto& t : check.report.per_coupling.at(label))
      terms.push_back(Json{{"pauli", t.letters}, {"re", t.coefficient.real()}, {"im", t.coefficient.imag()}});
    per[label] = terms;
  }
  res.extra["sequence"] = upper(cfg.sequence.name);
  res.extra["n"] = seq.n;
  res.extra["pulsesPerCycle"] = seq.pulses.size();
  res.extra["passed"] = check.passed;
  res.extra["collectiveCoefficient"] = check.collective_coefficient;
  res.extra["cycleClosure"] = check.report.cycle_closure;
  res.extra["perCoupling"] = per;
  res.extra["survivors"] = check.report.survivors;
  res.extra["cancelled"] = check.report.cancelled;
  res.extra["failures"] = check.failures;
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::Memory: return run_memory(cfg);
    case ExperimentKind::Ramsey: return run_ramsey(cfg);
    case ExperimentKind::Bell: return run_bell(cfg);
    case ExperimentKind::Superdense: return run_superdense(cfg);
    case ExperimentKind::VerifySequence: return run_verify(cfg);
  }
  throw std::invalid_argument("unknown experiment");
}

}  // namespace dualrail
