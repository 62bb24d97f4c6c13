#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dualrail/fit.hpp"
#include "dualrail/logical.hpp"
#include "dualrail/noise.hpp"

namespace dualrail {

using Json = nlohmann::ordered_json;

enum class ExperimentKind { Memory, Ramsey, Bell, Superdense, VerifySequence };

ExperimentKind parse_experiment(std::string_view name);
std::string_view experiment_name(ExperimentKind kind);

struct SequenceSpec {
  std::string name = "D2";
  int n = 0;                     // 0: derived from the experiment
  std::optional<double> period;  // us; empty: tau / reps
  int reps = 1;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Memory;
  std::uint64_t seed = 1;
  NoiseConfig noise;
  SequenceSpec sequence;
  std::vector<double> tau_grid;  // us
  std::size_t shots = 2000;
  double gate_error_rate = 0.0;
  double gate_time = 0.05;           // us per gate in prepared circuits
  std::optional<double> detuning;    // rad/us, Ramsey
  bool sampled = false;              // finite-shot tomography instead of exact states
  std::size_t tomography_shots = 1000;
  bool protect_first_leg = true;     // superdense
  bool protect_second_leg = true;
  std::optional<LogicalCircuit> circuit;  // bell: replaces the default Bell circuit
  std::string output;

  /// Physical register size used by the experiment.
  int register_size() const;
  /// Throws std::invalid_argument on any inconsistency.
  void validate() const;

  /// Defaults per experiment; noise is NoiseConfig::defaults of the register.
  static ExperimentConfig defaults(ExperimentKind kind);
};

/// [{"gate": "H", "targets": [0]}, {"gate": "RZ", "targets": [1], "angle": 0.5, "wait": 1.0}, ...]
/// "wait" is an idle time in us after the op.
LogicalCircuit logical_circuit_from_json(const Json& j, int num_logical);
Json logical_circuit_to_json(const LogicalCircuit& circ);

/// Missing keys take the defaults of the named experiment. Times accept "inf"
/// or null for infinity. Unknown keys are rejected.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& cfg);

struct CurvePoint {
  double tau = 0.0;
  double value = 0.0;
  double stderr_value = 0.0;  // batch-means standard error
};

enum class CurveKind { Fidelity, Probability, Expectation, Leakage };

struct Curve {
  std::string label;
  CurveKind kind = CurveKind::Fidelity;
  std::vector<CurvePoint> points;
};

struct FitRecord {
  std::string curve;
  DecayFit fit;
  bool ramsey = false;
};

struct ReferenceValue {
  std::string quantity;
  double value = 0.0;
  std::string unit;
  std::optional<double> tau;
  std::string quote;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<Curve> curves;
  std::vector<FitRecord> fits;
  std::vector<ReferenceValue> reference;
  Json extra = Json::object();

  const Curve& curve(std::string_view label) const;
  const FitRecord& fit(std::string_view curve_label) const;
  /// Throws InvariantViolation when a fidelity/probability value leaves [0, 1].
  void validate() const;
};

inline constexpr int kResultSchemaVersion = 1;

Json result_to_json(const ExperimentResult& res);
std::string curve_csv(const Curve& curve);
/// Writes the JSON result to `path` and one CSV per curve next to it, named
/// <stem>_<label>.csv. Returns the written paths.
std::vector<std::string> write_result(const ExperimentResult& res, const std::string& path);

/// Compiled-in hardware values for an experiment.
std::vector<ReferenceValue> reference_values(ExperimentKind kind);

ExperimentResult run_memory(const ExperimentConfig& cfg);
ExperimentResult run_ramsey(const ExperimentConfig& cfg);
ExperimentResult run_bell(const ExperimentConfig& cfg);
ExperimentResult run_superdense(const ExperimentConfig& cfg);
ExperimentResult run_verify(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace dualrail
