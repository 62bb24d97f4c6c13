#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dualrail/operator_core.hpp"

namespace dualrail {

/// An instantaneous control layer: a set of gates applied at one instant.
struct Pulse {
  double time = 0.0;  // us, within (0, cycle period]
  std::vector<GateOp> layer;
  Matrix unitary;     // product of `layer`
};

/// A periodic decoupling cycle, repeated `reps` times.
struct PulseSequence {
  std::string name;
  int n = 0;
  double period = 0.0;  // us, one cycle
  int reps = 1;
  std::vector<Pulse> pulses;  // one cycle

  double duration() const { return period * reps; }
  /// All pulses of all repetitions with absolute times.
  std::vector<Pulse> unrolled() const;
  void validate() const;
};

struct TogglingFrame {
  int index = 0;
  Matrix frame_unitary;  // cumulative pulse product before this interval
  double weight = 0.0;   // fraction of the total duration
};

struct AverageReport {
  std::vector<std::string> labels;                      // input order
  std::map<std::string, std::vector<PauliTerm>> per_coupling;
  std::vector<std::string> survivors;
  std::vector<std::string> cancelled;
  double cycle_closure = 0.0;
};

struct SymmetrizationResult {
  bool passed = false;
  double collective_coefficient = 0.0;  // c in  sigma_z^k -> c * sum_j sigma_z^j
  AverageReport report;
  std::vector<std::string> failures;    // human-readable reasons when !passed
};

/// Coefficients at or below this magnitude count as cancelled.
inline constexpr double kCancelThreshold = 1e-10;

/// Sequence names: D2, D2STAR, D4, DN (any even n), D2PAR (D2 on every pair in
/// parallel), SINGLE_ISWAP (one iSWAP on qubits 0,1), FREE (no pulses).
PulseSequence build_sequence(std::string_view name, int n, double period, int reps = 1);

/// Layer of parallel nearest-neighbour iSWAPs on the ring 0-1-...-(n-1)-0,
/// starting at bond (offset, offset+1). offset 0 gives the pair bonds.
std::vector<GateOp> iswap_layer(int n, int offset);

std::vector<TogglingFrame> enumerate_frames(const PulseSequence& seq);

/// Max-abs deviation of the full-cycle product from (phase * identity).
double cycle_closure(const PulseSequence& seq);

/// First-order average of each coupling's system operator over the toggling frames.
AverageReport average_coupling(const PulseSequence& seq, const CouplingSet& couplings);

/// Checks that every sigma_z^k averages to c * sum_j sigma_z^j (common c > 0) and
/// every sigma_x^k, sigma_y^k cancels.
SymmetrizationResult verify_symmetrization(const PulseSequence& seq);

}  // namespace dualrail
