#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dualrail/noise.hpp"
#include "dualrail/operator_core.hpp"
#include "dualrail/sim.hpp"

namespace dualrail {

/// Dual-rail register: logical j lives on physical pair pairs[j], with
/// |0>_L = |01> and |1>_L = |10> on (first, second).
struct LogicalRegister {
  int num_logical = 1;
  std::vector<std::pair<int, int>> pairs;

  /// Pairs (0,1), (2,3), ... on a ring of 2N qubits.
  static LogicalRegister standard(int num_logical);

  int num_physical() const { return 2 * num_logical; }
  void validate() const;
};

enum class LogicalGateKind { RZ, RXM90, H, CZ, X, Z };

LogicalGateKind parse_logical_gate(std::string_view name);
std::string_view logical_gate_name(LogicalGateKind kind);

struct LogicalOp {
  LogicalGateKind kind = LogicalGateKind::RZ;
  std::vector<int> targets;
  std::optional<double> angle;  // RZ only
  double wait_us = 0.0;         // idle time after the op
};

struct LogicalCircuit {
  int num_logical = 1;
  std::vector<LogicalOp> ops;

  void validate() const;
  /// Target action on the 2^N logical space.
  Matrix unitary() const;
};

/// Per-pair CNOT(first -> second) then X(second).
std::vector<GateOp> encode_circuit(const LogicalRegister& reg);
/// Per-pair X(second) then CNOT(first -> second).
std::vector<GateOp> decode_circuit(const LogicalRegister& reg);

/// Physical gates for one logical op.
std::vector<GateOp> compile_logical_op(const LogicalOp& op, const LogicalRegister& reg);
std::vector<GateOp> compile_logical(const LogicalCircuit& circ, const LogicalRegister& reg);

// ---------------------------------------------------------------------------
// Codespace
// ---------------------------------------------------------------------------

/// Physical basis index of the codeword for logical basis index `logical`.
Eigen::Index codeword_index(const LogicalRegister& reg, Eigen::Index logical);
/// Isometry V with V|a>_L = codeword(a); 2^{2N} x 2^N.
Matrix encoding_isometry(const LogicalRegister& reg);
Matrix codespace_projector(const LogicalRegister& reg);
/// V^dagger U V.
Matrix restrict_to_codespace(const Matrix& u, const LogicalRegister& reg);
/// max_abs of (1 - P) U P; zero when U maps the codespace into itself.
double codespace_leak(const Matrix& u, const LogicalRegister& reg);

/// Decodes a physical operator and traces out the second qubit of every pair.
Matrix decode_to_logical(const Matrix& physical, const LogicalRegister& reg);

/// Record of logical X byproducts from protection iSWAPs. Each iSWAP on a pair
/// acts on the codespace as i times logical X.
class PauliFrame {
 public:
  explicit PauliFrame(const LogicalRegister& reg);

  void absorb(const GateOp& gate);
  void absorb(std::span<const GateOp> gates);

  const std::vector<bool>& x_flips() const { return flips_; }
  /// Logical Pauli X^{flips} on the 2^N space.
  Matrix correction() const;

 private:
  LogicalRegister reg_;
  std::vector<bool> flips_;
};

// ---------------------------------------------------------------------------
// Logical channels
// ---------------------------------------------------------------------------

struct LogicalChannel {
  ChannelEstimate channel;     // on N logical qubits, trace preserving
  double leakage_weight = 0.0; // largest out-of-codespace weight over logical inputs
};

/// Logical channel from a physical PTM: encode, apply, decode, trace ancillas.
LogicalChannel extract_logical_channel(const ChannelEstimate& est, const LogicalRegister& reg);

/// Codespace operators |a><b|_L (a <= b) as physical matrices.
std::vector<Matrix> codespace_inputs(const LogicalRegister& reg);
/// Logical channel from the evolved codespace_inputs.
LogicalChannel logical_channel_from_images(const std::vector<Matrix>& images, const LogicalRegister& reg,
                                           std::size_t shots);

/// Same quantity estimated directly by evolving only the 4^N codespace operators.
LogicalChannel simulate_logical_channel(const Schedule& sched, const NoiseConfig& cfg, std::size_t shots,
                                        const LogicalRegister& reg);

}  // namespace dualrail
