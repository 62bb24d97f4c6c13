#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualrail/noise.hpp"
#include "dualrail/operator_core.hpp"
#include "dualrail/toggling.hpp"

namespace dualrail {

struct DensityState {
  int n = 1;
  Matrix rho;

  static DensityState basis(int n, std::size_t index);
  static DensityState pure(const Eigen::VectorXcd& psi);

  /// Throws InvariantViolation unless Hermitian, unit trace and PSD within `tol`.
  void validate(double tol = 1e-9) const;
};

/// Gates applied at one instant, each followed by depolarizing noise of
/// probability `error_rate` on its own targets.
struct ScheduleEvent {
  double time = 0.0;  // us
  std::vector<GateOp> gates;
  Matrix unitary;
  double error_rate = 0.0;
};

struct Schedule {
  int n = 1;
  double duration = 0.0;     // us
  double trotter_step = 1.0; // us
  std::vector<ScheduleEvent> events;

  static Schedule idle(int n, double duration);
  /// Pulses of `seq` as events; Trotter step is one 64th of the shortest pulse interval.
  static Schedule from_sequence(const PulseSequence& seq, double error_rate = 0.0);

  /// Adds an event; keeps events sorted by time (stable for equal times).
  void add(double time, std::vector<GateOp> gates, double error_rate = 0.0);
  /// Appends `other` after this schedule's end.
  void append(const Schedule& other);
  /// Product of all event unitaries in order (the noiseless action).
  Matrix ideal_unitary() const;
  void validate() const;
};

/// Real Pauli-transfer matrix R_ij = Tr(P_i E(P_j)) / 2^n.
struct ChannelEstimate {
  int n = 1;
  RealMatrix ptm;
  std::size_t shots = 0;
};

/// Evolves an arbitrary operator through the schedule for one noise draw. The
/// map is linear; no state invariants are checked.
Matrix evolve_operator(const Matrix& op, const Schedule& sched, const NoiseRealization& noise, const NoiseConfig& cfg);

DensityState evolve_shot(const DensityState& state, const Schedule& sched, const NoiseRealization& noise,
                         const NoiseConfig& cfg);

/// Per-block sums of evolved inputs. Shots are split into fixed-size blocks that
/// may run concurrently; results do not depend on the thread count.
struct ImageBlocks {
  std::vector<std::vector<Matrix>> sums;
  std::vector<std::size_t> block_shots;

  std::vector<Matrix> mean() const;
  std::vector<Matrix> block_mean(std::size_t b) const;
};

ImageBlocks monte_carlo_blocks(const Schedule& sched, const NoiseConfig& cfg, std::size_t shots,
                               const std::vector<Matrix>& inputs);

/// Shot-averaged images E(input_j) for each input operator.
std::vector<Matrix> monte_carlo_images(const Schedule& sched, const NoiseConfig& cfg, std::size_t shots,
                                       const std::vector<Matrix>& inputs);

/// The 4^n Pauli strings as matrices, in pauli_label order.
std::vector<Matrix> pauli_inputs(int n);
/// PTM from the images of pauli_inputs(n).
ChannelEstimate channel_from_images(const std::vector<Matrix>& images, int n, std::size_t shots);

/// Shot-averaged channel of the schedule as a PTM (analytic-average mode).
ChannelEstimate monte_carlo_channel(const Schedule& sched, const NoiseConfig& cfg, std::size_t shots);

/// PTM of a linear map on n qubits.
RealMatrix ptm_from_map(const std::function<Matrix(const Matrix&)>& map, int n);
RealMatrix unitary_ptm(const Matrix& u);

/// Entanglement fidelity Tr(R_ideal^T R) / d^2.
double process_fidelity(const ChannelEstimate& est, const Matrix& ideal);

/// rho -> (1-p) rho + p I_T/2^k (x) Tr_T(rho) on the target qubits T.
void depolarize(Matrix& rho, std::span<const int> targets, int n, double p);

/// Number of worker threads used for shot blocks (at least 1).
unsigned worker_threads();

}  // namespace dualrail
