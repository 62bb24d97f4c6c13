#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "dualrail/operator_core.hpp"

namespace dualrail {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class NoiseModel { QuasiStatic, OrnsteinUhlenbeck };

/// Per-qubit relaxation/dephasing parameters of the classical environment.
///
/// t2 is the Gaussian pure-dephasing time: a quasi-static offset with standard
/// deviation sqrt(2)/t2 yields coherence exp(-(t/t2)^2). t1 only drives amplitude
/// damping. Either may be +infinity.
struct NoiseConfig {
  int n = 1;
  std::vector<double> t1;  // us
  std::vector<double> t2;  // us
  double z_correlation = 0.0;        // pairwise correlation of the z offsets
  double transverse_fraction = 0.05; // std of x/y offsets relative to the z std
  NoiseModel model = NoiseModel::QuasiStatic;
  double ou_correlation_time = 1.0;  // us
  std::uint64_t seed = 1;

  void validate() const;
  bool noiseless() const;

  /// Defaults: T1 = 20 us everywhere, T2 taken from the measured device values
  /// where one exists (3.8, 4.2 us for the first pair).
  static NoiseConfig defaults(int n);
  static NoiseConfig none(int n);
};

/// Quasi-static offset std (rad/us) giving coherence exp(-(t/t2)^2).
double sigma_from_t2(double t2);

/// One classical noise draw. Fully determined by (config, shot).
struct NoiseRealization {
  std::uint64_t shot = 0;
  std::vector<double> z_offsets;                      // rad/us, value at t = 0
  std::vector<std::array<double, 2>> transverse_offsets;  // (x, y) rad/us
};

NoiseRealization sample_realization(const NoiseConfig& cfg, std::uint64_t shot);

/// Exact discretisation of a stationary Ornstein-Uhlenbeck process per qubit,
/// started from the realization's z offsets. Innovations carry the configured
/// inter-qubit correlation.
class OuPath {
 public:
  OuPath(const NoiseConfig& cfg, const NoiseRealization& start);
  const std::vector<double>& current() const { return values_; }
  void advance(double dt);

 private:
  std::vector<double> sigma_;
  std::vector<double> values_;
  RealMatrix mixing_;
  double tau_c_;
  double corr_ = 0.0;
  std::mt19937_64 rng_;
};

/// Single-qubit amplitude damping with decay probability p = 1 - exp(-dt/t1).
struct DampingChannel {
  double p = 0.0;

  std::array<Matrix, 2> kraus() const;
  Matrix apply(const Matrix& rho) const;  // one-qubit density matrix
};

DampingChannel damping_channel(double t1, double dt);

/// Applies amplitude damping with probability p to qubit `k` of an n-qubit
/// operator in place. Linear, so it is valid for any operator, not only states.
void apply_damping(Matrix& rho, int k, int n, double p);

/// Seeds a generator from (seed, stream, index) with splitmix64 mixing.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace dualrail
