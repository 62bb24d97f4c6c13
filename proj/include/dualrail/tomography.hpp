#pragma once

#include <cstddef>
#include <functional>
#include <random>

#include "dualrail/operator_core.hpp"

namespace dualrail {

enum class TomographyKind { State, Process };

struct TomographyResult {
  TomographyKind kind = TomographyKind::State;
  int n = 1;
  Matrix state;    // State
  RealMatrix ptm;  // Process
  std::size_t shots_per_setting = 0;  // 0 = exact
};

using ChannelMap = std::function<Matrix(const Matrix&)>;

/// Pauli-basis tomography over the 3^n settings. With shots_per_setting = 0 the
/// true state is returned; otherwise counts are sampled, the state is linearly
/// inverted and then projected to the nearest density matrix.
TomographyResult state_tomography(const Matrix& rho, std::size_t shots_per_setting, std::mt19937_64& rng);

/// Inputs {|0>, |1>, |+>, |+i>}^n through `channel`, outputs state-tomographed,
/// PTM from R = S_out S_in^{-1}.
TomographyResult process_tomography(const ChannelMap& channel, int n, std::size_t shots_per_setting,
                                    std::mt19937_64& rng);

/// Nearest unit-trace PSD matrix in Frobenius norm (eigenvalues projected onto
/// the probability simplex).
Matrix project_to_density(const Matrix& h);

/// <psi|rho|psi>; psi must be normalized.
double state_fidelity(const Matrix& rho, const Eigen::VectorXcd& psi);

double trace_distance(const Matrix& a, const Matrix& b);

}  // namespace dualrail
