#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dualrail {

using cd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

// Largest register the algebra accepts. Simulation paths use at most 4 qubits;
// the toggling-frame checks go up to 6 for the scalable generator.
inline constexpr int kMaxQubits = 6;

/// Thrown when an internal numerical invariant fails (trace, hermiticity, ...).
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int num_qubits_for_dim(Eigen::Index dim);  // throws if dim is not 2^n, n >= 1
double max_abs(const Matrix& m);
bool is_unitary(const Matrix& u, double tol = 1e-12);
bool is_hermitian(const Matrix& h, double tol = 1e-12);
Matrix identity(int n);
Matrix kron(const Matrix& a, const Matrix& b);

/// min over phi of max_abs(a - e^{i phi} b); infinity on a shape mismatch.
double phase_distance(const Matrix& a, const Matrix& b);

// ---------------------------------------------------------------------------
// Pauli strings
// ---------------------------------------------------------------------------

/// A weighted Pauli string. letters[k] acts on qubit k; qubit 0 is the leftmost
/// tensor factor (most significant bit of a basis index).
struct PauliTerm {
  cd coefficient{1.0, 0.0};
  std::string letters;

  int num_qubits() const { return static_cast<int>(letters.size()); }
  int weight() const;
  Matrix to_matrix() const;
  std::string to_string() const;
};

/// Unweighted Pauli string matrix, e.g. pauli_matrix("ZY").
Matrix pauli_matrix(std::string_view letters);

/// Pauli string for base-4 index `idx` (digit order I,X,Y,Z, qubit 0 most significant).
std::string pauli_label(std::size_t idx, int n);

/// Tr(P^dagger A) for the Pauli string `letters`, O(dim).
cd pauli_overlap(std::string_view letters, const Matrix& a);

/// All terms with |coefficient| > 1e-12 such that their sum reproduces `a`.
std::vector<PauliTerm> decompose_pauli(const Matrix& a);

/// Sum of terms as a dense matrix on `n` qubits (n is needed for the empty sum).
Matrix rebuild(const std::vector<PauliTerm>& terms, int n);

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

enum class GateKind { I, X, Y, Z, H, RZ, RX, ISWAP, SQRT_ISWAP, CZ, CNOT };

GateKind parse_gate(std::string_view name);
std::string_view gate_name(GateKind kind);
int gate_arity(GateKind kind);
bool gate_takes_angle(GateKind kind);

/// The 2^k x 2^k matrix of a k-qubit gate.
Matrix local_gate_matrix(GateKind kind, std::optional<double> angle = std::nullopt);

/// Embed a 2^k x 2^k operator acting on `targets` (targets[0] is its most
/// significant qubit) into an n-qubit register.
Matrix embed(const Matrix& local, std::span<const int> targets, int n);

Matrix gate_matrix(GateKind kind, std::span<const int> targets, int n,
                   std::optional<double> angle = std::nullopt);
Matrix gate_matrix(std::string_view name, std::span<const int> targets, int n,
                   std::optional<double> angle = std::nullopt);

/// One physical gate application: kind, target qubits, optional angle.
struct GateOp {
  GateKind kind = GateKind::I;
  std::vector<int> targets;
  std::optional<double> angle;

  Matrix matrix(int n) const { return gate_matrix(kind, targets, n, angle); }
  std::string to_string() const;
};

/// Product of `ops` applied left to right (ops.front() acts first).
Matrix circuit_unitary(std::span<const GateOp> ops, int n);

/// U^dagger A U. Rejects mismatched dimensions and u that is not unitary to 1e-9.
Matrix conjugate(const Matrix& u, const Matrix& a);

// ---------------------------------------------------------------------------
// System-environment couplings
// ---------------------------------------------------------------------------

/// One sigma_alpha^k (x) E_alpha^k term; the environment operator stays symbolic.
struct Coupling {
  PauliTerm system;
  std::string env_label;
};

class CouplingSet {
 public:
  CouplingSet() = default;
  explicit CouplingSet(std::vector<Coupling> terms);

  /// All single-qubit couplings sigma_alpha^k (x) E_alpha^k, alpha in {x,y,z}.
  static CouplingSet independent(int n);

  const std::vector<Coupling>& terms() const { return terms_; }
  int num_qubits() const { return n_; }
  bool empty() const { return terms_.empty(); }

 private:
  std::vector<Coupling> terms_;
  int n_ = 0;
};

}  // namespace dualrail
