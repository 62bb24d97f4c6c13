#include "dualrail/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dualrail {

namespace {

constexpr cd kI{0.0, 1.0};

int letter_index(char c) {
  switch (c) {
    case 'I': return 0;
    case 'X': return 1;
    case 'Y': return 2;
    case 'Z': return 3;
    default: throw std::invalid_argument(std::string("invalid Pauli letter '") + c + "'");
  }
}

// Bit of basis index `idx` that belongs to qubit k in an n-qubit register.
inline int qubit_bit(std::size_t idx, int k, int n) {
  return static_cast<int>((idx >> (n - 1 - k)) & 1U);
}

// P|j> = phase(j) |j ^ xmask>
struct PauliAction {
  std::size_t xmask = 0;
  std::vector<int> y_qubits;
  std::vector<int> z_qubits;

  cd phase(std::size_t j, int n) const {
    cd ph{1.0, 0.0};
    for (int k : z_qubits)
      if (qubit_bit(j, k, n)) ph = -ph;
    // Y|0> = i|1>, Y|1> = -i|0>
    for (int k : y_qubits) ph *= qubit_bit(j, k, n) ? -kI : kI;
    return ph;
  }
};

PauliAction pauli_action(std::string_view letters) {
  const int n = static_cast<int>(letters.size());
  PauliAction act;
  for (int k = 0; k < n; ++k) {
    const int l = letter_index(letters[k]);
    if (l == 1 || l == 2) act.xmask |= std::size_t{1} << (n - 1 - k);
    if (l == 2) act.y_qubits.push_back(k);
    if (l == 3) act.z_qubits.push_back(k);
  }
  return act;
}

void check_register(int n) {
  if (n < 1 || n > kMaxQubits)
    throw std::invalid_argument("register size " + std::to_string(n) + " outside [1, " +
                                std::to_string(kMaxQubits) + "]");
}

}  // namespace

int num_qubits_for_dim(Eigen::Index dim) {
  int n = 0;
  Eigen::Index d = 1;
  while (d < dim) {
    d *= 2;
    ++n;
  }
  if (d != dim || n < 1) throw std::invalid_argument("dimension " + std::to_string(dim) + " is not a power of two");
  return n;
}

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_unitary(const Matrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())) <= tol;
}

bool is_hermitian(const Matrix& h, double tol) {
  if (h.rows() != h.cols()) return false;
  return max_abs(h - h.adjoint()) <= tol;
}

Matrix identity(int n) {
  const Eigen::Index d = Eigen::Index{1} << n;
  return Matrix::Identity(d, d);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double phase_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  const cd overlap = (b.adjoint() * a).trace();
  const cd phase = std::abs(overlap) > 1e-300 ? overlap / std::abs(overlap) : cd{1.0, 0.0};
  return max_abs(a - phase * b);
}

// ---------------------------------------------------------------------------

int PauliTerm::weight() const {
  return static_cast<int>(std::count_if(letters.begin(), letters.end(), [](char c) { return c != 'I'; }));
}

Matrix PauliTerm::to_matrix() const { return coefficient * pauli_matrix(letters); }

std::string PauliTerm::to_string() const {
  std::ostringstream os;
  os.precision(12);
  if (coefficient.imag() == 0.0)
    os << coefficient.real();
  else
    os << "(" << coefficient.real() << (coefficient.imag() < 0 ? "-" : "+") << std::abs(coefficient.imag())
       << "i)";
  os << "*" << letters;
  return os.str();
}

Matrix pauli_matrix(std::string_view letters) {
  const int n = static_cast<int>(letters.size());
  check_register(n);
  const PauliAction act = pauli_action(letters);
  const std::size_t dim = std::size_t{1} << n;
  Matrix m = Matrix::Zero(dim, dim);
  for (std::size_t j = 0; j < dim; ++j) m(j ^ act.xmask, j) = act.phase(j, n);
  return m;
}

std::string pauli_label(std::size_t idx, int n) {
  static constexpr char kLetters[] = {'I', 'X', 'Y', 'Z'};
  std::string s(static_cast<std::size_t>(n), 'I');
  for (int k = n - 1; k >= 0; --k) {
    s[k] = kLetters[idx & 3U];
    idx >>= 2;
  }
  return s;
}

cd pauli_overlap(std::string_view letters, const Matrix& a) {
  const int n = static_cast<int>(letters.size());
  if (a.rows() != (Eigen::Index{1} << n) || a.cols() != a.rows())
    throw std::invalid_argument("pauli_overlap: dimension mismatch");
  const PauliAction act = pauli_action(letters);
  cd sum{0.0, 0.0};
  // Tr(P^dagger A) = sum_j conj(P_{j^x, j}) A_{j^x, j}
  for (std::size_t j = 0; j < static_cast<std::size_t>(a.rows()); ++j)
    sum += std::conj(act.phase(j, n)) * a(static_cast<Eigen::Index>(j ^ act.xmask), static_cast<Eigen::Index>(j));
  return sum;
}

std::vector<PauliTerm> decompose_pauli(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("decompose_pauli: matrix must be square");
  const int n = num_qubits_for_dim(a.rows());
  check_register(n);
  const double dim = static_cast<double>(a.rows());
  const std::size_t count = std::size_t{1} << (2 * n);
  std::vector<PauliTerm> terms;
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::string label = pauli_label(idx, n);
    const cd c = pauli_overlap(label, a) / dim;
    if (std::abs(c) > 1e-12) terms.push_back({c, std::move(label)});
  }
  return terms;
}

Matrix rebuild(const std::vector<PauliTerm>& terms, int n) {
  Matrix m = Matrix::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
  for (const auto& t : terms) {
    if (t.num_qubits() != n) throw std::invalid_argument("rebuild: term size does not match register");
    m += t.to_matrix();
  }
  return m;
}

// ---------------------------------------------------------------------------

GateKind parse_gate(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "I" || up == "ID") return GateKind::I;
  if (up == "X") return GateKind::X;
  if (up == "Y") return GateKind::Y;
  if (up == "Z") return GateKind::Z;
  if (up == "H") return GateKind::H;
  if (up == "RZ") return GateKind::RZ;
  if (up == "RX") return GateKind::RX;
  if (up == "ISWAP") return GateKind::ISWAP;
  if (up == "SQRT_ISWAP" || up == "SQISWAP" || up == "SQRTISWAP") return GateKind::SQRT_ISWAP;
  if (up == "CZ") return GateKind::CZ;
  if (up == "CNOT" || up == "CX") return GateKind::CNOT;
  throw std::invalid_argument("unknown gate '" + std::string(name) + "'");
}

std::string_view gate_name(GateKind kind) {
  switch (kind) {
    case GateKind::I: return "I";
    case GateKind::X: return "X";
    case GateKind::Y: return "Y";
    case GateKind::Z: return "Z";
    case GateKind::H: return "H";
    case GateKind::RZ: return "RZ";
    case GateKind::RX: return "RX";
    case GateKind::ISWAP: return "ISWAP";
    case GateKind::SQRT_ISWAP: return "SQRT_ISWAP";
    case GateKind::CZ: return "CZ";
    case GateKind::CNOT: return "CNOT";
  }
  return "?";
}

int gate_arity(GateKind kind) {
  switch (kind) {
    case GateKind::ISWAP:
    case GateKind::SQRT_ISWAP:
    case GateKind::CZ:
    case GateKind::CNOT: return 2;
    default: return 1;
  }
}

bool gate_takes_angle(GateKind kind) { return kind == GateKind::RZ || kind == GateKind::RX; }

Matrix local_gate_matrix(GateKind kind, std::optional<double> angle) {
  if (gate_takes_angle(kind) && !angle) throw std::invalid_argument("gate " + std::string(gate_name(kind)) + " requires an angle");
  const double r = 1.0 / std::sqrt(2.0);
  Matrix m;
  switch (kind) {
    case GateKind::I: m = Matrix::Identity(2, 2); break;
    case GateKind::X: m = pauli_matrix("X"); break;
    case GateKind::Y: m = pauli_matrix("Y"); break;
    case GateKind::Z: m = pauli_matrix("Z"); break;
    case GateKind::H:
      m.resize(2, 2);
      m << r, r, r, -r;
      break;
    case GateKind::RZ:
      m = Matrix::Zero(2, 2);
      m(0, 0) = std::exp(-kI * (*angle / 2));
      m(1, 1) = std::exp(kI * (*angle / 2));
      break;
    case GateKind::RX: {
      const double c = std::cos(*angle / 2), s = std::sin(*angle / 2);
      m.resize(2, 2);
      m << c, -kI * s, -kI * s, c;
      break;
    }
    case GateKind::ISWAP:
      m = Matrix::Identity(4, 4);
      m(1, 1) = m(2, 2) = 0.0;
      m(1, 2) = m(2, 1) = kI;
      break;
    case GateKind::SQRT_ISWAP:
      m = Matrix::Identity(4, 4);
      m(1, 1) = m(2, 2) = r;
      m(1, 2) = m(2, 1) = kI * r;
      break;
    case GateKind::CZ:
      m = Matrix::Identity(4, 4);
      m(3, 3) = -1.0;
      break;
    case GateKind::CNOT:
      m = Matrix::Zero(4, 4);
      m(0, 0) = m(1, 1) = 1.0;
      m(2, 3) = m(3, 2) = 1.0;
      break;
  }
  return m;
}

Matrix embed(const Matrix& local, std::span<const int> targets, int n) {
  check_register(n);
  const int k = static_cast<int>(targets.size());
  if (local.rows() != (Eigen::Index{1} << k) || local.cols() != local.rows())
    throw std::invalid_argument("embed: operator size does not match target count");
  for (int a = 0; a < k; ++a) {
    if (targets[a] < 0 || targets[a] >= n)
      throw std::invalid_argument("target qubit " + std::to_string(targets[a]) + " out of range for n=" + std::to_string(n));
    for (int b = a + 1; b < k; ++b)
      if (targets[a] == targets[b]) throw std::invalid_argument("target qubits must be distinct");
  }
  const std::size_t dim = std::size_t{1} << n;
  const std::size_t ldim = std::size_t{1} << k;
  std::size_t tmask = 0;
  for (int t : targets) tmask |= std::size_t{1} << (n - 1 - t);

  auto local_index = [&](std::size_t j) {
    std::size_t l = 0;
    for (int a = 0; a < k; ++a) l = (l << 1) | static_cast<std::size_t>(qubit_bit(j, targets[a], n));
    return l;
  };
  auto with_local = [&](std::size_t j, std::size_t l) {
    std::size_t out = j & ~tmask;
    for (int a = 0; a < k; ++a)
      if ((l >> (k - 1 - a)) & 1U) out |= std::size_t{1} << (n - 1 - targets[a]);
    return out;
  };

  Matrix m = Matrix::Zero(dim, dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const std::size_t lc = local_index(j);
    for (std::size_t lr = 0; lr < ldim; ++lr) {
      const cd v = local(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(lc));
      if (v != cd{0.0, 0.0}) m(static_cast<Eigen::Index>(with_local(j, lr)), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return m;
}

Matrix gate_matrix(GateKind kind, std::span<const int> targets, int n, std::optional<double> angle) {
  if (static_cast<int>(targets.size()) != gate_arity(kind))
    throw std::invalid_argument("gate " + std::string(gate_name(kind)) + " expects " + std::to_string(gate_arity(kind)) +
                                " target(s)");
  return embed(local_gate_matrix(kind, angle), targets, n);
}

Matrix gate_matrix(std::string_view name, std::span<const int> targets, int n, std::optional<double> angle) {
  return gate_matrix(parse_gate(name), targets, n, angle);
}

std::string GateOp::to_string() const {
  std::ostringstream os;
  os << gate_name(kind);
  if (angle) os << "[" << *angle << "]";
  os << "(";
  for (std::size_t i = 0; i < targets.size(); ++i) os << (i ? "," : "") << targets[i];
  os << ")";
  return os.str();
}

Matrix circuit_unitary(std::span<const GateOp> ops, int n) {
  Matrix u = identity(n);
  for (const auto& op : ops) u = op.matrix(n) * u;
  return u;
}

Matrix conjugate(const Matrix& u, const Matrix& a) {
  if (u.rows() != u.cols() || a.rows() != a.cols() || u.rows() != a.rows())
    throw std::invalid_argument("conjugate: dimension mismatch");
  if (!is_unitary(u, 1e-9)) throw std::invalid_argument("conjugate: operator is not unitary");
  return u.adjoint() * a * u;
}

// ---------------------------------------------------------------------------

CouplingSet::CouplingSet(std::vector<Coupling> terms) : terms_(std::move(terms)) {
  for (const auto& c : terms_) {
    if (c.system.weight() != 1)
      throw std::invalid_argument("coupling '" + c.env_label + "' must be a weight-1 Pauli string, got " + c.system.letters);
    if (n_ == 0) n_ = c.system.num_qubits();
    if (c.system.num_qubits() != n_) throw std::invalid_argument("couplings act on different register sizes");
  }
}

CouplingSet CouplingSet::independent(int n) {
  check_register(n);
  std::vector<Coupling> terms;
  for (int k = 0; k < n; ++k) {
    for (char alpha : {'X', 'Y', 'Z'}) {
      std::string letters(static_cast<std::size_t>(n), 'I');
      letters[k] = alpha;
      std::string label = "E_";
      label += static_cast<char>(std::tolower(alpha));
      label += "^" + std::to_string(k + 1);
      terms.push_back({PauliTerm{1.0, std::move(letters)}, std::move(label)});
    }
  }
  return CouplingSet(std::move(terms));
}

}  // namespace dualrail
