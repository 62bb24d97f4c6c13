#include "dualrail/logical.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace dualrail {

namespace {

constexpr double kPi = std::numbers::pi;

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

// Trace out every qubit not listed in `keep`; kept qubits stay in the given order.
Matrix partial_trace_keep(const Matrix& rho, const std::vector<int>& keep, int n) {
  const int m = static_cast<int>(keep.size());
  const Eigen::Index dim = rho.rows();
  Matrix out = Matrix::Zero(Eigen::Index{1} << m, Eigen::Index{1} << m);
  Eigen::Index keep_mask = 0;
  for (int q : keep) keep_mask |= Eigen::Index{1} << (n - 1 - q);
  auto reduce = [&](Eigen::Index idx) {
    Eigen::Index r = 0;
    for (int q : keep) r = (r << 1) | ((idx >> (n - 1 - q)) & 1);
    return r;
  };
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < dim; ++i)
      if ((i & ~keep_mask) == (j & ~keep_mask)) out(reduce(i), reduce(j)) += rho(i, j);
  return out;
}

// images[a * dL + b] = E(|a><b|_L) as physical operators.
LogicalChannel assemble_logical(const std::vector<Matrix>& images, const LogicalRegister& reg, std::size_t shots) {
  const int nl = reg.num_logical;
  const Eigen::Index dl = Eigen::Index{1} << nl;
  const Matrix proj = codespace_projector(reg);
  const Matrix outside = Matrix::Identity(proj.rows(), proj.cols()) - proj;

  Matrix leak(dl, dl);
  std::vector<Matrix> logical(images.size());
  for (Eigen::Index a = 0; a < dl; ++a)
    for (Eigen::Index b = 0; b < dl; ++b) {
      const auto& img = images[static_cast<std::size_t>(a * dl + b)];
      leak(a, b) = (outside * img).trace();
      logical[static_cast<std::size_t>(a * dl + b)] = decode_to_logical(img, reg);
    }
  const Matrix leak_h = 0.5 * (leak + leak.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(leak_h, Eigen::EigenvaluesOnly);

  LogicalChannel out;
  out.leakage_weight = std::max(0.0, eig.eigenvalues().maxCoeff());
  out.channel.n = nl;
  out.channel.shots = shots;
  out.channel.ptm = ptm_from_map(
      [&](const Matrix& x) {
        Matrix y = Matrix::Zero(dl, dl);
        for (Eigen::Index a = 0; a < dl; ++a)
          for (Eigen::Index b = 0; b < dl; ++b)
            if (x(a, b) != cd{}) y += x(a, b) * logical[static_cast<std::size_t>(a * dl + b)];
        return y;
      },
      nl);
  return out;
}

Matrix ket_bra(Eigen::Index dim, Eigen::Index a, Eigen::Index b) {
  Matrix m = Matrix::Zero(dim, dim);
  m(a, b) = 1.0;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

LogicalRegister LogicalRegister::standard(int num_logical) {
  LogicalRegister reg;
  reg.num_logical = num_logical;
  for (int j = 0; j < num_logical; ++j) reg.pairs.emplace_back(2 * j, 2 * j + 1);
  reg.validate();
  return reg;
}

void LogicalRegister::validate() const {
  if (num_logical < 1 || num_logical > 2) throw std::invalid_argument("logical register supports 1 or 2 logical qubits");
  if (static_cast<int>(pairs.size()) != num_logical) throw std::invalid_argument("one physical pair per logical qubit");
  std::vector<int> seen;
  for (const auto& [a, b] : pairs) {
    for (int q : {a, b}) {
      if (q < 0 || q >= num_physical()) throw std::invalid_argument("pair qubit out of range");
      if (std::find(seen.begin(), seen.end(), q) != seen.end()) throw std::invalid_argument("pairs must be disjoint");
      seen.push_back(q);
    }
    const int gap = std::abs(a - b);
    if (gap != 1 && gap != num_physical() - 1) throw std::invalid_argument("pair qubits must be ring neighbours");
  }
}

LogicalGateKind parse_logical_gate(std::string_view name) {
  const std::string u = upper(name);
  if (u == "RZ") return LogicalGateKind::RZ;
  if (u == "RXM90" || u == "RX_M90" || u == "SQRT_ISWAP") return LogicalGateKind::RXM90;
  if (u == "H") return LogicalGateKind::H;
  if (u == "CZ") return LogicalGateKind::CZ;
  if (u == "X") return LogicalGateKind::X;
  if (u == "Z") return LogicalGateKind::Z;
  throw std::invalid_argument("unknown logical gate '" + std::string(name) + "'");
}

std::string_view logical_gate_name(LogicalGateKind kind) {
  switch (kind) {
    case LogicalGateKind::RZ: return "RZ";
    case LogicalGateKind::RXM90: return "RXM90";
    case LogicalGateKind::H: return "H";
    case LogicalGateKind::CZ: return "CZ";
    case LogicalGateKind::X: return "X";
    case LogicalGateKind::Z: return "Z";
  }
  return "?";
}

void LogicalCircuit::validate() const {
  if (num_logical < 1 || num_logical > 2) throw std::invalid_argument("logical circuits support 1 or 2 logical qubits");
  for (const auto& op : ops) {
    const std::size_t arity = op.kind == LogicalGateKind::CZ ? 2 : 1;
    if (op.targets.size() != arity)
      throw std::invalid_argument(std::string(logical_gate_name(op.kind)) + " takes " + std::to_string(arity) +
                                  " target(s)");
    for (int t : op.targets)
      if (t < 0 || t >= num_logical) throw std::invalid_argument("logical target out of range");
    if (arity == 2 && op.targets[0] == op.targets[1]) throw std::invalid_argument("CZ targets must be distinct");
    if ((op.kind == LogicalGateKind::RZ) != op.angle.has_value())
      throw std::invalid_argument("an angle is required for RZ and only for RZ");
    if (!(op.wait_us >= 0.0)) throw std::invalid_argument("wait must be non-negative");
  }
}

Matrix LogicalCircuit::unitary() const {
  validate();
  Matrix u = identity(num_logical);
  for (const auto& op : ops) {
    Matrix g;
    switch (op.kind) {
      case LogicalGateKind::RZ: g = gate_matrix(GateKind::RZ, op.targets, num_logical, op.angle); break;
      case LogicalGateKind::RXM90: g = gate_matrix(GateKind::RX, op.targets, num_logical, -kPi / 2); break;
      case LogicalGateKind::H: g = gate_matrix(GateKind::H, op.targets, num_logical); break;
      case LogicalGateKind::CZ: g = gate_matrix(GateKind::CZ, op.targets, num_logical); break;
      case LogicalGateKind::X: g = gate_matrix(GateKind::X, op.targets, num_logical); break;
      case LogicalGateKind::Z: g = gate_matrix(GateKind::Z, op.targets, num_logical); break;
    }
    u = g * u;
  }
  return u;
}

std::vector<GateOp> encode_circuit(const LogicalRegister& reg) {
  std::vector<GateOp> ops;
  for (const auto& [a, b] : reg.pairs) {
    ops.push_back({GateKind::CNOT, {a, b}, std::nullopt});
    ops.push_back({GateKind::X, {b}, std::nullopt});
  }
  return ops;
}

std::vector<GateOp> decode_circuit(const LogicalRegister& reg) {
  std::vector<GateOp> ops;
  for (const auto& [a, b] : reg.pairs) {
    ops.push_back({GateKind::X, {b}, std::nullopt});
    ops.push_back({GateKind::CNOT, {a, b}, std::nullopt});
  }
  return ops;
}

std::vector<GateOp> compile_logical_op(const LogicalOp& op, const LogicalRegister& reg) {
  const auto& pair = reg.pairs.at(static_cast<std::size_t>(op.targets.at(0)));
  std::vector<GateOp> out;
  switch (op.kind) {
    case LogicalGateKind::RZ:
      if (op.angle.value() != 0.0) out.push_back({GateKind::RZ, {pair.first}, op.angle});
      break;
    case LogicalGateKind::RXM90:
      out.push_back({GateKind::SQRT_ISWAP, {pair.first, pair.second}, std::nullopt});
      break;
    case LogicalGateKind::H:
      // Rz(pi/2) Rx(pi/2) Rz(pi/2); Rx(pi/2) = -(sqrt iSWAP)^3 on the codespace.
      out.push_back({GateKind::RZ, {pair.first}, kPi / 2});
      for (int k = 0; k < 3; ++k) out.push_back({GateKind::SQRT_ISWAP, {pair.first, pair.second}, std::nullopt});
      out.push_back({GateKind::RZ, {pair.first}, kPi / 2});
      break;
    case LogicalGateKind::CZ: {
      const int j = op.targets.at(0), k = op.targets.at(1);
      if (std::abs(j - k) != 1) throw std::invalid_argument("logical CZ needs adjacent pairs");
      const auto& lo = reg.pairs[static_cast<std::size_t>(std::min(j, k))];
      const auto& hi = reg.pairs[static_cast<std::size_t>(std::max(j, k))];
      // CZ on the boundary bond picks up (-1)^{(1-L_lo) L_hi}; Rz(pi) on hi fixes it.
      out.push_back({GateKind::CZ, {lo.second, hi.first}, std::nullopt});
      out.push_back({GateKind::RZ, {hi.first}, kPi});
      break;
    }
    case LogicalGateKind::X:
      out.push_back({GateKind::ISWAP, {pair.first, pair.second}, std::nullopt});
      break;
    case LogicalGateKind::Z:
      out.push_back({GateKind::Z, {pair.first}, std::nullopt});
      break;
  }
  return out;
}

std::vector<GateOp> compile_logical(const LogicalCircuit& circ, const LogicalRegister& reg) {
  circ.validate();
  reg.validate();
  if (circ.num_logical != reg.num_logical) throw std::invalid_argument("circuit and register sizes differ");
  std::vector<GateOp> out;
  for (const auto& op : circ.ops) {
    auto ops = compile_logical_op(op, reg);
    out.insert(out.end(), ops.begin(), ops.end());
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::Index codeword_index(const LogicalRegister& reg, Eigen::Index logical) {
  const int n = reg.num_physical();
  const int nl = reg.num_logical;
  Eigen::Index idx = 0;
  for (int j = 0; j < nl; ++j) {
    const Eigen::Index bit = (logical >> (nl - 1 - j)) & 1;
    const auto& [a, b] = reg.pairs[static_cast<std::size_t>(j)];
    idx |= bit << (n - 1 - a);
    idx |= (1 - bit) << (n - 1 - b);
  }
  return idx;
}

Matrix encoding_isometry(const LogicalRegister& reg) {
  const Eigen::Index dl = Eigen::Index{1} << reg.num_logical;
  Matrix v = Matrix::Zero(Eigen::Index{1} << reg.num_physical(), dl);
  for (Eigen::Index a = 0; a < dl; ++a) v(codeword_index(reg, a), a) = 1.0;
  return v;
}

Matrix codespace_projector(const LogicalRegister& reg) {
  const Matrix v = encoding_isometry(reg);
  return v * v.adjoint();
}

Matrix restrict_to_codespace(const Matrix& u, const LogicalRegister& reg) {
  const Matrix v = encoding_isometry(reg);
  if (u.rows() != v.rows()) throw std::invalid_argument("operator size does not match the register");
  return v.adjoint() * u * v;
}

double codespace_leak(const Matrix& u, const LogicalRegister& reg) {
  const Matrix p = codespace_projector(reg);
  return max_abs((Matrix::Identity(p.rows(), p.cols()) - p) * u * p);
}

Matrix decode_to_logical(const Matrix& physical, const LogicalRegister& reg) {
  const int n = reg.num_physical();
  const auto dec = decode_circuit(reg);
  const Matrix d = circuit_unitary(dec, n);
  std::vector<int> keep;
  for (const auto& pr : reg.pairs) keep.push_back(pr.first);
  return partial_trace_keep(d * physical * d.adjoint(), keep, n);
}

PauliFrame::PauliFrame(const LogicalRegister& reg) : reg_(reg), flips_(static_cast<std::size_t>(reg.num_logical), false) {}

void PauliFrame::absorb(const GateOp& gate) {
  if (gate.kind != GateKind::ISWAP) return;
  for (std::size_t j = 0; j < reg_.pairs.size(); ++j) {
    const auto& [a, b] = reg_.pairs[j];
    if ((gate.targets[0] == a && gate.targets[1] == b) || (gate.targets[0] == b && gate.targets[1] == a))
      flips_[j] = !flips_[j];
  }
}

void PauliFrame::absorb(std::span<const GateOp> gates) {
  for (const auto& g : gates) absorb(g);
}

Matrix PauliFrame::correction() const {
  std::string letters;
  for (bool f : flips_) letters.push_back(f ? 'X' : 'I');
  return pauli_matrix(letters);
}

// ---------------------------------------------------------------------------

LogicalChannel extract_logical_channel(const ChannelEstimate& est, const LogicalRegister& reg) {
  reg.validate();
  if (est.n != reg.num_physical()) throw std::invalid_argument("channel size does not match the register");
  const int n = est.n;
  const Eigen::Index dim = Eigen::Index{1} << n;
  const Eigen::Index dl = Eigen::Index{1} << reg.num_logical;
  const std::size_t count = std::size_t{1} << (2 * n);
  std::vector<std::string> labels;
  std::vector<Matrix> paulis;
  for (std::size_t i = 0; i < count; ++i) {
    labels.push_back(pauli_label(i, n));
    paulis.push_back(pauli_matrix(labels.back()));
  }
  std::vector<Matrix> images;
  for (Eigen::Index a = 0; a < dl; ++a)
    for (Eigen::Index b = 0; b < dl; ++b) {
      const Matrix x = ket_bra(dim, codeword_index(reg, a), codeword_index(reg, b));
      Eigen::VectorXcd v(static_cast<Eigen::Index>(count));
      for (std::size_t j = 0; j < count; ++j) v(static_cast<Eigen::Index>(j)) = pauli_overlap(labels[j], x);
      const Eigen::VectorXcd w = est.ptm.cast<cd>() * v;
      Matrix img = Matrix::Zero(dim, dim);
      for (std::size_t i = 0; i < count; ++i) img += w(static_cast<Eigen::Index>(i)) * paulis[i];
      images.push_back(img / static_cast<double>(dim));
    }
  return assemble_logical(images, reg, est.shots);
}

std::vector<Matrix> codespace_inputs(const LogicalRegister& reg) {
  reg.validate();
  const Eigen::Index dim = Eigen::Index{1} << reg.num_physical();
  const Eigen::Index dl = Eigen::Index{1} << reg.num_logical;
  // E(|b><a|) = E(|a><b|)^dagger, so only a <= b is evolved.
  std::vector<Matrix> inputs;
  for (Eigen::Index a = 0; a < dl; ++a)
    for (Eigen::Index b = a; b < dl; ++b) inputs.push_back(ket_bra(dim, codeword_index(reg, a), codeword_index(reg, b)));
  return inputs;
}

LogicalChannel logical_channel_from_images(const std::vector<Matrix>& out, const LogicalRegister& reg,
                                           std::size_t shots) {
  const Eigen::Index dl = Eigen::Index{1} << reg.num_logical;
  if (static_cast<Eigen::Index>(out.size()) != dl * (dl + 1) / 2) throw std::invalid_argument("expected one image per codespace input");
  std::vector<Matrix> images(static_cast<std::size_t>(dl * dl));
  std::size_t k = 0;
  for (Eigen::Index a = 0; a < dl; ++a)
    for (Eigen::Index b = a; b < dl; ++b, ++k) {
      images[static_cast<std::size_t>(a * dl + b)] = out[k];
      images[static_cast<std::size_t>(b * dl + a)] = out[k].adjoint();
    }
  return assemble_logical(images, reg, shots);
}

LogicalChannel simulate_logical_channel(const Schedule& sched, const NoiseConfig& cfg, std::size_t shots,
                                        const LogicalRegister& reg) {
  reg.validate();
  if (sched.n != reg.num_physical()) throw std::invalid_argument("schedule size does not match the register");
  return logical_channel_from_images(monte_carlo_images(sched, cfg, shots, codespace_inputs(reg)), reg, shots);
}

}  // namespace dualrail
