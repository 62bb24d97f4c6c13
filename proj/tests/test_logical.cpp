#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "dualrail/logical.hpp"
#include "dualrail/toggling.hpp"

using namespace dualrail;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXcd basis_vec(Eigen::Index dim, Eigen::Index idx) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
  v(idx) = 1.0;
  return v;
}

LogicalCircuit random_circuit(int nl, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 6), kind(0, nl == 2 ? 5 : 4), target(0, nl - 1);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  LogicalCircuit c;
  c.num_logical = nl;
  const int count = len(rng);
  for (int k = 0; k < count; ++k) {
    LogicalOp op;
    switch (kind(rng)) {
      case 0: op = {LogicalGateKind::RZ, {target(rng)}, angle(rng), 0.0}; break;
      case 1: op = {LogicalGateKind::RXM90, {target(rng)}, std::nullopt, 0.0}; break;
      case 2: op = {LogicalGateKind::H, {target(rng)}, std::nullopt, 0.0}; break;
      case 3: op = {LogicalGateKind::X, {target(rng)}, std::nullopt, 0.0}; break;
      case 4: op = {LogicalGateKind::Z, {target(rng)}, std::nullopt, 0.0}; break;
      default: op = {LogicalGateKind::CZ, {0, 1}, std::nullopt, 0.0}; break;
    }
    c.ops.push_back(op);
  }
  return c;
}

ChannelEstimate physical_channel(const std::function<Matrix(const Matrix&)>& map, int n) {
  return ChannelEstimate{n, ptm_from_map(map, n), 0};
}

}  // namespace

TEST_CASE("encode examples") {
  const auto reg = LogicalRegister::standard(1);
  const Matrix enc = circuit_unitary(encode_circuit(reg), 2);
  CHECK((enc * basis_vec(4, 0b00) - basis_vec(4, 0b01)).norm() < 1e-15);
  CHECK((enc * basis_vec(4, 0b10) - basis_vec(4, 0b10)).norm() < 1e-15);
  const Eigen::VectorXcd plus = (basis_vec(4, 0b00) + basis_vec(4, 0b10)) / std::sqrt(2.0);
  const Eigen::VectorXcd code = (basis_vec(4, 0b01) + basis_vec(4, 0b10)) / std::sqrt(2.0);
  CHECK((enc * plus - code).norm() < 1e-15);
}

TEST_CASE("decode examples") {
  const auto reg = LogicalRegister::standard(1);
  const Matrix dec = circuit_unitary(decode_circuit(reg), 2);
  CHECK((dec * basis_vec(4, 0b01) - basis_vec(4, 0b00)).norm() < 1e-15);
  const Eigen::VectorXcd code = (basis_vec(4, 0b01) + basis_vec(4, 0b10)) / std::sqrt(2.0);
  const Eigen::VectorXcd plus = (basis_vec(4, 0b00) + basis_vec(4, 0b10)) / std::sqrt(2.0);
  CHECK((dec * code - plus).norm() < 1e-15);
}

TEST_CASE("decode after encode is the identity") {
  for (int nl : {1, 2}) {
    const auto reg = LogicalRegister::standard(nl);
    const int n = reg.num_physical();
    const Matrix round = circuit_unitary(decode_circuit(reg), n) * circuit_unitary(encode_circuit(reg), n);
    CHECK(max_abs(round - identity(n)) < 1e-12);
  }
}

TEST_CASE("codewords") {
  const auto reg = LogicalRegister::standard(2);
  CHECK(codeword_index(reg, 0) == 0b0101);
  CHECK(codeword_index(reg, 1) == 0b0110);
  CHECK(codeword_index(reg, 2) == 0b1001);
  CHECK(codeword_index(reg, 3) == 0b1010);
  const Matrix v = encoding_isometry(reg);
  CHECK(max_abs(v.adjoint() * v - identity(2)) < 1e-15);
}

TEST_CASE("RXM90 compiles to sqrt iSWAP acting as exp(i pi/4 X)") {
  const auto reg = LogicalRegister::standard(1);
  const auto ops = compile_logical_op({LogicalGateKind::RXM90, {0}, std::nullopt, 0.0}, reg);
  REQUIRE(ops.size() == 1);
  CHECK(ops[0].kind == GateKind::SQRT_ISWAP);
  const Matrix r = restrict_to_codespace(circuit_unitary(ops, 2), reg);
  const Matrix expected = std::cos(kPi / 4) * identity(1) + cd(0, std::sin(kPi / 4)) * pauli_matrix("X");
  CHECK(max_abs(r - expected) < 1e-12);
}

TEST_CASE("CZ compiles to boundary CZ plus Rz(pi)") {
  const auto reg = LogicalRegister::standard(2);
  const auto ops = compile_logical_op({LogicalGateKind::CZ, {0, 1}, std::nullopt, 0.0}, reg);
  REQUIRE(ops.size() == 2);
  CHECK(ops[0].kind == GateKind::CZ);
  CHECK(ops[0].targets == std::vector<int>{1, 2});
  CHECK(ops[1].kind == GateKind::RZ);
  CHECK(ops[1].targets == std::vector<int>{2});
  const Matrix r = restrict_to_codespace(circuit_unitary(ops, 4), reg);
  Matrix cz = identity(2);
  cz(3, 3) = -1.0;
  CHECK(phase_distance(r, cz) < 1e-12);
}

TEST_CASE("RZ(0) compiles to nothing") {
  const auto reg = LogicalRegister::standard(1);
  CHECK(compile_logical_op({LogicalGateKind::RZ, {0}, 0.0, 0.0}, reg).empty());
}

TEST_CASE("circuit validation") {
  LogicalCircuit c{2, {{LogicalGateKind::CZ, {1, 1}, std::nullopt, 0.0}}};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.ops = {{LogicalGateKind::RZ, {0}, std::nullopt, 0.0}};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.ops = {{LogicalGateKind::H, {2}, std::nullopt, 0.0}};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.num_logical = 3;
  c.ops.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_logical_gate("T"), std::invalid_argument);
  CHECK(parse_logical_gate("rxm90") == LogicalGateKind::RXM90);
}

TEST_CASE("compiled circuits realize the logical unitary") {
  std::mt19937_64 rng(2024);
  for (int nl : {1, 2}) {
    const auto reg = LogicalRegister::standard(nl);
    for (int trial = 0; trial < 100; ++trial) {
      const auto circ = random_circuit(nl, rng);
      const Matrix u = circuit_unitary(compile_logical(circ, reg), reg.num_physical());
      CHECK(codespace_leak(u, reg) < 1e-12);
      CHECK(phase_distance(restrict_to_codespace(u, reg), circ.unitary()) < 1e-10);
    }
  }
}

TEST_CASE("every compiled gate preserves the codespace") {
  const auto reg = LogicalRegister::standard(2);
  for (const auto& op : std::vector<LogicalOp>{{LogicalGateKind::RZ, {1}, 0.3, 0.0},
                                               {LogicalGateKind::RXM90, {0}, std::nullopt, 0.0},
                                               {LogicalGateKind::H, {1}, std::nullopt, 0.0},
                                               {LogicalGateKind::CZ, {1, 0}, std::nullopt, 0.0},
                                               {LogicalGateKind::X, {0}, std::nullopt, 0.0},
                                               {LogicalGateKind::Z, {1}, std::nullopt, 0.0}})
    for (const auto& g : compile_logical_op(op, reg)) CHECK(codespace_leak(g.matrix(4), reg) == 0.0);
}

TEST_CASE("full protection cycles commute with logical gates") {
  std::mt19937_64 rng(77);
  for (int nl : {1, 2}) {
    const auto reg = LogicalRegister::standard(nl);
    const int n = reg.num_physical();
    const auto seq = build_sequence(nl == 1 ? "D2" : "D4", n, 1.0, 1);
    Matrix cycle = identity(n);
    for (const auto& p : seq.pulses) cycle = p.unitary * cycle;
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = random_circuit(nl, rng), b = random_circuit(nl, rng);
      const Matrix ua = circuit_unitary(compile_logical(a, reg), n);
      const Matrix ub = circuit_unitary(compile_logical(b, reg), n);
      CHECK(phase_distance(restrict_to_codespace(ub * cycle * ua, reg), restrict_to_codespace(ub * ua, reg)) < 1e-10);
    }
  }
}

TEST_CASE("Pauli frame tracks iSWAPs as logical X") {
  const auto reg = LogicalRegister::standard(2);
  PauliFrame frame(reg);
  const std::vector<GateOp> gates{{GateKind::ISWAP, {0, 1}, std::nullopt},
                                  {GateKind::ISWAP, {2, 3}, std::nullopt},
                                  {GateKind::ISWAP, {3, 2}, std::nullopt},
                                  {GateKind::CZ, {0, 2}, std::nullopt}};
  frame.absorb(gates);
  const Matrix u = circuit_unitary(std::span<const GateOp>(gates.data(), 3), 4);
  CHECK(frame.x_flips() == std::vector<bool>{true, false});
  CHECK(phase_distance(restrict_to_codespace(u, reg), pauli_matrix("XI")) < 1e-12);
  CHECK(max_abs(frame.correction() - pauli_matrix("XI")) == 0.0);
}

TEST_CASE("extracting the identity channel") {
  for (int nl : {1, 2}) {
    const auto reg = LogicalRegister::standard(nl);
    const int n = reg.num_physical();
    const auto est = physical_channel([](const Matrix& m) { return m; }, n);
    const auto lc = extract_logical_channel(est, reg);
    CHECK((lc.channel.ptm - RealMatrix::Identity(lc.channel.ptm.rows(), lc.channel.ptm.cols())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(lc.leakage_weight < 1e-12);
  }
}

TEST_CASE("damping of the second qubit leaks with its probability") {
  const auto reg = LogicalRegister::standard(1);
  for (double p : {0.1, 0.37}) {
    const auto est = physical_channel(
        [&](const Matrix& m) {
          Matrix out = m;
          apply_damping(out, 1, 2, p);
          return out;
        },
        2);
    CHECK(extract_logical_channel(est, reg).leakage_weight == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("collective dephasing is invisible to the logical qubit") {
  const auto reg = LogicalRegister::standard(1);
  const std::vector<double> phases{0.3, -1.1, 2.0, 0.05};
  const auto est = physical_channel(
      [&](const Matrix& m) {
        Matrix out = Matrix::Zero(m.rows(), m.cols());
        for (double phi : phases) {
          const Matrix u = gate_matrix(GateKind::RZ, std::vector<int>{0}, 2, phi) *
                           gate_matrix(GateKind::RZ, std::vector<int>{1}, 2, phi);
          out += u * m * u.adjoint() / double(phases.size());
        }
        return out;
      },
      2);
  const auto lc = extract_logical_channel(est, reg);
  CHECK((lc.channel.ptm - RealMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(lc.leakage_weight < 1e-12);
}

TEST_CASE("simulated and extracted logical channels agree") {
  auto cfg = NoiseConfig::defaults(2);
  cfg.seed = 4;
  const auto reg = LogicalRegister::standard(1);
  const auto sched = Schedule::from_sequence(build_sequence("D2", 2, 0.5, 3), 0.01);
  const auto direct = simulate_logical_channel(sched, cfg, 64, reg);
  const auto via = extract_logical_channel(monte_carlo_channel(sched, cfg, 64), reg);
  CHECK((direct.channel.ptm - via.channel.ptm).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(direct.leakage_weight == doctest::Approx(via.leakage_weight).epsilon(1e-9));
}

TEST_CASE("unprotected Z retention depends only on the first qubit's T1") {
  const auto reg = LogicalRegister::standard(1);
  auto cfg = NoiseConfig::defaults(2);
  cfg.transverse_fraction = 0.0;
  cfg.t1 = {15.0, 15.0};
  const double tau = 4.0;
  const double a = simulate_logical_channel(Schedule::idle(2, tau), cfg, 50, reg).channel.ptm(3, 3);
  cfg.t1 = {15.0, 3.0};
  const double b = simulate_logical_channel(Schedule::idle(2, tau), cfg, 50, reg).channel.ptm(3, 3);
  cfg.t1 = {5.0, 15.0};
  const double c = simulate_logical_channel(Schedule::idle(2, tau), cfg, 50, reg).channel.ptm(3, 3);
  CHECK(a == doctest::Approx(std::exp(-tau / 15.0)).epsilon(1e-9));
  CHECK(std::abs(a - b) < 1e-12);
  CHECK(c == doctest::Approx(std::exp(-tau / 5.0)).epsilon(1e-9));
}

TEST_CASE("decode_to_logical of codeword projectors") {
  const auto reg = LogicalRegister::standard(2);
  for (Eigen::Index a = 0; a < 4; ++a) {
    Matrix phys = Matrix::Zero(16, 16);
    phys(codeword_index(reg, a), codeword_index(reg, a)) = 1.0;
    const Matrix l = decode_to_logical(phys, reg);
    CHECK(std::abs(l(a, a) - 1.0) < 1e-15);
    CHECK(std::abs(l.trace() - 1.0) < 1e-15);
  }
}
