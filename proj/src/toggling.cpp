#include "dualrail/toggling.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace dualrail {

namespace {

Pulse make_pulse(double time, std::vector<GateOp> layer, int n) {
  Pulse p;
  p.time = time;
  p.unitary = circuit_unitary(layer, n);
  p.layer = std::move(layer);
  return p;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

// Equally spaced cycle: layer k fires at period * (k+1) / layers.size().
PulseSequence equally_spaced(std::string name, int n, double period, int reps,
                             const std::vector<std::vector<GateOp>>& layers) {
  PulseSequence seq{std::move(name), n, period, reps, {}};
  const double m = static_cast<double>(layers.size());
  for (std::size_t k = 0; k < layers.size(); ++k)
    seq.pulses.push_back(make_pulse(period * static_cast<double>(k + 1) / m, layers[k], n));
  return seq;
}

void require_n(bool ok, std::string_view name, int n) {
  if (!ok) throw std::invalid_argument("sequence " + std::string(name) + " is not defined for n=" + std::to_string(n));
}

}  // namespace

std::vector<GateOp> iswap_layer(int n, int offset) {
  std::vector<GateOp> layer;
  if (n == 2) {
    layer.push_back({GateKind::ISWAP, {0, 1}, std::nullopt});
    return layer;
  }
  for (int a = offset; a < n + offset; a += 2) layer.push_back({GateKind::ISWAP, {a % n, (a + 1) % n}, std::nullopt});
  return layer;
}

PulseSequence build_sequence(std::string_view name_in, int n, double period, int reps) {
  const std::string name = upper(name_in);
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (!(period > 0.0) || !std::isfinite(period)) throw std::invalid_argument("period must be positive");

  PulseSequence seq;
  if (name == "D2" || name == "D2STAR") {
    require_n(n == 2, name, n);
    const int count = name == "D2" ? 4 : 8;
    seq = equally_spaced(name, n, period, reps, std::vector<std::vector<GateOp>>(count, iswap_layer(2, 0)));
  } else if (name == "D4" || name == "DN") {
    require_n(n >= 2 && n % 2 == 0 && n <= kMaxQubits && (name == "DN" || n == 4), name, n);
    // N blocks of [E, E, E, O]: E = iSWAPs on the pair bonds, O = iSWAPs on the
    // bonds between pairs. Within a block the E-frames cancel every x/y
    // coupling; the O steps walk each pair's z-average around the ring.
    const auto even = iswap_layer(n, 0);
    const auto odd = iswap_layer(n, 1);
    std::vector<std::vector<GateOp>> layers;
    for (int block = 0; block < n / 2; ++block) {
      layers.push_back(even);
      layers.push_back(even);
      layers.push_back(even);
      layers.push_back(odd);
    }
    seq = equally_spaced(name, n, period, reps, layers);
  } else if (name == "D2PAR") {
    require_n(n >= 2 && n % 2 == 0, name, n);
    seq = equally_spaced(name, n, period, reps, std::vector<std::vector<GateOp>>(4, iswap_layer(n, 0)));
  } else if (name == "SINGLE_ISWAP") {
    require_n(n >= 2, name, n);
    seq = PulseSequence{name, n, period, reps, {}};
    seq.pulses.push_back(make_pulse(period / 2.0, {GateOp{GateKind::ISWAP, {0, 1}, std::nullopt}}, n));
  } else if (name == "FREE") {
    if (n < 1 || n > kMaxQubits) throw std::invalid_argument("register size out of range");
    seq = PulseSequence{name, n, period, reps, {}};
  } else {
    throw std::invalid_argument("unknown sequence '" + std::string(name_in) + "'");
  }
  seq.validate();
  if ((name == "D4" || name == "DN")) {
    const auto check = verify_symmetrization(seq);
    if (!check.passed) throw InvariantViolation("generated sequence " + name + " failed symmetrization");
  }
  return seq;
}

std::vector<Pulse> PulseSequence::unrolled() const {
  std::vector<Pulse> out;
  out.reserve(pulses.size() * static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r)
    for (const auto& p : pulses) {
      Pulse q = p;
      q.time += period * r;
      out.push_back(std::move(q));
    }
  return out;
}

void PulseSequence::validate() const {
  if (n < 1 || n > kMaxQubits) throw std::invalid_argument("sequence register size out of range");
  if (!(period > 0.0)) throw std::invalid_argument("sequence period must be positive");
  if (reps < 1) throw std::invalid_argument("sequence reps must be >= 1");
  double last = 0.0;
  const Eigen::Index dim = Eigen::Index{1} << n;
  for (const auto& p : pulses) {
    if (!(p.time > last)) throw std::invalid_argument("pulse times must be strictly increasing and positive");
    if (p.time > period * (1.0 + 1e-12)) throw std::invalid_argument("pulse time beyond the cycle period");
    if (p.unitary.rows() != dim || !is_unitary(p.unitary, 1e-9))
      throw std::invalid_argument("pulse unitary has the wrong size or is not unitary");
    last = p.time;
  }
}

std::vector<TogglingFrame> enumerate_frames(const PulseSequence& seq) {
  const double total = seq.duration();
  std::vector<TogglingFrame> frames;
  Matrix u = identity(seq.n);
  double start = 0.0;
  for (const auto& p : seq.unrolled()) {
    if (p.time > start) frames.push_back({static_cast<int>(frames.size()), u, (p.time - start) / total});
    u = p.unitary * u;
    start = p.time;
  }
  if (total - start > 1e-12 * total || frames.empty())
    frames.push_back({static_cast<int>(frames.size()), u, (total - start) / total});
  return frames;
}

double cycle_closure(const PulseSequence& seq) {
  Matrix u = identity(seq.n);
  for (const auto& p : seq.pulses) u = p.unitary * u;
  const cd tr = u.trace() / static_cast<double>(u.rows());
  const cd phase = std::abs(tr) > 1e-12 ? tr / std::abs(tr) : cd{1.0, 0.0};
  return max_abs(u - phase * Matrix::Identity(u.rows(), u.cols()));
}

AverageReport average_coupling(const PulseSequence& seq, const CouplingSet& couplings) {
  if (!couplings.empty() && couplings.num_qubits() != seq.n)
    throw std::invalid_argument("coupling register size does not match the sequence");
  const auto frames = enumerate_frames(seq);
  AverageReport report;
  report.cycle_closure = cycle_closure(seq);
  for (const auto& c : couplings.terms()) {
    const Matrix p = c.system.to_matrix();
    Matrix avg = Matrix::Zero(p.rows(), p.cols());
    for (const auto& f : frames) avg += f.weight * (f.frame_unitary.adjoint() * p * f.frame_unitary);
    auto terms = decompose_pauli(avg);
    std::erase_if(terms, [](const PauliTerm& t) { return std::abs(t.coefficient) <= kCancelThreshold; });
    report.labels.push_back(c.env_label);
    (terms.empty() ? report.cancelled : report.survivors).push_back(c.env_label);
    report.per_coupling[c.env_label] = std::move(terms);
  }
  return report;
}

SymmetrizationResult verify_symmetrization(const PulseSequence& seq) {
  SymmetrizationResult result;
  const auto couplings = CouplingSet::independent(seq.n);
  result.report = average_coupling(seq, couplings);

  Matrix collective = Matrix::Zero(Eigen::Index{1} << seq.n, Eigen::Index{1} << seq.n);
  for (int k = 0; k < seq.n; ++k) {
    std::string z(static_cast<std::size_t>(seq.n), 'I');
    z[k] = 'Z';
    collective += pauli_matrix(z);
  }

  std::optional<double> common;
  for (const auto& c : couplings.terms()) {
    const auto& terms = result.report.per_coupling.at(c.env_label);
    const char alpha = c.system.letters[static_cast<std::size_t>(
        std::find_if(c.system.letters.begin(), c.system.letters.end(), [](char l) { return l != 'I'; }) -
        c.system.letters.begin())];
    if (alpha != 'Z') {
      if (!terms.empty()) {
        std::ostringstream os;
        os << c.env_label << " survives:";
        for (const auto& t : terms) os << " " << t.to_string();
        result.failures.push_back(os.str());
      }
      continue;
    }
    // z coupling: must be c * sum_j Z_j with real positive c
    const Matrix avg = rebuild(terms, seq.n);
    const double coeff = (pauli_overlap(std::string(c.system.letters), avg) / static_cast<double>(avg.rows())).real();
    if (!(coeff > kCancelThreshold) || max_abs(avg - coeff * collective) > kCancelThreshold) {
      std::ostringstream os;
      os << c.env_label << " is not collective:";
      for (const auto& t : terms) os << " " << t.to_string();
      result.failures.push_back(os.str());
      continue;
    }
    if (common && std::abs(*common - coeff) > kCancelThreshold)
      result.failures.push_back(c.env_label + " has a different collective coefficient");
    if (!common) common = coeff;
  }
  result.collective_coefficient = common.value_or(0.0);
  result.passed = result.failures.empty() && common.has_value();
  return result;
}

}  // namespace dualrail
