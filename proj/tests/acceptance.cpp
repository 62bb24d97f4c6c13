// Acceptance checks: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dualrail/experiments.hpp"
#include "dualrail/fit.hpp"
#include "dualrail/logical.hpp"
#include "dualrail/sim.hpp"
#include "dualrail/toggling.hpp"

using namespace dualrail;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s [%2d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const DecayFit* find_fit(const ExperimentResult& res, const std::string& curve, DecayModel model) {
  for (const auto& f : res.fits)
    if (f.curve == curve && f.fit.model == model) return &f.fit;
  return nullptr;
}

double logical_fidelity(const Schedule& sched, const NoiseConfig& cfg, std::size_t shots) {
  const auto reg = LogicalRegister::standard(1);
  const auto lc = simulate_logical_channel(sched, cfg, shots, reg);
  PauliFrame frame(reg);
  for (const auto& e : sched.events) frame.absorb(e.gates);
  return process_fidelity(lc.channel, frame.correction());
}

ExperimentResult memory_run(const std::string& seq, std::size_t shots) {
  auto cfg = ExperimentConfig::defaults(ExperimentKind::Memory);
  cfg.sequence.name = seq;
  cfg.shots = shots;
  return run_memory(cfg);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  report(1, "D2 symmetrization", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = verify_symmetrization(build_sequence("D2", 2, 1.0, 1));
    double worst = 0.0;
    const Matrix collective = 0.5 * (pauli_matrix("ZI") + pauli_matrix("IZ"));
    for (const auto& [label, terms] : res.report.per_coupling) {
      const Matrix avg = rebuild(terms, 2);
      const bool is_z = label.rfind("E_z", 0) == 0;
      worst = std::max(worst, max_abs(avg - (is_z ? collective : Matrix::Zero(4, 4))));
    }
    const double secs = elapsed_since(t0);
    return Outcome{res.passed && worst <= 1e-10 && secs < 1.0,
                   "passed=" + std::string(res.passed ? "yes" : "no") + ", c=" + fmt("%.12g", res.collective_coefficient) +
                       ", max coefficient error=" + fmt("%.2e", worst)};
  });

  report(2, "D4 and DN(6) symmetrization", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto d4 = verify_symmetrization(build_sequence("D4", 4, 1.0, 1));
    const auto d6 = verify_symmetrization(build_sequence("DN", 6, 1.0, 1));
    const double secs = elapsed_since(t0);
    const bool ok = d4.passed && d6.passed && std::abs(d4.collective_coefficient - 0.25) < 1e-10 &&
                    std::abs(d6.collective_coefficient - 1.0 / 6.0) < 1e-10 && secs < 5.0;
    return Outcome{ok, "D4 c=" + fmt("%.12g", d4.collective_coefficient) + ", DN(6) c=" + fmt("%.12g", d6.collective_coefficient)};
  });

  report(3, "iSWAP algebra", [] {
    const std::vector<int> p{0, 1};
    const Matrix u = gate_matrix(GateKind::ISWAP, p, 2);
    const Matrix s = gate_matrix(GateKind::SQRT_ISWAP, p, 2);
    const double a = max_abs(u * u - pauli_matrix("ZZ"));
    const double b = max_abs(u * u * u * u - identity(2));
    const double c = max_abs(s * s - u);
    return Outcome{std::max({a, b, c}) <= 1e-12,
                   "|iSWAP^2-ZZ|=" + fmt("%.1e", a) + ", |iSWAP^4-I|=" + fmt("%.1e", b) + ", |sqrt^2-iSWAP|=" + fmt("%.1e", c)};
  });

  report(4, "single-qubit identity fidelity vs (2e^-(t/T2)^2 + e^-t/T1 + 1)/4", [] {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = NoiseConfig::defaults(1);
    cfg.t1 = {20.0};
    cfg.t2 = {3.8};
    cfg.transverse_fraction = 0.0;
    double worst = 0.0, worst_tau = 0.0;
    for (int k = 0; k < 12; ++k) {
      const double tau = 0.5 * (k + 1);
      const auto est = monte_carlo_channel(Schedule::idle(1, tau), cfg, 200000);
      const double f = process_fidelity(est, identity(1));
      const double law = 0.25 * (2.0 * std::exp(-(tau / 3.8) * (tau / 3.8)) + std::exp(-tau / 20.0) + 1.0);
      const double rel = std::abs(f - law) / law;
      if (rel > worst) worst = rel, worst_tau = tau;
    }
    const double secs = elapsed_since(t0);
    return Outcome{worst <= 0.005 && secs < 30.0,
                   "max relative deviation " + fmt("%.4f", worst) + " at tau=" + fmt("%.1f", worst_tau) + " us (limit 0.005)"};
  });

  report(5, "DFS immunity under collective dephasing", [] {
    auto cfg = NoiseConfig::defaults(2);
    cfg.t1 = {kInfinity, kInfinity};
    cfg.t2 = {3.8, 3.8};
    cfg.z_correlation = 1.0;
    cfg.transverse_fraction = 0.0;
    double worst = 0.0;
    for (int k = 0; k < 12; ++k) {
      const double tau = 0.5 * (k + 1);
      worst = std::max(worst, std::abs(1.0 - logical_fidelity(Schedule::idle(2, tau), cfg, 2000)));
      worst = std::max(worst, std::abs(1.0 - logical_fidelity(Schedule::from_sequence(build_sequence("D2", 2, tau, 1)), cfg, 2000)));
    }
    return Outcome{worst <= 1e-6, "max |1-F| = " + fmt("%.2e", worst)};
  });

  ExperimentResult mem_d2, mem_d2s;
  bool have_memory = false;
  report(6, "protection ordering at 1e4 shots", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    mem_d2 = memory_run("D2", 10000);
    mem_d2s = memory_run("D2STAR", 10000);
    have_memory = true;
    const double secs = elapsed_since(t0);
    const auto* f_star = find_fit(mem_d2s, "logical_D2STAR_L1", DecayModel::ExponentialT2);
    const auto* f_d2 = find_fit(mem_d2, "logical_D2_L1", DecayModel::ExponentialT2);
    const auto* f_un = find_fit(mem_d2, "logical_unprotected_L1", DecayModel::ExponentialT2);
    const auto* q1 = find_fit(mem_d2, "physical_Q1", DecayModel::GaussianT2);
    const auto* q2 = find_fit(mem_d2, "physical_Q2", DecayModel::GaussianT2);
    if (!f_star || !f_d2 || !f_un || !q1 || !q2) return Outcome{false, "missing fit"};
    const double best_phys = std::max(q1->t2, q2->t2);
    const bool ok = f_star->t2 >= f_d2->t2 && f_d2->t2 > f_un->t2 && f_d2->t2 >= 1.5 * best_phys && secs < 120.0;
    return Outcome{ok, "T2p(D2*)=" + fmt("%.3f", f_star->t2) + ", T2p(D2)=" + fmt("%.3f", f_d2->t2) + ", T2un=" +
                           fmt("%.3f", f_un->t2) + ", best physical T2=" + fmt("%.3f", best_phys) + " us"};
  });

  report(7, "unprotected logical below each physical qubit", [&] {
    if (!have_memory) mem_d2 = memory_run("D2", 10000);
    const auto& l = mem_d2.curve("logical_unprotected_L1").points;
    const auto& p1 = mem_d2.curve("physical_Q1").points;
    const auto& p2 = mem_d2.curve("physical_Q2").points;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < l.size(); ++k) {
      if (l[k].tau <= 0.0) continue;
      margin = std::min({margin, p1[k].value - l[k].value, p2[k].value - l[k].value});
    }
    return Outcome{margin > 0.0, "smallest physical-minus-logical gap " + fmt("%.4f", margin)};
  });

  report(8, "logical gate correctness", [] {
    const auto r1 = LogicalRegister::standard(1);
    const auto r2 = LogicalRegister::standard(2);
    const Matrix rx = restrict_to_codespace(
        circuit_unitary(compile_logical_op({LogicalGateKind::RXM90, {0}, std::nullopt, 0.0}, r1), 2), r1);
    const Matrix target = std::cos(kPi / 4) * identity(1) + cd(0, std::sin(kPi / 4)) * pauli_matrix("X");
    const double e_rx = max_abs(rx - target);
    const Matrix cz = restrict_to_codespace(
        circuit_unitary(compile_logical_op({LogicalGateKind::CZ, {0, 1}, std::nullopt, 0.0}, r2), 4), r2);
    Matrix czt = identity(2);
    czt(3, 3) = -1.0;
    const double e_cz = phase_distance(cz, czt);
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> kind(0, 5), target_q(0, 1);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    double e_rand = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      LogicalCircuit c;
      c.num_logical = 2;
      for (int g = 0; g < 6; ++g) {
        switch (kind(rng)) {
          case 0: c.ops.push_back({LogicalGateKind::RZ, {target_q(rng)}, angle(rng), 0.0}); break;
          case 1: c.ops.push_back({LogicalGateKind::RXM90, {target_q(rng)}, std::nullopt, 0.0}); break;
          case 2: c.ops.push_back({LogicalGateKind::H, {target_q(rng)}, std::nullopt, 0.0}); break;
          case 3: c.ops.push_back({LogicalGateKind::X, {target_q(rng)}, std::nullopt, 0.0}); break;
          case 4: c.ops.push_back({LogicalGateKind::Z, {target_q(rng)}, std::nullopt, 0.0}); break;
          default: c.ops.push_back({LogicalGateKind::CZ, {0, 1}, std::nullopt, 0.0}); break;
        }
      }
      const Matrix u = circuit_unitary(compile_logical(c, r2), 4);
      e_rand = std::max(e_rand, phase_distance(restrict_to_codespace(u, r2), c.unitary()));
    }
    return Outcome{e_rx <= 1e-12 && e_cz <= 1e-12 && e_rand <= 1e-10,
                   "RXM90 " + fmt("%.1e", e_rx) + ", CZ " + fmt("%.1e", e_cz) + ", random circuits " + fmt("%.1e", e_rand)};
  });

  report(9, "fit self-consistency", [] {
    double worst = 0.0;
    auto check = [&](DecayModel model, double t2) {
      std::vector<DecayPoint> pts;
      for (int k = 0; k < 12; ++k) {
        const double tau = 0.5 * (k + 1);
        pts.push_back({tau, decay_model_value(model, tau, t2, 20.0)});
      }
      worst = std::max(worst, std::abs(fit_decay(pts, model).t2 - t2) / t2);
    };
    for (double t2 : {3.8, 4.1, 4.2}) check(DecayModel::GaussianT2, t2);
    for (double t2p : {9.2, 12.5, 15.0}) check(DecayModel::ExponentialT2, t2p);
    return Outcome{worst <= 0.005, "max relative error " + fmt("%.2e", worst)};
  });

  report(10, "Ramsey consistency", [&] {
    auto cfg = ExperimentConfig::defaults(ExperimentKind::Ramsey);
    cfg.detuning = kPi;
    auto quiet = cfg;
    quiet.noise = NoiseConfig::none(2);
    quiet.shots = 4;
    const auto ideal = run_ramsey(quiet);
    double worst = 0.0;
    for (const auto& p : ideal.curve("ramsey_L1").points) worst = std::max(worst, std::abs(p.value + std::cos(kPi * p.tau)));
    const auto noisy = run_ramsey(cfg);
    if (!have_memory) mem_d2 = memory_run("D2", 10000);
    const auto* env = find_fit(noisy, "ramsey_L1", DecayModel::ExponentialT2);
    const auto* mem = find_fit(mem_d2, "logical_D2_L1", DecayModel::ExponentialT2);
    if (!env || !mem) return Outcome{false, "missing fit"};
    const double rel = std::abs(env->t2 - mem->t2) / mem->t2;
    return Outcome{worst <= 1e-6 && rel <= 0.10, "noiseless max |<Z>+cos| " + fmt("%.1e", worst) + ", envelope T2p " +
                                                     fmt("%.3f", env->t2) + " vs memory " + fmt("%.3f", mem->t2) +
                                                     " us (rel " + fmt("%.3f", rel) + ")"};
  });

  report(11, "Bell preparation", [] {
    auto cfg = ExperimentConfig::defaults(ExperimentKind::Bell);
    auto quiet = cfg;
    quiet.noise = NoiseConfig::none(4);
    quiet.shots = 4;
    const auto ideal = run_bell(quiet);
    const double f_ideal = ideal.curve("bell_compiled").points.at(0).value;
    cfg.gate_error_rate = 0.002;
    const auto noisy = run_bell(cfg);
    const double fc = noisy.curve("bell_compiled").points.at(0).value;
    const double fe = noisy.curve("bell_encode_last").points.at(0).value;
    return Outcome{std::abs(f_ideal - 1.0) <= 1e-10 && fe >= fc,
                   "noiseless " + fmt("%.12f", f_ideal) + ", compiled " + fmt("%.4f", fc) + ", encode-last " + fmt("%.4f", fe)};
  });

  report(12, "superdense coding", [] {
    auto zero = ExperimentConfig::defaults(ExperimentKind::Superdense);
    zero.noise = NoiseConfig::none(4);
    zero.tau_grid = {0.0};
    zero.shots = 4;
    const auto z = run_superdense(zero);
    double worst = 0.0;
    for (const char* v : {"physical", "logical"})
      for (const char* m : {"I", "X", "Z", "XZ"})
        worst = std::max(worst, std::abs(1.0 - z.curve(std::string("superdense_") + v + "_" + m).points.at(0).value));

    auto cfg = ExperimentConfig::defaults(ExperimentKind::Superdense);
    cfg.shots = 1000;
    const auto ideal = run_superdense(cfg);
    auto crossover = [](const ExperimentResult& r) -> std::optional<double> {
      const auto& p = r.curve("superdense_physical").points;
      const auto& l = r.curve("superdense_logical").points;
      for (std::size_t i = 0; i < p.size(); ++i) {
        bool all = true;
        for (std::size_t j = i; j < p.size(); ++j) all = all && l[j].value > p[j].value;
        if (all) return i == 0 ? 0.0 : p[i - 1].tau;
      }
      return std::nullopt;
    };
    const auto star = crossover(ideal);
    cfg.gate_error_rate = 0.002;
    const auto gated = run_superdense(cfg);
    const double p0 = gated.curve("superdense_physical").points.at(0).value;
    const double l0 = gated.curve("superdense_logical").points.at(0).value;
    const auto star_gated = crossover(gated);
    const bool ok = worst <= 1e-10 && star.has_value() && p0 > l0;
    return Outcome{ok, "tau=0 max |1-P| " + fmt("%.1e", worst) + ", ideal-gate crossover " +
                           (star ? "after tau=" + fmt("%.2f", *star) : std::string("none")) + ", with gate error: physical " +
                           fmt("%.4f", p0) + " vs logical " + fmt("%.4f", l0) + " at tau=" +
                           fmt("%.2f", gated.curve("superdense_physical").points.at(0).tau) + ", crossover " +
                           (star_gated ? "after tau=" + fmt("%.2f", *star_gated) : std::string("none"))};
  });

  report(13, "determinism", [] {
    const auto dir = std::filesystem::temp_directory_path() / "dualrail_acceptance";
    std::filesystem::create_directories(dir);
    bool same = true;
    std::string detail;
    for (auto kind : {ExperimentKind::Memory, ExperimentKind::Bell, ExperimentKind::Superdense}) {
      auto cfg = ExperimentConfig::defaults(kind);
      cfg.shots = 150;
      if (kind == ExperimentKind::Superdense) cfg.tau_grid = {0.5, 1.0};
      const std::string a = (dir / (std::string(experiment_name(kind)) + "_a.json")).string();
      const std::string b = (dir / (std::string(experiment_name(kind)) + "_b.json")).string();
      write_result(run_experiment(cfg), a);
      write_result(run_experiment(cfg), b);
      const bool eq = read_file(a) == read_file(b) && !read_file(a).empty();
      same = same && eq;
      detail += std::string(experiment_name(kind)) + (eq ? " identical; " : " DIFFERS; ");
    }
    std::filesystem::remove_all(dir);
    return Outcome{same, detail};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
