// dualrail: runs the memory, Ramsey, Bell, superdense-coding and
// sequence-verification experiments from a JSON config.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dualrail/experiments.hpp"
#include "dualrail/operator_core.hpp"

namespace {

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> shots;
  std::string out;
  std::string sequence;
  int n = 0;
};

dualrail::Json load_config(const RunOptions& opt, std::string_view experiment) {
  dualrail::Json j = dualrail::Json::object();
  if (!opt.config.empty()) {
    std::ifstream f(opt.config);
    if (!f) throw std::invalid_argument("cannot open config " + opt.config);
    try {
      j = dualrail::Json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument("config " + opt.config + ": " + e.what());
    }
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  if (j.contains("experiment") && j["experiment"] != std::string(experiment))
    throw std::invalid_argument("config is for experiment '" + j["experiment"].dump() + "', not '" + std::string(experiment) + "'");
  j["experiment"] = std::string(experiment);
  if (opt.seed) j["seed"] = *opt.seed;
  if (opt.shots) j["shots"] = *opt.shots;
  if (!opt.out.empty()) j["output"] = opt.out;
  if (!opt.sequence.empty()) j["sequence"]["name"] = opt.sequence;
  if (opt.n > 0) j["sequence"]["n"] = opt.n;
  return j;
}

void print_summary(const dualrail::ExperimentResult& res) {
  for (const auto& c : res.curves) {
    std::printf("%-40s", c.label.c_str());
    for (const auto& p : c.points) std::printf(" %.4f", p.value);
    std::printf("\n");
  }
  for (const auto& f : res.fits)
    std::printf("fit %-36s %-14s T2=%.4g us T1=%.4g us%s residual=%.3g\n", f.curve.c_str(),
                f.ramsey ? "ramseyEnvelope" : std::string(dualrail::decay_model_name(f.fit.model)).c_str(), f.fit.t2,
                f.fit.t1, f.fit.t1_fixed ? " (fixed)" : "", f.fit.residual);
  for (const auto& r : res.reference)
    std::printf("reference %-30s %g %s\n", r.quantity.c_str(), r.value, r.unit.c_str());
}

int run(const RunOptions& opt, std::string_view experiment) {
  auto cfg = dualrail::config_from_json(load_config(opt, experiment));
  if (cfg.output.empty()) cfg.output = "results/" + std::string(experiment) + ".json";
  const auto res = dualrail::run_experiment(cfg);
  print_summary(res);
  if (cfg.experiment == dualrail::ExperimentKind::VerifySequence)
    std::printf("%s: %s\n", res.extra["sequence"].get<std::string>().c_str(),
                res.extra["passed"].get<bool>() ? "PASS" : "FAIL");
  for (const auto& path : dualrail::write_result(res, cfg.output)) std::printf("wrote %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-rail logical qubit experiments under dynamical decoupling"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string chosen;
  for (const char* name : {"memory", "ramsey", "bell", "superdense", "verify-sequence"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "JSON config file");
    sub->add_option("--seed", opt.seed, "RNG seed (overrides the config)");
    sub->add_option("--shots", opt.shots, "Monte Carlo shots (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out, "result JSON path; CSVs are written next to it");
    if (std::string_view(name) == "verify-sequence") {
      sub->add_option("--sequence", opt.sequence, "sequence name (D2, D2STAR, D4, DN, D2PAR, SINGLE_ISWAP, FREE)");
      sub->add_option("--n", opt.n, "register size");
    }
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(opt, chosen);
  } catch (const dualrail::InvariantViolation& e) {
    std::fprintf(stderr, "internal invariant violated: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
