// steep: run the STEEP experiments and summarize their traces.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "steep/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitBands = 4;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::uint64_t> reps;
  std::optional<std::uint64_t> iters;
  std::optional<std::uint64_t> burn_in;
  std::optional<std::uint64_t> thin;
  std::optional<std::string> ladder;
  std::optional<double> s;
  std::optional<std::uint64_t> threads;
};

void add_experiment_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "master seed (required)");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--reps", f.reps, "repetitions");
  app->add_option("--iters", f.iters, "iterations after burn-in");
  app->add_option("--burn-in", f.burn_in, "burn-in iterations");
  app->add_option("--thin", f.thin, "trace thinning");
  app->add_option("--ladder", f.ladder, "t_H,tau | auto | list:t0,t1,...");
  app->add_option("--s", f.s, "long-range move probability");
  app->add_option("--threads", f.threads, "worker threads (0 = all cores)");
}

steep::RunConfig resolve(steep::Experiment e, const Flags& f) {
  auto cfg = f.config.empty() ? steep::RunConfig::defaults(e) : steep::load_config_file(f.config, e);
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out_dir = *f.out;
  if (f.reps) cfg.reps = *f.reps;
  if (f.iters) cfg.n_iter = *f.iters;
  if (f.burn_in) cfg.burn_in = *f.burn_in;
  if (f.thin) cfg.thin = *f.thin;
  if (f.ladder) cfg.ladder = steep::LadderSpec::parse(*f.ladder);
  if (f.s) cfg.s = *f.s;
  if (f.threads) cfg.threads = *f.threads;
  cfg.validate();
  return cfg;
}

void print_brief(const steep::RunConfig& cfg, const nlohmann::json& summary) {
  std::cout << "wrote " << cfg.out_dir << "/{config.json,seed.txt,"
            << (cfg.experiment == steep::Experiment::spectral_scan ? "scan.csv" : "trace.csv") << ",summary.json}\n";
  const auto& r = summary["results"];
  switch (cfg.experiment) {
    case steep::Experiment::needles: {
      const auto& p = summary["trace_summary"]["p_hat"];
      std::cout << "p_hat mean " << p["mean"] << " median " << p["median"] << " sd " << p["sd"] << " p05 "
                << p["p05"] << " p95 " << p["p95"] << "\n";
      if (summary["trace_summary"].contains("mode1_fraction")) {
        std::cout << "mode-1 occupancy mean " << summary["trace_summary"]["mode1_fraction"]["mean"] << "\n";
      }
      break;
    }
    case steep::Experiment::phylo:
      if (r.contains("mass_a")) std::cout << "mass A " << r["mass_a"] << " mass B " << r["mass_b"] << "\n";
      if (r.contains("oracle_tv")) std::cout << "TV to exact posterior " << r["oracle_tv"] << "\n";
      if (r.contains("baseline_visits_b")) std::cout << "baseline visits to B " << r["baseline_visits_b"] << "\n";
      break;
    case steep::Experiment::spectral_scan:
      std::cout << "slope E_c " << r["slope_ec"] << " slope S_c " << r["slope_sc"] << " pass " << r["pass"] << "\n";
      break;
    case steep::Experiment::optimize:
      std::cout << "within epsilon " << r["successes"] << "/" << r["repetitions"].size() << "\n";
      break;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STEEP tempered Small-World MCMC experiments"};
  app.require_subcommand(1);

  Flags flags;
  std::map<std::string, steep::Experiment> experiments{{"needles", steep::Experiment::needles},
                                                       {"phylo", steep::Experiment::phylo},
                                                       {"spectral-scan", steep::Experiment::spectral_scan},
                                                       {"optimize", steep::Experiment::optimize}};
  std::map<std::string, CLI::App*> subs;
  subs["needles"] = app.add_subcommand("needles", "two-needle Gaussian mixture reproduction");
  subs["phylo"] = app.add_subcommand("phylo", "eight-taxon two-tree phylogenetics reproduction");
  subs["spectral-scan"] = app.add_subcommand("spectral-scan", "exact spectral gap scaling and inequality suites");
  subs["optimize"] = app.add_subcommand("optimize", "STEEP with extra cold rungs as a global optimizer");
  for (auto& [_, sub] : subs) add_experiment_flags(sub, flags);

  std::string trace_path;
  std::optional<std::uint64_t> sum_burn_in;
  std::string sum_out;
  auto* summarize = app.add_subcommand("summarize", "recompute statistics from a trace CSV");
  summarize->add_option("trace", trace_path, "trace.csv path")->required();
  summarize->add_option("--burn-in", sum_burn_in, "override burn-in");
  summarize->add_option("--out", sum_out, "write the summary JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (summarize->parsed()) {
      const auto j = steep::summarize_trace_file(trace_path, sum_burn_in);
      if (sum_out.empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::ofstream out(sum_out);
        out << j.dump(2) << "\n";
      }
      return 0;
    }
    for (auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      const auto cfg = resolve(experiments.at(name), flags);
      const auto res = steep::run_experiment(cfg);
      print_brief(cfg, res.summary);
      if (cfg.experiment == steep::Experiment::spectral_scan && !res.bands_passed) {
        std::cerr << "spectral-scan: at least one acceptance band failed (see summary.json)\n";
        return kExitBands;
      }
      return 0;
    }
  } catch (const steep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const steep::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const steep::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
