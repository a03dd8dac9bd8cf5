#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "steep/core.hpp"
#include "steep/samplers.hpp"

namespace steep {

/// How the temperature ladder is chosen: (t_H, tau), an explicit list, or pilot tuning.
struct LadderSpec {
  enum class Kind { geometric, explicit_list, auto_tune };
  Kind kind = Kind::geometric;
  double t_hot = 7776.0;
  double tau = 6.0;
  std::vector<double> temperatures;

  /// "t_H,tau", "auto", or "t0,t1,...,tH" (three or more values, or "list:" prefix).
  static LadderSpec parse(const std::string& text);
  std::string to_string() const;
  /// Resolves to concrete temperatures; auto_tune is handled by the caller.
  TemperatureLadder resolve() const;
};

enum class Experiment { needles, phylo, spectral_scan, optimize };

const char* to_string(Experiment e);
Experiment parse_experiment(const std::string& name);

/// Fully resolved experiment configuration. Every field has a per-experiment
/// default; a JSON file and then CLI flags override them.
struct RunConfig {
  Experiment experiment = Experiment::needles;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "steep_out";
  std::uint64_t reps = 100;
  std::uint64_t n_iter = 10000;
  std::uint64_t burn_in = 1000;
  std::uint64_t thin = 10;
  std::uint64_t xi_thin = 1;
  double s = 0.33;
  LadderSpec ladder;
  /// 0 picks the hardware concurrency.
  std::uint64_t threads = 0;
  /// "cold" traces the coldest chain only, "all" every chain.
  std::string trace_chains = "cold";

  // needles / optimize targets
  std::string target = "needles";  // needles | rosenbrock
  std::vector<double> mu2{5.0, 5.0};
  double variance = 0.01;
  double ball_delta = 0.1;
  double cauchy_gamma = 1.0;
  std::vector<double> region_center{0.0, 0.0};
  double region_radius = 0.05;
  std::vector<double> initial{0.0, 0.0};

  // optimize
  std::uint64_t extra_cold = 3;
  double epsilon = 0.05;
  double rosen_a = 1.0;
  double rosen_b = 5.0;
  std::vector<double> rosen_shift{2.0, -1.0};

  // phylo
  std::string fasta;  // empty: simulate the two-tree alignment
  std::uint64_t block_sites = 1000;
  std::uint64_t baseline_steps = 1000000;
  double compound_p = 0.5;
  bool oracle = true;
  /// Redraw the simulated alignment until A and B beat every NNI neighbor.
  bool separated_modes = true;

  // spectral-scan
  std::uint64_t grid_states = 1200;
  double mode_a = 300.0;
  double mode_b = 900.0;
  double mode_scale = 2.0;
  std::vector<double> temperatures{1.0, 2.0, 4.0, 8.0, 16.0};
  std::uint64_t suite_instances = 100;
  std::uint64_t exact_conductance_states = 0;  // >0 requests exact h on an n-state grid chain

  static RunConfig defaults(Experiment e);
  /// Applies keys of `j` on top of this config; unknown keys are an error.
  void merge(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Throws ConfigError on the first invalid field.
  void validate() const;
};

RunConfig load_config_file(const std::string& path, Experiment e);

}  // namespace steep
