#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "json.hpp"
#include "steep/config.hpp"
#include "steep/trace.hpp"

namespace steep {

/// What a driver hands back to the CLI. `bands_passed` is only meaningful for
/// spectral-scan; the other drivers report and never judge.
struct ExperimentResult {
  nlohmann::json summary;
  bool bands_passed = true;
};

/// Per-repetition seed; repetition r draws every stream from (rep_seed(seed, r), chain).
std::uint64_t rep_seed(std::uint64_t seed, std::uint64_t rep);

/// Runs fn(0..n-1) on a pool of `threads` workers (0 = hardware concurrency).
/// The first exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::uint64_t n, std::uint64_t threads, const std::function<void(std::uint64_t)>& fn);

/// Each driver validates `cfg`, creates cfg.out_dir, and writes config.json,
/// seed.txt, trace.csv (scan.csv for spectral-scan) and summary.json there.
ExperimentResult run_needles(const RunConfig& cfg);
ExperimentResult run_phylo(const RunConfig& cfg);
ExperimentResult run_spectral_scan(const RunConfig& cfg);
ExperimentResult run_optimize(const RunConfig& cfg);
ExperimentResult run_experiment(const RunConfig& cfg);

/// Recomputes the trace-derived summary of a trace file. When a config.json
/// sits next to the trace its burn-in and region settings are used unless
/// `burn_in_override` is given.
nlohmann::json summarize_trace_file(const std::string& trace_path, std::optional<std::uint64_t> burn_in_override = {});

/// Summary options implied by a run configuration.
SummaryOptions summary_options(const RunConfig& cfg);

}  // namespace steep
