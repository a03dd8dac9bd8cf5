#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "steep/core.hpp"

namespace steep {

/// One trace row. `kind` is "local", "long", or "init" for the starting state
/// written at iteration 0. Continuous states fill `coords`, trees `tree`.
struct TraceRecord {
  std::uint64_t rep = 0;
  std::size_t chain = 0;
  std::uint64_t iter = 0;
  std::string kind;
  bool accepted = false;
  double log_density = 0.0;
  std::vector<double> coords;
  std::string tree;
};

enum class StateFormat { coords, newick };

/// Malformed trace input; the message starts with "line N:".
class TraceError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// rep,chain,iter,kind,accepted,log_density,state_0..state_{d-1} (or a quoted "state" newick column).
std::string trace_header(StateFormat format, std::size_t dim);
/// Appends one CSV line; doubles use the shortest round-trip representation.
void append_trace_row(std::string& out, const TraceRecord& r, StateFormat format);

struct ParsedTrace {
  StateFormat format = StateFormat::coords;
  std::size_t dim = 0;
  std::vector<TraceRecord> records;
};

/// Parses a trace; throws TraceError with the offending line number.
ParsedTrace read_trace(std::istream& in);

struct SummaryOptions {
  std::uint64_t burn_in = 0;
  /// Needles region A: ball around `region_center`.
  std::optional<std::vector<double>> region_center;
  double region_radius = 0.05;
  /// Second mode center; enables the nearest-mode occupancy statistic.
  std::optional<std::vector<double>> other_center;
};

/// mean, median, sample sd, 5th and 95th percentiles (linear interpolation).
/// All zero for empty input.
nlohmann::json describe(std::vector<double> values);

/// Deterministic statistics over trace records: acceptance per chain and move
/// kind, and over the coldest chain (chain 0) after burn-in the region-A
/// fraction per repetition or the topology frequency table.
nlohmann::json summarize_records(const std::vector<TraceRecord>& records, StateFormat format,
                                 const SummaryOptions& opt);

}  // namespace steep
