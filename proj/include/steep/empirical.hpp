#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "steep/core.hpp"
#include "steep/rng.hpp"

namespace steep {

/// Append-only store of chain samples; uniform draws realize the empirical
/// measure xi_n = (1/n) sum_k delta(x_k).
///
/// Every call to push() advances an internal iteration counter. A state is
/// stored only when the counter is past `burn_in` and divisible by `thin`.
/// Each stored state may carry its untempered log-density so that consumers
/// do not re-evaluate the target.
template <class State>
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(std::uint64_t burn_in = 0, std::uint64_t thin = 1)
      : burn_in_(burn_in), thin_(thin) {
    if (thin == 0) throw ConfigError("thin must be >= 1");
  }

  /// Returns true when x was stored.
  bool push(const State& x, double log_density = std::numeric_limits<double>::quiet_NaN()) {
    ++counter_;
    if (counter_ <= burn_in_ || counter_ % thin_ != 0) return false;
    samples_.push_back(x);
    log_densities_.push_back(log_density);
    return true;
  }

  /// Index of a uniformly chosen stored sample; nullopt while empty.
  std::optional<std::size_t> draw_index(Rng& rng) const {
    if (samples_.empty()) return std::nullopt;
    return static_cast<std::size_t>(rng.uniform_index(samples_.size()));
  }

  std::optional<State> draw(Rng& rng) const {
    auto i = draw_index(rng);
    if (!i) return std::nullopt;
    return samples_[*i];
  }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::uint64_t pushes() const { return counter_; }
  std::uint64_t burn_in() const { return burn_in_; }
  std::uint64_t thin() const { return thin_; }
  const State& at(std::size_t i) const { return samples_.at(i); }
  double log_density_at(std::size_t i) const { return log_densities_.at(i); }
  const std::vector<State>& samples() const { return samples_; }

 private:
  std::uint64_t burn_in_;
  std::uint64_t thin_;
  std::uint64_t counter_ = 0;
  std::vector<State> samples_;
  std::vector<double> log_densities_;
};

template <class State>
std::optional<State> draw(const EmpiricalMeasure<State>& m, Rng& rng) {
  return m.draw(rng);
}

/// Upper bound on ||xi_n - xi_{n-1}||_V after one push:
/// (V(x_new) + mean of V over the previous samples) / n.
/// With no previous samples the mean term is taken as V(x_new), i.e. 2 V(x_new).
template <class State>
double measure_drift(const EmpiricalMeasure<State>& prev, const EmpiricalMeasure<State>& next,
                     const std::function<double(const State&)>& v) {
  if (next.size() != prev.size() + 1) {
    throw std::invalid_argument("measure_drift expects exactly one stored push between measures");
  }
  const State& x_new = next.at(next.size() - 1);
  const double v_new = v(x_new);
  double mean_prev = v_new;
  if (!prev.empty()) {
    double acc = 0.0;
    for (const auto& s : prev.samples()) acc += v(s);
    mean_prev = acc / static_cast<double>(prev.size());
  }
  return (v_new + mean_prev) / static_cast<double>(next.size());
}

/// Running form of measure_drift for long streams: O(1) per stored sample.
template <class State>
class DriftMonitor {
 public:
  explicit DriftMonitor(std::function<double(const State&)> v) : v_(std::move(v)) {}

  /// Call after each stored push with the newly stored state; returns the drift bound.
  double observe(const State& x_new) {
    const double v_new = v_(x_new);
    const double mean_prev = n_ == 0 ? v_new : sum_ / static_cast<double>(n_);
    sum_ += v_new;
    ++n_;
    return (v_new + mean_prev) / static_cast<double>(n_);
  }

 private:
  std::function<double(const State&)> v_;
  double sum_ = 0.0;
  std::uint64_t n_ = 0;
};

/// Binary dump of a continuous sample store: 8-byte magic "STEEPXI1", u32
/// version, u64 dimension, u64 count, then count*dimension doubles
/// (host byte order).
void write_measure(std::ostream& out, const EmpiricalMeasure<ContinuousState>& m);
/// Loads a dump into a measure with burn_in 0, thin 1.
EmpiricalMeasure<ContinuousState> read_measure(std::istream& in);

}  // namespace steep
