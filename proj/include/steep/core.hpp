#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace steep {

/// Invalid user-supplied configuration (bad temperature, radius, ladder...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// State handed to a density or kernel does not belong to its state space.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::size_t expected, std::size_t actual)
      : std::invalid_argument("dimension mismatch: expected d=" + std::to_string(expected) +
                              ", got d=" + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// A computation produced a value it must never produce (NaN density,
/// non-normalizable grid, failed quadrature).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using ContinuousState = std::vector<double>;

enum class SpaceKind { continuous, tree, discrete };

struct SpaceDescriptor {
  SpaceKind kind = SpaceKind::continuous;
  /// Dimension d, number of taxa, or number of discrete states.
  std::size_t size = 1;

  static SpaceDescriptor continuous(std::size_t d) { return {SpaceKind::continuous, d}; }
  static SpaceDescriptor tree(std::size_t n_taxa) { return {SpaceKind::tree, n_taxa}; }
  static SpaceDescriptor discrete(std::size_t n) { return {SpaceKind::discrete, n}; }
};

// Membership checks used by TargetDensity; overloaded per state type.
void check_state(const SpaceDescriptor& space, const ContinuousState& x);
inline void check_state(const SpaceDescriptor&, long) {}

/// Unnormalized log-density over a state space. Immutable after construction.
template <class State>
class TargetDensity {
 public:
  using LogDensityFn = std::function<double(const State&)>;

  TargetDensity(LogDensityFn fn, SpaceDescriptor space) : fn_(std::move(fn)), space_(space) {}

  /// Natural-log density up to a constant; -inf on zero-probability states.
  double log_density(const State& x) const {
    check_state(space_, x);
    const double v = fn_(x);
    if (std::isnan(v)) throw NumericalError("target log-density returned NaN");
    return v;
  }

  const SpaceDescriptor& space() const { return space_; }

 private:
  LogDensityFn fn_;
  SpaceDescriptor space_;
};

template <class State>
double log_density_at(const TargetDensity<State>& target, const State& x) {
  return target.log_density(x);
}

/// pi_t(x) proportional to pi(x)^(1/t).
template <class State>
class TemperedDensity {
 public:
  TemperedDensity(TargetDensity<State> base, double temperature)
      : base_(std::move(base)), t_(temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
      throw ConfigError("temperature must be a positive finite number, got " +
                        std::to_string(temperature));
    }
  }

  double log_density(const State& x) const { return base_.log_density(x) / t_; }
  double temperature() const { return t_; }
  const TargetDensity<State>& base() const { return base_; }

 private:
  TargetDensity<State> base_;
  double t_;
};

template <class State>
double tempered_log_density(const TemperedDensity<State>& td, const State& x) {
  return td.log_density(x);
}

/// log(sum(exp(v))) without overflow; -inf for an empty or all -inf input.
double log_sum_exp(const std::vector<double>& v);

/// Weighted mixture of axis-aligned Gaussians.
class MixtureTarget {
 public:
  struct Component {
    double weight;
    ContinuousState mean;
    std::vector<double> variance;  // diagonal covariance
  };

  explicit MixtureTarget(std::vector<Component> components);

  std::size_t dimension() const { return dim_; }
  const std::vector<Component>& components() const { return components_; }

  /// Log-sum-exp evaluation; finite for every finite state.
  double log_density(const ContinuousState& x) const;
  /// Plain summation of weighted densities, for cross-checking.
  double log_density_direct(const ContinuousState& x) const;
  /// Index of the component with the highest weighted density at x.
  std::size_t dominant_component(const ContinuousState& x) const;

  TargetDensity<ContinuousState> as_target() const;

 private:
  double component_log_density(std::size_t i, const ContinuousState& x) const;

  std::vector<Component> components_;
  std::size_t dim_;
};

/// 0.5 N(0, var I) + 0.5 N(mu2, var I) in two dimensions.
MixtureTarget needles_mixture(const ContinuousState& mu2 = {5.0, 5.0}, double variance = 0.01);

TargetDensity<ContinuousState> gaussian_target(const ContinuousState& mean, double variance);
/// Unit-rate exponential on [0, inf); -inf for negative x. One-dimensional.
TargetDensity<ContinuousState> exponential_target();
/// -[(a - u)^2 + b (v - u^2)^2] in shifted coordinates; optimum at (a, a^2) + shift.
TargetDensity<ContinuousState> rosenbrock_target(double a, double b, const ContinuousState& shift);
/// Constant density on the box [lo, hi]^d, -inf outside.
TargetDensity<ContinuousState> uniform_box_target(std::size_t d, double lo, double hi);

}  // namespace steep
