#include "steep/core.hpp"

#include <algorithm>
#include <numbers>

namespace steep {

void check_state(const SpaceDescriptor& space, const ContinuousState& x) {
  if (space.kind != SpaceKind::continuous) {
    throw std::invalid_argument("continuous state passed to a non-continuous target");
  }
  if (x.size() != space.size) throw DimensionError(space.size, x.size());
}

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return kNegInf;
  const double m = *std::max_element(v.begin(), v.end());
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double e : v) acc += std::exp(e - m);
  return m + std::log(acc);
}

MixtureTarget::MixtureTarget(std::vector<Component> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("mixture needs at least one component");
  dim_ = components_.front().mean.size();
  if (dim_ == 0) throw ConfigError("mixture dimension must be >= 1");
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw ConfigError("mixture weights must be strictly positive");
    if (c.mean.size() != dim_ || c.variance.size() != dim_) {
      throw ConfigError("mixture component dimensions disagree");
    }
    for (double v : c.variance) {
      if (!(v > 0.0)) throw ConfigError("mixture variances must be strictly positive");
    }
  }
}

double MixtureTarget::component_log_density(std::size_t i, const ContinuousState& x) const {
  const auto& c = components_[i];
  double acc = std::log(c.weight);
  for (std::size_t k = 0; k < dim_; ++k) {
    const double z = x[k] - c.mean[k];
    acc += -0.5 * z * z / c.variance[k] - 0.5 * std::log(2.0 * std::numbers::pi * c.variance[k]);
  }
  return acc;
}

double MixtureTarget::log_density(const ContinuousState& x) const {
  if (x.size() != dim_) throw DimensionError(dim_, x.size());
  std::vector<double> terms(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) terms[i] = component_log_density(i, x);
  return log_sum_exp(terms);
}

double MixtureTarget::log_density_direct(const ContinuousState& x) const {
  if (x.size() != dim_) throw DimensionError(dim_, x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    sum += std::exp(component_log_density(i, x));
  }
  return std::log(sum);
}

std::size_t MixtureTarget::dominant_component(const ContinuousState& x) const {
  std::size_t best = 0;
  double best_v = kNegInf;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const double v = component_log_density(i, x);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return best;
}

TargetDensity<ContinuousState> MixtureTarget::as_target() const {
  MixtureTarget copy = *this;
  return TargetDensity<ContinuousState>(
      [m = std::move(copy)](const ContinuousState& x) { return m.log_density(x); },
      SpaceDescriptor::continuous(dim_));
}

MixtureTarget needles_mixture(const ContinuousState& mu2, double variance) {
  if (mu2.size() != 2) throw DimensionError(2, mu2.size());
  return MixtureTarget({{0.5, {0.0, 0.0}, {variance, variance}},
                        {0.5, mu2, {variance, variance}}});
}

TargetDensity<ContinuousState> gaussian_target(const ContinuousState& mean, double variance) {
  if (!(variance > 0.0)) throw ConfigError("gaussian variance must be positive");
  const std::size_t d = mean.size();
  const double log_norm = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * variance);
  return TargetDensity<ContinuousState>(
      [mean, variance, log_norm](const ContinuousState& x) {
        double q = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) q += (x[k] - mean[k]) * (x[k] - mean[k]);
        return log_norm - 0.5 * q / variance;
      },
      SpaceDescriptor::continuous(d));
}

TargetDensity<ContinuousState> exponential_target() {
  return TargetDensity<ContinuousState>(
      [](const ContinuousState& x) { return x[0] < 0.0 ? kNegInf : -x[0]; },
      SpaceDescriptor::continuous(1));
}

TargetDensity<ContinuousState> rosenbrock_target(double a, double b, const ContinuousState& shift) {
  if (shift.size() != 2) throw DimensionError(2, shift.size());
  return TargetDensity<ContinuousState>(
      [a, b, shift](const ContinuousState& x) {
        const double u = x[0] - shift[0];
        const double v = x[1] - shift[1];
        return -((a - u) * (a - u) + b * (v - u * u) * (v - u * u));
      },
      SpaceDescriptor::continuous(2));
}

TargetDensity<ContinuousState> uniform_box_target(std::size_t d, double lo, double hi) {
  return TargetDensity<ContinuousState>(
      [lo, hi](const ContinuousState& x) {
        for (double v : x) {
          if (v < lo || v > hi) return kNegInf;
        }
        return 0.0;
      },
      SpaceDescriptor::continuous(d));
}

}  // namespace steep
