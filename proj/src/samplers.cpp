#include "steep/samplers.hpp"

#include <algorithm>
#include <cmath>

namespace steep {

TemperatureLadder::TemperatureLadder(std::vector<double> temperatures) : temps_(std::move(temperatures)) {
  if (temps_.size() < 2) throw ConfigError("a temperature ladder needs at least two rungs (H >= 1)");
  for (double t : temps_) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("ladder temperatures must be positive and finite");
  }
  const double tau = temps_[1] / temps_[0];
  if (!(tau > 1.0)) throw ConfigError("ladder temperatures must be strictly increasing");
  for (std::size_t k = 1; k < temps_.size(); ++k) {
    const double r = temps_[k] / temps_[k - 1];
    if (std::abs(r - tau) > 1e-9 * tau) {
      throw ConfigError("ladder is not geometric: ratio " + std::to_string(r) + " at rung " + std::to_string(k) +
                        " differs from " + std::to_string(tau));
    }
  }
}

TemperatureLadder TemperatureLadder::extended_below(std::size_t c) const {
  std::vector<double> t;
  t.reserve(temps_.size() + c);
  const double tau = ratio();
  for (std::size_t k = c; k >= 1; --k) t.push_back(temps_[0] / std::pow(tau, static_cast<double>(k)));
  t.insert(t.end(), temps_.begin(), temps_.end());
  return TemperatureLadder(std::move(t));
}

TemperatureLadder geometric_ladder(double t_hot, double tau) {
  if (!(t_hot > 1.0) || !std::isfinite(t_hot)) throw ConfigError("t_H must be > 1");
  if (!(tau > 1.0) || !std::isfinite(tau)) throw ConfigError("tau must be > 1");
  const auto h = std::max<long>(1, std::lround(std::log(t_hot) / std::log(tau)));
  const double exact_top = std::pow(tau, static_cast<double>(h));
  const bool exact = std::abs(exact_top - t_hot) <= 1e-9 * t_hot;
  const double ratio = exact ? tau : std::pow(t_hot, 1.0 / static_cast<double>(h));
  std::vector<double> temps{1.0};
  for (long k = 1; k <= h; ++k) temps.push_back(std::pow(ratio, static_cast<double>(k)));
  temps.back() = t_hot;
  return TemperatureLadder(std::move(temps));
}

void SteepConfig::validate() const {
  if (!(s > 0.0 && s < 1.0)) throw ConfigError("s must lie in (0, 1), got " + std::to_string(s));
  if (xi_thin == 0) throw ConfigError("xi_thin must be >= 1");
  if (lowest_chain >= ladder.size()) throw ConfigError("lowest_chain is beyond the ladder");
}

double convergence_rate_diagnostic(std::uint64_t n, double rho) {
  if (n < 2) throw ConfigError("convergence diagnostic needs n >= 2");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  const double nd = static_cast<double>(n);
  double best = std::numeric_limits<double>::infinity();
  double rho_k = 1.0;
  for (std::uint64_t k = 1; k < n; ++k) {
    rho_k *= rho;
    const double kd = static_cast<double>(k);
    const double v = kd / (nd - kd) + rho_k;
    best = std::min(best, v);
    // k/(n-k) alone already exceeds the best value: no later k can win.
    if (kd / (nd - kd) > best) break;
  }
  return best;
}

}  // namespace steep
