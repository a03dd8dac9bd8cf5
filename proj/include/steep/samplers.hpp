#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "steep/core.hpp"
#include "steep/empirical.hpp"
#include "steep/proposals.hpp"
#include "steep/rng.hpp"

namespace steep {

struct AcceptCounts {
  std::uint64_t local_acc = 0;
  std::uint64_t local_tot = 0;
  std::uint64_t long_acc = 0;
  std::uint64_t long_tot = 0;

  void record(MoveKind kind, bool accepted) {
    if (kind == MoveKind::local) {
      ++local_tot;
      local_acc += accepted;
    } else {
      ++long_tot;
      long_acc += accepted;
    }
  }
  double local_rate() const { return local_tot ? static_cast<double>(local_acc) / static_cast<double>(local_tot) : 0.0; }
  double long_rate() const { return long_tot ? static_cast<double>(long_acc) / static_cast<double>(long_tot) : 0.0; }
};

/// One chain of a sampler. `log_pi` caches the untempered log pi(current);
/// the chain targets pi^(1/temperature).
template <class State>
struct ChainState {
  State current;
  double log_pi = kNegInf;
  double temperature = 1.0;
  AcceptCounts counts;

  double tempered_log_pi() const { return log_pi == kNegInf ? kNegInf : log_pi / temperature; }
};

template <class State>
ChainState<State> make_chain(const TargetDensity<State>& target, State initial, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("chain temperature must be positive");
  const double lp = target.log_density(initial);
  return {std::move(initial), lp, temperature, {}};
}

struct StepOutcome {
  MoveKind kind = MoveKind::local;
  bool accepted = false;
};

/// Log Metropolis-Hastings ratio from tempered log-densities and a Hastings
/// correction. A -inf current state accepts any finite proposal; a -inf
/// proposal is always rejected.
inline double mh_log_ratio(double log_x, double log_y, double hastings) {
  if (log_y == kNegInf) return kNegInf;
  if (log_x == kNegInf) return std::numeric_limits<double>::infinity();
  return (log_y - log_x) + hastings;
}

/// Accepts with probability min(1, exp(log_a)). Always consumes one uniform.
inline bool accept_log(double log_a, Rng& rng) {
  const double u = rng.uniform();
  if (log_a >= 0.0) return true;
  return u < std::exp(log_a);
}

/// Log of the tempered-jump ratio pi_i(y) pi_j(x) / (pi_i(x) pi_j(y)) for a
/// colder chain at t_i proposing a sample of the hotter chain at t_j:
/// (1/t_i - 1/t_j)(log pi(y) - log pi(x)).
inline double tempered_jump_log_accept(double log_pi_x, double log_pi_y, double t_i, double t_j) {
  const double coef = 1.0 / t_i - 1.0 / t_j;
  if (coef == 0.0) return 0.0;
  if (log_pi_y == kNegInf) return kNegInf;
  if (log_pi_x == kNegInf) return std::numeric_limits<double>::infinity();
  return coef * (log_pi_y - log_pi_x);
}

/// One Metropolis-Hastings step of `c` on pi^(1/c.temperature).
template <class State>
StepOutcome mh_step(ChainState<State>& c, const TargetDensity<State>& target, const ProposalKernel<State>& kernel,
                    Rng& rng) {
  State y = kernel.sample(c.current, rng);
  const double lp_y = target.log_density(y);
  const double tempered_y = lp_y == kNegInf ? kNegInf : lp_y / c.temperature;
  const double hastings = kernel.symmetric ? 0.0 : kernel.log_ratio(c.current, y);
  const bool accepted = accept_log(mh_log_ratio(c.tempered_log_pi(), tempered_y, hastings), rng);
  if (accepted) {
    c.current = std::move(y);
    c.log_pi = lp_y;
  }
  c.counts.record(kernel.kind, accepted);
  return {kernel.kind, accepted};
}

/// Small-World step: the long-range kernel with probability s, else the local one.
template <class State>
StepOutcome small_world_step(ChainState<State>& c, const TargetDensity<State>& target,
                             const ProposalKernel<State>& local, const ProposalKernel<State>& long_range, double s,
                             ChainRng& rng) {
  const bool use_long = rng.choice.uniform() < s;
  return mh_step(c, target, use_long ? long_range : local, rng.move);
}

/// Geometric temperature ladder t_0 < t_1 < ... < t_H with constant ratio.
class TemperatureLadder {
 public:
  explicit TemperatureLadder(std::vector<double> temperatures);

  const std::vector<double>& temperatures() const { return temps_; }
  std::size_t size() const { return temps_.size(); }
  /// Index of the hottest chain.
  std::size_t top() const { return temps_.size() - 1; }
  double operator[](std::size_t k) const { return temps_[k]; }
  double ratio() const { return temps_[1] / temps_[0]; }

  /// Prepends t_0 / ratio^k for k = 1..C (the optimizer's cold tail).
  TemperatureLadder extended_below(std::size_t c) const;

 private:
  std::vector<double> temps_;
};

/// Ladder 1, tau, tau^2, ..., t_H with H = round(log t_H / log tau). When t_H is
/// not an exact power of tau the common ratio becomes t_H^(1/H).
TemperatureLadder geometric_ladder(double t_hot, double tau);

struct SteepConfig {
  TemperatureLadder ladder{{1.0, 2.0}};
  double s = 0.33;
  /// Iterations after burn-in; each chain runs burn_in + n_iter steps.
  std::uint64_t n_iter = 10000;
  std::uint64_t burn_in = 1000;
  /// Thinning applied when storing states into the empirical measures.
  std::uint64_t xi_thin = 1;
  std::uint64_t seed = 0;
  /// Lowest chain index that is simulated; hotter chains never depend on it.
  std::size_t lowest_chain = 0;

  void validate() const;
  std::uint64_t total_iterations() const { return burn_in + n_iter; }
};

template <class State>
struct SteepKernels {
  ProposalKernel<State> local;
  ProposalKernel<State> long_range;
};

/// Called once per chain per iteration, after the chain has moved.
template <class State>
using TraceSink = std::function<void(std::size_t chain, std::uint64_t iteration, const ChainState<State>&,
                                     const StepOutcome&)>;

template <class State>
struct SteepResult {
  std::vector<ChainState<State>> chains;
  std::vector<EmpiricalMeasure<State>> measures;
  std::uint64_t iterations = 0;
};

inline constexpr std::uint64_t kRecomputeInterval = 100000;

namespace detail {

template <class State>
void refresh_cached(ChainState<State>& c, const TargetDensity<State>& target) {
  const double fresh = target.log_density(c.current);
#ifndef NDEBUG
  const bool same = (fresh == c.log_pi) || std::abs(fresh - c.log_pi) <= 1e-8;
  if (!same) throw NumericalError("cached log-density drifted from recomputation");
#endif
  c.log_pi = fresh;
}

/// Colder-chain update of STEEP: a jump drawn from the hotter chain's
/// empirical measure with probability s (local move while it is empty).
template <class State>
StepOutcome sampling_chain_step(ChainState<State>& c, const TargetDensity<State>& target,
                                const ProposalKernel<State>& local, const EmpiricalMeasure<State>& hotter,
                                double t_hotter, double s, ChainRng& rng) {
  const bool use_long = rng.choice.uniform() < s;
  if (!use_long || hotter.empty()) return mh_step(c, target, local, rng.move);
  const std::size_t idx = *hotter.draw_index(rng.move);
  const double lp_y = hotter.log_density_at(idx);
  const double log_a = tempered_jump_log_accept(c.log_pi, lp_y, c.temperature, t_hotter);
  const bool accepted = accept_log(log_a, rng.move);
  if (accepted) {
    c.current = hotter.at(idx);
    c.log_pi = lp_y;
  }
  c.counts.record(MoveKind::long_range, accepted);
  return {MoveKind::long_range, accepted};
}

}  // namespace detail

/// Multi-chain STEEP. Every iteration sweeps chains H, H-1, ..., lowest_chain:
/// the hottest chain takes a Small-World step with the heavy-tailed kernel;
/// each colder chain i either moves locally or proposes a uniform draw from
/// xi^(i+1) (including the state pushed this iteration). Every chain pushes its
/// state to its own measure after moving.
template <class State>
SteepResult<State> steep_run(const TargetDensity<State>& target, const SteepConfig& cfg,
                             const SteepKernels<State>& kernels, const std::vector<State>& initial,
                             const TraceSink<State>& sink = {}) {
  cfg.validate();
  const std::size_t n_chains = cfg.ladder.size();
  if (initial.size() != 1 && initial.size() != n_chains) {
    throw ConfigError("need one initial state or one per chain");
  }
  SteepResult<State> out;
  std::vector<ChainRng> rngs;
  for (std::size_t i = 0; i < n_chains; ++i) {
    out.chains.push_back(make_chain(target, initial.size() == 1 ? initial[0] : initial[i], cfg.ladder[i]));
    out.measures.emplace_back(cfg.burn_in, cfg.xi_thin);
    rngs.emplace_back(cfg.seed, i);
  }
  const std::size_t h = cfg.ladder.top();
  const std::uint64_t total = cfg.total_iterations();
  for (std::uint64_t n = 1; n <= total; ++n) {
    auto& hot = out.chains[h];
    const auto o = small_world_step(hot, target, kernels.local, kernels.long_range, cfg.s, rngs[h]);
    out.measures[h].push(hot.current, hot.log_pi);
    if (sink) sink(h, n, hot, o);
    for (std::size_t i = h; i-- > cfg.lowest_chain;) {
      auto& c = out.chains[i];
      const auto oi = detail::sampling_chain_step(c, target, kernels.local, out.measures[i + 1], cfg.ladder[i + 1],
                                                  cfg.s, rngs[i]);
      out.measures[i].push(c.current, c.log_pi);
      if (sink) sink(i, n, c, oi);
    }
    if (n % kRecomputeInterval == 0) {
      for (std::size_t i = cfg.lowest_chain; i < n_chains; ++i) detail::refresh_cached(out.chains[i], target);
    }
  }
  out.iterations = total;
  return out;
}

/// Two-chain STEEP at temperatures (ladder[0], ladder[1]); the exploring chain
/// uses stream 1 and the sampling chain stream 0.
template <class State>
SteepResult<State> steep_two_chain_run(const TargetDensity<State>& target, const SteepConfig& cfg,
                                       const SteepKernels<State>& kernels, const State& initial,
                                       const TraceSink<State>& sink = {}) {
  cfg.validate();
  if (cfg.ladder.size() != 2) throw ConfigError("two-chain STEEP needs exactly two temperatures");
  SteepResult<State> out;
  out.chains.push_back(make_chain(target, initial, cfg.ladder[0]));
  out.chains.push_back(make_chain(target, initial, cfg.ladder[1]));
  out.measures.emplace_back(cfg.burn_in, cfg.xi_thin);
  out.measures.emplace_back(cfg.burn_in, cfg.xi_thin);
  ChainRng sampling_rng(cfg.seed, 0);
  ChainRng exploring_rng(cfg.seed, 1);
  auto& sampling = out.chains[0];
  auto& exploring = out.chains[1];
  auto& xi = out.measures[1];
  const std::uint64_t total = cfg.total_iterations();
  for (std::uint64_t n = 1; n <= total; ++n) {
    const auto oe = small_world_step(exploring, target, kernels.local, kernels.long_range, cfg.s, exploring_rng);
    xi.push(exploring.current, exploring.log_pi);
    if (sink) sink(1, n, exploring, oe);
    const auto os = detail::sampling_chain_step(sampling, target, kernels.local, xi, exploring.temperature, cfg.s,
                                                sampling_rng);
    out.measures[0].push(sampling.current, sampling.log_pi);
    if (sink) sink(0, n, sampling, os);
    if (n % kRecomputeInterval == 0) {
      detail::refresh_cached(sampling, target);
      detail::refresh_cached(exploring, target);
    }
  }
  out.iterations = total;
  return out;
}

struct TemperingConfig {
  double t_hot = 2.0;
  /// Probability of an independent MH update; a swap is attempted otherwise.
  double s = 0.33;
  std::uint64_t n_iter = 10000;
  std::uint64_t seed = 0;
};

/// Log swap ratio pi(x_h) pi_t(x_c) / (pi(x_c) pi_t(x_h)) from untempered log-densities.
inline double swap_log_accept(double log_pi_cold, double log_pi_hot, double t_hot) {
  return tempered_jump_log_accept(log_pi_cold, log_pi_hot, 1.0, t_hot);
}

/// Two-temperature replica exchange (the tempering baseline). Cold chain is
/// index 0, hot chain index 1; swap decisions use stream 2.
template <class State>
std::vector<ChainState<State>> tempering_baseline_run(const TargetDensity<State>& target, const TemperingConfig& cfg,
                                                      const ProposalKernel<State>& local, const State& initial,
                                                      const TraceSink<State>& sink = {}) {
  if (!(cfg.t_hot >= 1.0)) throw ConfigError("hot temperature must be >= 1");
  if (!(cfg.s > 0.0 && cfg.s < 1.0)) throw ConfigError("s must lie in (0, 1)");
  std::vector<ChainState<State>> chains{make_chain(target, initial, 1.0), make_chain(target, initial, cfg.t_hot)};
  ChainRng cold_rng(cfg.seed, 0);
  ChainRng hot_rng(cfg.seed, 1);
  ChainRng swap_rng(cfg.seed, 2);
  for (std::uint64_t n = 1; n <= cfg.n_iter; ++n) {
    StepOutcome oc, oh;
    if (swap_rng.choice.uniform() < cfg.s) {
      oc = mh_step(chains[0], target, local, cold_rng.move);
      oh = mh_step(chains[1], target, local, hot_rng.move);
    } else {
      // Swapping states with the hot chain is the tempered jump from cold to hot's state.
      const double log_a = swap_log_accept(chains[0].log_pi, chains[1].log_pi, cfg.t_hot);
      const bool accepted = accept_log(log_a, swap_rng.move);
      if (accepted) {
        std::swap(chains[0].current, chains[1].current);
        std::swap(chains[0].log_pi, chains[1].log_pi);
      }
      chains[0].counts.record(MoveKind::long_range, accepted);
      chains[1].counts.record(MoveKind::long_range, accepted);
      oc = oh = {MoveKind::long_range, accepted};
    }
    if (sink) {
      sink(1, n, chains[1], oh);
      sink(0, n, chains[0], oc);
    }
  }
  return chains;
}

struct TuneOptions {
  double floor = 0.2;
  std::uint64_t pilot_steps = 10000;
  double max_t = 1e9;
  double min_tau = 2.0;
  double s = 0.33;
  std::uint64_t seed = 0;
};

struct TuneReport {
  TemperatureLadder ladder{{1.0, 2.0}};
  double t_hot = 2.0;
  double tau = 2.0;
  double exploring_long_rate = 0.0;
  double sampling_jump_rate = 0.0;
};

/// Pilot-run ladder selection: doubles t until the Small-World chain on pi_t
/// accepts long-range moves at rate >= floor, then halves tau from t until a
/// two-chain pilot (t/tau, t) accepts sampling-chain jumps at rate >= floor.
template <class State>
TuneReport tune_ladder(const TargetDensity<State>& target, const SteepKernels<State>& kernels, const State& initial,
                       const TuneOptions& opt) {
  if (!(opt.floor >= 0.0 && opt.floor <= 1.0)) throw ConfigError("acceptance floor must lie in [0, 1]");
  TuneReport rep;
  double t = 2.0;
  std::uint64_t attempt = 0;
  for (;; t *= 2.0) {
    if (t > opt.max_t) {
      throw NumericalError("could not reach long-range acceptance " + std::to_string(opt.floor) +
                           " below t = " + std::to_string(opt.max_t) + "; consider rescaling the target");
    }
    auto c = make_chain(target, initial, t);
    ChainRng rng(opt.seed, 1000 + attempt++);
    for (std::uint64_t k = 0; k < opt.pilot_steps; ++k) {
      small_world_step(c, target, kernels.local, kernels.long_range, opt.s, rng);
    }
    rep.exploring_long_rate = c.counts.long_rate();
    if (rep.exploring_long_rate >= opt.floor) break;
  }
  double tau = t;
  for (;; tau /= 2.0) {
    if (tau < opt.min_tau) {
      tau = opt.min_tau;
      break;
    }
    SteepConfig cfg;
    cfg.ladder = TemperatureLadder({t / tau, t});
    cfg.s = opt.s;
    cfg.burn_in = opt.pilot_steps / 10;
    cfg.n_iter = opt.pilot_steps;
    cfg.seed = opt.seed + 7919 * (attempt++);
    auto res = steep_two_chain_run(target, cfg, kernels, initial);
    rep.sampling_jump_rate = res.chains[0].counts.long_rate();
    if (rep.sampling_jump_rate >= opt.floor) break;
  }
  rep.t_hot = t;
  rep.tau = tau;
  rep.ladder = geometric_ladder(t, tau);
  return rep;
}

template <class State>
struct OptimizeResult {
  State best;
  double best_log_pi = kNegInf;
  std::uint64_t best_iteration = 0;
  /// Coldest chain's state after every iteration.
  std::vector<State> cold_trace;
  SteepResult<State> run;
};

/// STEEP over the ladder extended by C colder rungs tau^-1 .. tau^-C; returns
/// the highest-density state the coldest chain ever visited.
template <class State>
OptimizeResult<State> optimize_run(const TargetDensity<State>& target, SteepConfig cfg, std::size_t c_extra,
                                   const SteepKernels<State>& kernels, const State& initial,
                                   const TraceSink<State>& sink = {}) {
  cfg.ladder = cfg.ladder.extended_below(c_extra);
  OptimizeResult<State> out{initial, target.log_density(initial), 0, {}, {}};
  out.cold_trace.reserve(cfg.total_iterations());
  auto track = [&](std::size_t chain, std::uint64_t iter, const ChainState<State>& c, const StepOutcome& o) {
    if (chain == 0) {
      out.cold_trace.push_back(c.current);
      if (c.log_pi > out.best_log_pi) {
        out.best_log_pi = c.log_pi;
        out.best = c.current;
        out.best_iteration = iter;
      }
    }
    if (sink) sink(chain, iter, c, o);
  };
  out.run = steep_run<State>(target, cfg, kernels, {initial}, track);
  return out;
}

/// min over 1 <= k <= n-1 of k/(n-k) + rho^k.
double convergence_rate_diagnostic(std::uint64_t n, double rho);

}  // namespace steep
