#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "steep/core.hpp"
#include "steep/empirical.hpp"
#include "steep/rng.hpp"
#include "steep/tree.hpp"

namespace steep {

enum class MoveKind { local, long_range };

inline const char* to_string(MoveKind k) { return k == MoveKind::local ? "local" : "long"; }

/// A proposal k(x, .) with its Hastings correction log k(y,x) - log k(x,y).
template <class State>
struct ProposalKernel {
  std::function<State(const State&, Rng&)> sample;
  /// Only consulted when the kernel is not symmetric.
  std::function<double(const State&, const State&)> log_ratio;
  MoveKind kind = MoveKind::local;
  bool symmetric = true;
  std::string name;

  double hastings(const State& x, const State& y) const { return symmetric ? 0.0 : log_ratio(x, y); }
};

/// Uniform draw from the d-ball of radius delta around x.
ContinuousState ball_propose(const ContinuousState& x, double delta, Rng& rng);
/// x + sigma z with z standard normal.
ContinuousState gaussian_propose(const ContinuousState& x, double sigma, Rng& rng);
/// x + gamma c with independent standard Cauchy coordinates.
ContinuousState cauchy_propose(const ContinuousState& x, double gamma, Rng& rng);

ProposalKernel<ContinuousState> ball_kernel(double delta);
ProposalKernel<ContinuousState> gaussian_kernel(double sigma);
ProposalKernel<ContinuousState> cauchy_kernel(double gamma);

/// One uniformly chosen NNI move (uniform internal edge, uniform alternative).
TreeTopology nni_propose(const TreeTopology& t, Rng& rng);

/// Number of NNI moves in one compound proposal: min_moves + Geometric(p).
std::uint64_t compound_nni_count(Rng& rng, double p = 0.5, std::uint64_t min_moves = 2);
/// Chain of compound_nni_count() successive NNI moves.
TreeTopology compound_nni_propose(const TreeTopology& t, Rng& rng, double p = 0.5,
                                  std::uint64_t min_moves = 2);

ProposalKernel<TreeTopology> nni_kernel();
ProposalKernel<TreeTopology> compound_nni_kernel(double p = 0.5, std::uint64_t min_moves = 2);

/// Discrete grid kernels over states 0..n-1 (off-grid proposals are left to the
/// target, which assigns them -inf).
ProposalKernel<long> neighbor_kernel();
ProposalKernel<long> uniform_jump_kernel(long n_states);

/// Uniform draw from the stored samples; nullopt until the measure is populated.
template <class State>
std::optional<State> empirical_propose(const EmpiricalMeasure<State>& m, Rng& rng) {
  return m.draw(rng);
}

}  // namespace steep
