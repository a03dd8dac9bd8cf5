#include "steep/proposals.hpp"

#include <cmath>

namespace steep {
namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(what) + " must be a positive finite number, got " + std::to_string(v));
  }
}

}  // namespace

ContinuousState ball_propose(const ContinuousState& x, double delta, Rng& rng) {
  require_positive(delta, "ball radius");
  const std::size_t d = x.size();
  ContinuousState dir(d);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& z : dir) {
      z = rng.normal();
      norm2 += z * z;
    }
  } while (norm2 == 0.0);
  const double r = delta * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(norm2);
  ContinuousState y(x);
  for (std::size_t k = 0; k < d; ++k) y[k] += r * dir[k];
  return y;
}

ContinuousState gaussian_propose(const ContinuousState& x, double sigma, Rng& rng) {
  require_positive(sigma, "gaussian scale");
  ContinuousState y(x);
  for (auto& v : y) v += sigma * rng.normal();
  return y;
}

ContinuousState cauchy_propose(const ContinuousState& x, double gamma, Rng& rng) {
  require_positive(gamma, "cauchy scale");
  ContinuousState y(x);
  for (auto& v : y) {
    double c;
    do {
      c = rng.cauchy();
    } while (!std::isfinite(gamma * c));
    v += gamma * c;
  }
  return y;
}

ProposalKernel<ContinuousState> ball_kernel(double delta) {
  require_positive(delta, "ball radius");
  return {[delta](const ContinuousState& x, Rng& rng) { return ball_propose(x, delta, rng); },
          {}, MoveKind::local, true, "ball(" + std::to_string(delta) + ")"};
}

ProposalKernel<ContinuousState> gaussian_kernel(double sigma) {
  require_positive(sigma, "gaussian scale");
  return {[sigma](const ContinuousState& x, Rng& rng) { return gaussian_propose(x, sigma, rng); },
          {}, MoveKind::local, true, "gaussian(" + std::to_string(sigma) + ")"};
}

ProposalKernel<ContinuousState> cauchy_kernel(double gamma) {
  require_positive(gamma, "cauchy scale");
  return {[gamma](const ContinuousState& x, Rng& rng) { return cauchy_propose(x, gamma, rng); },
          {}, MoveKind::long_range, true, "cauchy(" + std::to_string(gamma) + ")"};
}

namespace {

void require_nni_taxa(const TreeTopology& t) {
  if (t.n_taxa() < 4) {
    throw ConfigError("NNI needs at least 4 taxa, tree has " + std::to_string(t.n_taxa()));
  }
}

}  // namespace

TreeTopology nni_propose(const TreeTopology& t, Rng& rng) {
  require_nni_taxa(t);
  const auto edge = static_cast<std::size_t>(rng.uniform_index(t.internal_edges().size()));
  const auto variant = static_cast<int>(rng.uniform_index(2));
  return t.nni(edge, variant);
}

std::uint64_t compound_nni_count(Rng& rng, double p, std::uint64_t min_moves) {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("compound NNI geometric parameter must lie in (0, 1]");
  return min_moves + rng.geometric(p);
}

TreeTopology compound_nni_propose(const TreeTopology& t, Rng& rng, double p, std::uint64_t min_moves) {
  require_nni_taxa(t);
  const auto k = compound_nni_count(rng, p, min_moves);
  TreeTopology y = t;
  for (std::uint64_t i = 0; i < k; ++i) y = nni_propose(y, rng);
  return y;
}

ProposalKernel<TreeTopology> nni_kernel() {
  return {[](const TreeTopology& t, Rng& rng) { return nni_propose(t, rng); }, {}, MoveKind::local, true, "nni"};
}

ProposalKernel<TreeTopology> compound_nni_kernel(double p, std::uint64_t min_moves) {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("compound NNI geometric parameter must lie in (0, 1]");
  return {[p, min_moves](const TreeTopology& t, Rng& rng) { return compound_nni_propose(t, rng, p, min_moves); },
          {}, MoveKind::long_range, true, "compound_nni"};
}

ProposalKernel<long> neighbor_kernel() {
  return {[](const long& x, Rng& rng) { return rng.uniform() < 0.5 ? x - 1 : x + 1; }, {}, MoveKind::local, true,
          "neighbor"};
}

ProposalKernel<long> uniform_jump_kernel(long n_states) {
  if (n_states <= 0) throw ConfigError("uniform jump needs a positive number of states");
  return {[n_states](const long&, Rng& rng) {
            return static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(n_states)));
          },
          {}, MoveKind::long_range, true, "uniform_jump"};
}

}  // namespace steep
