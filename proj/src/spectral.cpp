#include "steep/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <numeric>

namespace steep::spectral {
namespace {

void require_stochastic(const Matrix& q, const char* what) {
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double row = q.row(i).sum();
    if (std::abs(row - 1.0) > 1e-12 || q.row(i).minCoeff() < 0.0) {
      throw ConfigError(std::string(what) + " is not row-stochastic at row " + std::to_string(i));
    }
  }
}

void require_positive_pi(const Vector& pi) {
  if (pi.size() == 0) throw ConfigError("stationary vector is empty");
  if (pi.minCoeff() <= 0.0) throw ConfigError("stationary vector must be strictly positive");
  if (std::abs(pi.sum() - 1.0) > 1e-12) throw ConfigError("stationary vector must sum to 1");
}

FiniteChain finish(Matrix p, Vector pi) {
  FiniteChain fc{std::move(p), std::move(pi), false};
  const auto d = diagnose(fc);
  fc.reversible = d.detailed_balance_error <= 1e-12;
  return fc;
}

}  // namespace

ChainDiagnostics diagnose(const FiniteChain& fc) {
  ChainDiagnostics d;
  const auto n = fc.P.rows();
  d.min_entry = fc.P.minCoeff();
  d.pi_sum_error = std::abs(fc.pi.sum() - 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.row_sum_error = std::max(d.row_sum_error, std::abs(fc.P.row(i).sum() - 1.0));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d.detailed_balance_error =
          std::max(d.detailed_balance_error, std::abs(fc.pi(i) * fc.P(i, j) - fc.pi(j) * fc.P(j, i)));
    }
  }
  return d;
}

void check_chain(const FiniteChain& fc, double tol) {
  const auto d = diagnose(fc);
  if (d.row_sum_error > tol) throw NumericalError("row sums deviate from 1 by " + std::to_string(d.row_sum_error));
  if (d.min_entry < -tol) throw NumericalError("negative transition probability " + std::to_string(d.min_entry));
  if (d.pi_sum_error > tol) throw NumericalError("stationary vector does not sum to 1");
  if (fc.reversible && d.detailed_balance_error > tol) {
    throw NumericalError("detailed balance violated by " + std::to_string(d.detailed_balance_error));
  }
}

std::size_t GridSpec::total() const {
  std::size_t n = 1;
  for (auto c : cells) n *= c;
  return n;
}

void GridSpec::validate() const {
  if (cells.empty() || lo.size() != cells.size() || hi.size() != cells.size()) {
    throw ConfigError("grid bounds and cell counts must have one entry per axis");
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (cells[k] == 0 || !(hi[k] > lo[k])) throw ConfigError("grid axis " + std::to_string(k) + " is empty");
  }
  if (total() > kMaxGridStates) {
    throw ConfigError("grid has " + std::to_string(total()) + " states; dense analysis is limited to " +
                      std::to_string(kMaxGridStates));
  }
}

std::vector<std::size_t> GridSpec::coords(std::size_t i) const {
  std::vector<std::size_t> c(cells.size());
  for (std::size_t k = cells.size(); k-- > 0;) {
    c[k] = i % cells[k];
    i /= cells[k];
  }
  return c;
}

std::size_t GridSpec::flat(const std::vector<std::size_t>& c) const {
  std::size_t i = 0;
  for (std::size_t k = 0; k < cells.size(); ++k) i = i * cells[k] + c[k];
  return i;
}

ContinuousState GridSpec::center(std::size_t i) const {
  const auto c = coords(i);
  ContinuousState x(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) x[k] = lo[k] + (static_cast<double>(c[k]) + 0.5) * spacing(k);
  return x;
}

Vector normalize_log_weights(const std::vector<double>& log_values, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  std::vector<double> scaled(log_values.size());
  for (std::size_t i = 0; i < log_values.size(); ++i) {
    scaled[i] = log_values[i] == kNegInf ? kNegInf : log_values[i] / temperature;
  }
  const double z = log_sum_exp(scaled);
  if (z == kNegInf) throw NumericalError("target not supported on grid");
  Vector pi(static_cast<Eigen::Index>(scaled.size()));
  for (std::size_t i = 0; i < scaled.size(); ++i) pi(static_cast<Eigen::Index>(i)) = std::exp(scaled[i] - z);
  return pi;
}

GridDistribution discretize_target(const TargetDensity<ContinuousState>& target, const GridSpec& grid,
                                   double temperature) {
  grid.validate();
  std::vector<double> logs;
  GridDistribution out;
  for (std::size_t i = 0; i < grid.total(); ++i) {
    const double lp = target.log_density(grid.center(i));
    if (lp == kNegInf) continue;
    logs.push_back(lp);
    out.cells.push_back(i);
  }
  if (logs.empty()) throw NumericalError("target not supported on grid");
  out.pi = normalize_log_weights(logs, temperature);
  return out;
}

FiniteChain assemble_mh_matrix(const Vector& pi, const Matrix& q) {
  require_positive_pi(pi);
  if (q.rows() != pi.size() || q.cols() != pi.size()) throw ConfigError("proposal matrix size mismatch");
  require_stochastic(q, "proposal matrix");
  const auto n = pi.size();
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || q(i, j) == 0.0) continue;
      // pi_i P_ij = min(pi_i Q_ij, pi_j Q_ji), symmetric in (i, j).
      const double flow = std::min(pi(i) * q(i, j), pi(j) * q(j, i));
      p(i, j) = flow / pi(i);
      off += p(i, j);
    }
    p(i, i) = 1.0 - off;
  }
  return finish(std::move(p), pi);
}

FiniteChain assemble_small_world_matrix(const Vector& pi, const Matrix& q_local, const Matrix& q_long, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("s must lie in [0, 1]");
  const auto local = assemble_mh_matrix(pi, q_local);
  const auto longr = assemble_mh_matrix(pi, q_long);
  return finish((1.0 - s) * local.P + s * longr.P, pi);
}

FiniteChain assemble_idealized_sampling_matrix(const Vector& pi_cold, const Vector& pi_hot, const Matrix& q_local,
                                               double s) {
  if (pi_cold.size() != pi_hot.size()) throw ConfigError("cold and hot vectors must live on the same grid");
  require_positive_pi(pi_hot);
  // Independence proposal: every row is pi_hot.
  const Matrix q_long = Vector::Ones(pi_hot.size()) * pi_hot.transpose();
  return assemble_small_world_matrix(pi_cold, q_local, q_long, s);
}

Matrix neighbor_proposal(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix q = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (i > 0) q(i, i - 1) += 0.5; else q(i, i) += 0.5;
    if (i + 1 < m) q(i, i + 1) += 0.5; else q(i, i) += 0.5;
  }
  return q;
}

Matrix lazy_neighbor_proposal(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix q = 0.5 * Matrix::Identity(m, m) + 0.5 * neighbor_proposal(n);
  return q;
}

Matrix window_proposal(std::size_t n, std::size_t radius) {
  const auto m = static_cast<Eigen::Index>(n);
  const auto r = static_cast<Eigen::Index>(radius);
  const double w = 1.0 / static_cast<double>(2 * radius + 1);
  Matrix q = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = -r; k <= r; ++k) {
      const Eigen::Index j = i + k;
      // Off-grid proposals are rejected, i.e. stay at i.
      if (j < 0 || j >= m) q(i, i) += w; else q(i, j) += w;
    }
  }
  return q;
}

Matrix uniform_proposal(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return Matrix::Constant(m, m, 1.0 / static_cast<double>(n));
}

double set_conductance(const FiniteChain& fc, const std::vector<std::size_t>& members) {
  const auto n = static_cast<std::size_t>(fc.pi.size());
  std::vector<char> in(n, 0);
  for (auto m : members) in.at(m) = 1;
  double mass = 0.0, flow = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    if (!in[x]) continue;
    mass += fc.pi(static_cast<Eigen::Index>(x));
    for (std::size_t y = 0; y < n; ++y) {
      if (!in[y]) flow += fc.pi(static_cast<Eigen::Index>(x)) * fc.P(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    }
  }
  if (mass <= 0.0) throw ConfigError("conductance of a null set is undefined");
  return flow / mass;
}

ConductanceResult conductance(const FiniteChain& fc, const std::optional<std::vector<Cut>>& family) {
  const auto n = static_cast<std::size_t>(fc.pi.size());
  ConductanceResult out;
  if (n > kExactConductanceMax) {
    if (!family) {
      throw ConfigError("exact conductance enumerates all subsets and is limited to n <= " +
                        std::to_string(kExactConductanceMax) + " states (chain has " + std::to_string(n) +
                        "); supply a cut family for an upper bound");
    }
    out.exact = false;
    out.value = std::numeric_limits<double>::infinity();
    for (const auto& cut : *family) {
      double mass = 0.0;
      for (auto m : cut.members) mass += fc.pi(static_cast<Eigen::Index>(m));
      if (mass <= 0.0 || mass > 0.5 + 1e-12) continue;
      const double h = set_conductance(fc, cut.members);
      if (h < out.value) {
        out.value = h;
        out.argmin = cut.members;
      }
    }
    return out;
  }
  if (n < 2) {
    // No set with 0 < pi(S) <= 1/2 exists; the chain is trivially mixed.
    out.value = 1.0;
    return out;
  }
  const auto& p = fc.P;
  Matrix f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.rows(); ++i) f.row(i) = fc.pi(i) * p.row(i);
  // Walk all subsets in Gray-code order, updating flow and mass incrementally.
  std::uint32_t mask = 0;
  double flow = 0.0, mass = 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 0;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t g = 1; g < count; ++g) {
    const auto k = static_cast<std::size_t>(__builtin_ctzll(g));
    const std::uint32_t bit = 1u << k;
    const auto ki = static_cast<Eigen::Index>(k);
    double into_k = 0.0, out_of_k = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (y == k) continue;
      const auto yi = static_cast<Eigen::Index>(y);
      if (mask & (1u << y)) into_k += f(yi, ki); else out_of_k += f(ki, yi);
    }
    if (mask & bit) {
      mask &= ~bit;
      mass -= fc.pi(ki);
      flow += into_k - out_of_k;
    } else {
      mask |= bit;
      mass += fc.pi(ki);
      flow += out_of_k - into_k;
    }
    if (mass > 0.0 && mass <= 0.5 + 1e-12) {
      const double h = flow / mass;
      if (h < best) {
        best = h;
        best_mask = mask;
      }
    }
  }
  out.value = best;
  for (std::size_t i = 0; i < n; ++i) {
    if (best_mask & (1u << i)) out.argmin.push_back(i);
  }
  // Re-evaluate the minimizer directly to shed the incremental rounding.
  if (!out.argmin.empty()) out.value = set_conductance(fc, out.argmin);
  return out;
}

Vector chain_spectrum(const FiniteChain& fc) {
  if (!fc.reversible) {
    throw ConfigError("spectral gap requires a reversible (self-adjoint) chain");
  }
  const Vector sq = fc.pi.array().sqrt();
  const Vector inv = sq.cwiseInverse();
  Matrix s = sq.asDiagonal() * fc.P * inv.asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigen decomposition failed");
  return es.eigenvalues();
}

double spectral_gap(const FiniteChain& fc) {
  if (!fc.reversible) {
    throw ConfigError("spectral gap requires a reversible (self-adjoint) chain");
  }
  const Vector sq = fc.pi.array().sqrt();
  const Vector inv = sq.cwiseInverse();
  Matrix s = sq.asDiagonal() * fc.P * inv.asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();
  // Deflate the eigenvalue 1 carried by sqrt(pi); the rest of the spectrum is unchanged.
  s -= sq * sq.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigen decomposition failed");
  const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
  return std::max(0.0, 1.0 - norm);
}

Partition Partition::from_labels(std::vector<std::size_t> labels) {
  Partition p;
  p.label = std::move(labels);
  if (p.label.empty()) throw ConfigError("partition is empty");
  p.blocks = *std::max_element(p.label.begin(), p.label.end()) + 1;
  std::vector<std::size_t> sizes(p.blocks, 0);
  for (auto l : p.label) ++sizes[l];
  for (std::size_t b = 0; b < p.blocks; ++b) {
    if (sizes[b] == 0) throw ConfigError("partition block " + std::to_string(b) + " is empty");
  }
  return p;
}

std::vector<std::size_t> Partition::members(std::size_t block) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == block) out.push_back(i);
  }
  return out;
}

FiniteChain component_chain(const FiniteChain& fc, const Partition& part) {
  if (part.label.size() != fc.size()) throw ConfigError("partition does not cover the chain");
  const auto m = static_cast<Eigen::Index>(part.blocks);
  Vector mass = Vector::Zero(m);
  Matrix flow = Matrix::Zero(m, m);
  const auto n = static_cast<Eigen::Index>(fc.size());
  for (Eigen::Index x = 0; x < n; ++x) {
    const auto bx = static_cast<Eigen::Index>(part.label[static_cast<std::size_t>(x)]);
    mass(bx) += fc.pi(x);
    for (Eigen::Index y = 0; y < n; ++y) {
      flow(bx, static_cast<Eigen::Index>(part.label[static_cast<std::size_t>(y)])) += fc.pi(x) * fc.P(x, y);
    }
  }
  for (Eigen::Index b = 0; b < m; ++b) {
    if (!(mass(b) > 0.0)) throw ConfigError("partition block " + std::to_string(b) + " has no mass");
  }
  Matrix pc = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == j) continue;
      // Use the symmetrized flow so that detailed balance holds to rounding.
      const double f = fc.reversible ? 0.5 * (flow(i, j) + flow(j, i)) : flow(i, j);
      pc(i, j) = f / (2.0 * mass(i));
      off += pc(i, j);
    }
    pc(i, i) = 1.0 - off;
  }
  FiniteChain out{std::move(pc), mass / mass.sum(), false};
  out.reversible = fc.reversible && diagnose(out).detailed_balance_error <= 1e-12;
  return out;
}

FiniteChain restricted_chain(const FiniteChain& fc, const std::vector<std::size_t>& block) {
  if (block.empty()) throw ConfigError("restricted chain needs a nonempty block");
  const auto k = static_cast<Eigen::Index>(block.size());
  Matrix p = Matrix::Zero(k, k);
  Vector pi(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto x = static_cast<Eigen::Index>(block[static_cast<std::size_t>(a)]);
    pi(a) = fc.pi(x);
    double inside = 0.0;
    for (Eigen::Index b = 0; b < k; ++b) {
      if (a == b) continue;
      const auto y = static_cast<Eigen::Index>(block[static_cast<std::size_t>(b)]);
      p(a, b) = fc.P(x, y);
      inside += p(a, b);
    }
    p(a, a) = 1.0 - inside;
  }
  pi /= pi.sum();
  FiniteChain out{std::move(p), std::move(pi), false};
  out.reversible = fc.reversible && diagnose(out).detailed_balance_error <= 1e-12;
  return out;
}

SdtCheck sdt_check(const FiniteChain& fc, const Partition& part, double slack) {
  SdtCheck r;
  r.lhs = spectral_gap(fc);
  r.gap_component = spectral_gap(component_chain(fc, part));
  r.min_gap_restricted = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < part.blocks; ++b) {
    r.min_gap_restricted = std::min(r.min_gap_restricted, spectral_gap(restricted_chain(fc, part.members(b))));
  }
  r.rhs = 0.5 * r.gap_component * r.min_gap_restricted;
  r.holds = r.lhs >= r.rhs - slack;
  return r;
}

CheegerCheck cheeger_check(const FiniteChain& fc, double slack) {
  CheegerCheck c;
  c.h = conductance(fc).value;
  c.gap = spectral_gap(fc);
  c.holds = (0.5 * c.h * c.h <= c.gap + slack) && (c.gap <= 2.0 * c.h + slack);
  return c;
}

MixtureBoundCheck mixture_bound_check(const Vector& pi, const Matrix& q_local, const Matrix& q_long, double s,
                                      double slack) {
  MixtureBoundCheck m;
  m.h_local = conductance(assemble_mh_matrix(pi, q_local)).value;
  m.h_long = conductance(assemble_mh_matrix(pi, q_long)).value;
  m.gap = spectral_gap(assemble_small_world_matrix(pi, q_local, q_long, s));
  const double a = (1.0 - s) * m.h_local;
  const double b = s * m.h_long;
  m.bound = 0.5 * std::max(a * a, b * b);
  m.holds = m.gap >= m.bound - slack;
  return m;
}

DoeblinBounds doeblin_bounds(const FiniteChain& component) {
  const auto m = component.P.rows();
  double off = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i != j) off = std::min(off, component.P(i, j));
    }
  }
  if (m < 2) off = 0.0;
  return {static_cast<double>(m) * off, static_cast<double>(m) * component.P.minCoeff()};
}

std::vector<double> TwoModeGrid::log_density() const {
  std::vector<double> out(n_states);
  for (std::size_t i = 0; i < n_states; ++i) {
    const double x = static_cast<double>(i);
    out[i] = log_sum_exp({-std::abs(x - mode_a) / scale, -std::abs(x - mode_b) / scale});
  }
  return out;
}

Partition TwoModeGrid::mode_partition() const {
  std::vector<std::size_t> labels(n_states);
  const double mid = 0.5 * (mode_a + mode_b);
  for (std::size_t i = 0; i < n_states; ++i) labels[i] = static_cast<double>(i) < mid ? 0 : 1;
  return Partition::from_labels(std::move(labels));
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw NumericalError("slope fit needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw NumericalError("slope fit needs distinct x values");
  return sxy / sxx;
}

ScalingReport theorem23_scaling_experiment(const TwoModeGrid& target, const std::vector<double>& temperatures,
                                           double s) {
  if (target.n_states > kMaxGridStates) throw ConfigError("scaling grid too large for dense analysis");
  const auto logs = target.log_density();
  const auto part = target.mode_partition();
  const Vector pi = normalize_log_weights(logs, 1.0);
  const Matrix q_local = window_proposal(target.n_states, target.local_radius);
  const Matrix q_long = uniform_proposal(target.n_states);
  // With every long-range proposal accepted the two-block component chain has
  // gap s/2 (the 1/2 comes from the component-chain definition); nothing in
  // the Small-World mixture can exceed it by more than the local crossing rate.
  const double ceiling = 0.5 * s;
  ScalingReport rep;
  std::vector<double> lx_e, ly_e, lx_s, ly_s;
  for (double t : temperatures) {
    const Vector pi_t = normalize_log_weights(logs, t);
    const auto ec = component_chain(assemble_small_world_matrix(pi_t, q_local, q_long, s), part);
    const auto sc = component_chain(assemble_idealized_sampling_matrix(pi, pi_t, q_local, s), part);
    ScalingRow row;
    row.t = t;
    row.gap_ec = spectral_gap(ec);
    row.gap_sc = spectral_gap(sc);
    row.h_ec = conductance(ec).value;
    row.h_sc = conductance(sc).value;
    const bool sat_e = row.gap_ec >= ceiling - 1e-3;
    const bool sat_s = row.gap_sc >= ceiling - 1e-3;
    row.saturated = sat_e || sat_s;
    if (!sat_e && row.gap_ec > 0.0) {
      lx_e.push_back(std::log(t));
      ly_e.push_back(std::log(row.gap_ec));
    }
    if (!sat_s && row.gap_sc > 0.0) {
      lx_s.push_back(std::log(t));
      ly_s.push_back(std::log(row.gap_sc));
    }
    rep.rows.push_back(row);
  }
  rep.fit_points_ec = lx_e.size();
  rep.fit_points_sc = lx_s.size();
  rep.slope_ec = lx_e.size() >= 2 ? ols_slope(lx_e, ly_e) : std::numeric_limits<double>::quiet_NaN();
  rep.slope_sc = lx_s.size() >= 2 ? ols_slope(lx_s, ly_s) : std::numeric_limits<double>::quiet_NaN();
  rep.sc_monotone = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (rep.rows[i].t > rep.rows[i - 1].t && rep.rows[i].gap_sc > rep.rows[i - 1].gap_sc + 1e-12) {
      rep.sc_monotone = false;
    }
  }
  return rep;
}

namespace {

template <class F>
double integrate_half_line(F f) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0, l1 = 0.0;
  const double v = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-12, &err, &l1);
  if (!std::isfinite(v) || err > 1e-9 * std::max(1.0, std::abs(v))) {
    throw NumericalError("half-line quadrature did not converge (value " + std::to_string(v) + ", error " +
                         std::to_string(err) + ")");
  }
  return v;
}

// Even integrands only: twice the half line keeps the kink at 0 on the boundary.
template <class F>
double integrate_even(F f) {
  return 2.0 * integrate_half_line(f);
}

}  // namespace

TemperedPeakRatio lemma4_ratio_check(LogConcaveFamily family, double t) {
  if (!(t >= 1.0)) throw ConfigError("tempering needs t >= 1");
  std::function<double(double)> log_f;
  bool half_line = false;
  switch (family) {
    case LogConcaveFamily::exponential:
      log_f = [](double x) { return -x; };
      half_line = true;
      break;
    case LogConcaveFamily::gaussian:
      log_f = [](double x) { return -0.5 * x * x; };
      break;
    case LogConcaveFamily::laplace:
      log_f = [](double x) { return -std::abs(x); };
      break;
  }
  auto mass = [&](double power) {
    auto g = [&](double x) { return std::exp(power * log_f(x)); };
    return half_line ? integrate_half_line(g) : integrate_even(g);
  };
  const double z1 = mass(1.0);
  const double zt = mass(1.0 / t);
  const double peak = std::exp(log_f(0.0));
  TemperedPeakRatio r;
  // f_t(0) / f(0) with both densities normalized.
  r.ratio = (std::pow(peak, 1.0 / t) / zt) / (peak / z1);
  r.lower_bound = 1.0 / t;
  r.holds = r.ratio >= r.lower_bound * (1.0 - 1e-6);
  return r;
}

std::vector<double> lemma5_normalization_ratios(const std::vector<double>& weights, const std::vector<double>& rates,
                                                double t) {
  if (weights.size() != rates.size() || weights.empty()) throw ConfigError("need one rate per weight");
  std::vector<double> mass(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double a = rates[i];
    mass[i] = std::pow(weights[i], 1.0 / t) * integrate_even([a, t](double x) { return std::exp(-a * std::abs(x) / t); });
  }
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  std::vector<double> out(mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i) out[i] = static_cast<double>(mass.size()) * mass[i] / total;
  return out;
}

double theorem5_bound(double alpha, double delta, double d, double m_pi) {
  if (!(alpha > 0.0 && delta > 0.0 && d > 0.0 && m_pi > 0.0)) throw ConfigError("all bound inputs must be positive");
  return delta * std::exp(-alpha * delta) / (1024.0 * std::sqrt(d) * m_pi);
}

}  // namespace steep::spectral

namespace steep::spectral {
namespace {

Vector random_pi(std::size_t n, Rng& rng) {
  Vector pi(static_cast<Eigen::Index>(n));
  for (auto& v : pi) v = 0.05 + rng.uniform();
  return pi / pi.sum();
}

// Symmetric proposal with holding probability at least 1/2 and random sparsity.
Matrix random_lazy_proposal(std::size_t n, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix w = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = rng.uniform() < 0.6 ? rng.uniform() : 0.0;
      w(i, j) = w(j, i) = v;
    }
    // Keep the path i, i+1 so the chain is irreducible.
    if (i + 1 < m && w(i, i + 1) == 0.0) w(i, i + 1) = w(i + 1, i) = 0.05 + rng.uniform();
  }
  const double scale = 2.0 * w.rowwise().sum().maxCoeff();
  Matrix q = w / scale;
  for (Eigen::Index i = 0; i < m; ++i) q(i, i) = 1.0 - q.row(i).sum();
  return q;
}

Partition random_partition(std::size_t n, Rng& rng) {
  const std::size_t blocks = 2 + rng.uniform_index(std::min<std::size_t>(3, n - 1));
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i < blocks ? i : rng.uniform_index(blocks);
  return Partition::from_labels(std::move(labels));
}

void tally(SuiteReport& r, double margin, double slack) {
  ++r.instances;
  if (margin < -slack) ++r.violations;
  r.worst_margin = r.instances == 1 ? margin : std::min(r.worst_margin, margin);
}

}  // namespace

std::vector<SuiteReport> run_inequality_suites(std::size_t instances, std::uint64_t seed, double slack) {
  SuiteReport cheeger{"cheeger"}, sdt{"sdt"}, mixture{"mixture"}, balance{"detailed_balance"},
      stochastic{"row_stochastic"};
  Rng rng(seed, 0x5D7);
  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t n = 4 + rng.uniform_index(7);
    const Vector pi = random_pi(n, rng);
    const Matrix q = random_lazy_proposal(n, rng);
    const auto fc = assemble_mh_matrix(pi, q);

    const auto d = diagnose(fc);
    tally(balance, -d.detailed_balance_error, slack);
    tally(stochastic, std::min(-d.row_sum_error, d.min_entry), slack);

    const auto c = cheeger_check(fc);
    tally(cheeger, std::min(c.gap - 0.5 * c.h * c.h, 2.0 * c.h - c.gap), slack);

    const auto part = random_partition(n, rng);
    const auto s = sdt_check(fc, part);
    tally(sdt, s.lhs - s.rhs, slack);

    const Matrix q_long = random_lazy_proposal(n, rng);
    const double mix = 0.05 + 0.9 * rng.uniform();
    const auto mb = mixture_bound_check(pi, q, q_long, mix);
    tally(mixture, mb.gap - mb.bound, slack);
  }
  return {cheeger, sdt, mixture, balance, stochastic};
}

}  // namespace steep::spectral
