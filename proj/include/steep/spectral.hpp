#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "steep/core.hpp"
#include "steep/rng.hpp"

namespace steep::spectral {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest state count for exact subset-enumeration conductance.
inline constexpr std::size_t kExactConductanceMax = 22;
/// Largest grid accepted for dense analysis.
inline constexpr std::size_t kMaxGridStates = 20000;

/// Row-stochastic matrix with its stationary vector.
struct FiniteChain {
  Matrix P;
  Vector pi;
  bool reversible = false;

  std::size_t size() const { return static_cast<std::size_t>(pi.size()); }
};

/// Largest |row sum - 1|, most negative entry and largest |pi_i P_ij - pi_j P_ji|.
struct ChainDiagnostics {
  double row_sum_error = 0.0;
  double min_entry = 0.0;
  double detailed_balance_error = 0.0;
  double pi_sum_error = 0.0;
};

ChainDiagnostics diagnose(const FiniteChain& fc);
/// Throws NumericalError if any invariant is violated beyond `tol`.
void check_chain(const FiniteChain& fc, double tol = 1e-12);

/// Axis-aligned grid of cell centers.
struct GridSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<std::size_t> cells;

  std::size_t dimension() const { return cells.size(); }
  std::size_t total() const;
  /// Cell center of flat index i (row-major, last axis fastest).
  ContinuousState center(std::size_t i) const;
  std::vector<std::size_t> coords(std::size_t i) const;
  std::size_t flat(const std::vector<std::size_t>& c) const;
  double spacing(std::size_t axis) const { return (hi[axis] - lo[axis]) / static_cast<double>(cells[axis]); }
  void validate() const;
};

/// Normalized grid vector proportional to exp(log pi(center_i) / t) together
/// with the flat indices that received positive mass.
struct GridDistribution {
  Vector pi;
  std::vector<std::size_t> cells;
};

GridDistribution discretize_target(const TargetDensity<ContinuousState>& target, const GridSpec& grid,
                                   double temperature = 1.0);

/// Normalizes exp(log_values / t) with max-subtraction.
Vector normalize_log_weights(const std::vector<double>& log_values, double temperature = 1.0);

/// P_ij = Q_ij min(1, pi_j Q_ji / (pi_i Q_ij)) off the diagonal, rejections on it.
FiniteChain assemble_mh_matrix(const Vector& pi, const Matrix& q);
/// (1 - s) MH(pi, Q_local) + s MH(pi, Q_long).
FiniteChain assemble_small_world_matrix(const Vector& pi, const Matrix& q_local, const Matrix& q_long, double s);
/// Small-World chain on pi_cold whose long-range branch proposes j ~ pi_hot.
FiniteChain assemble_idealized_sampling_matrix(const Vector& pi_cold, const Vector& pi_hot, const Matrix& q_local,
                                               double s);

/// Proposal matrices over a 1-d chain of n states.
Matrix neighbor_proposal(std::size_t n);              // +-1 each w.p. 1/2, off-end mass stays put
Matrix lazy_neighbor_proposal(std::size_t n);         // stay 1/2, +-1 w.p. 1/4
Matrix window_proposal(std::size_t n, std::size_t radius);  // uniform over |i-j| <= radius
Matrix uniform_proposal(std::size_t n);

struct Cut {
  std::vector<std::size_t> members;
};

struct ConductanceResult {
  double value = 0.0;
  /// False when only a supplied cut family was searched (an upper bound on h).
  bool exact = true;
  std::vector<std::size_t> argmin;
};

/// flow(S) / pi(S) with flow(S) = sum_{x in S, y not in S} pi_x P_xy.
double set_conductance(const FiniteChain& fc, const std::vector<std::size_t>& members);

/// Exact minimum over all S with 0 < pi(S) <= 1/2 when n <= 22; otherwise the
/// minimum over `family`, flagged inexact. Throws ConfigError if n > 22 and no
/// family is given.
ConductanceResult conductance(const FiniteChain& fc, const std::optional<std::vector<Cut>>& family = std::nullopt);

/// 1 - max_{i >= 2} |lambda_i| from the symmetrized matrix with the sqrt(pi)
/// eigenvector deflated. Throws for non-reversible input.
double spectral_gap(const FiniteChain& fc);
/// Eigenvalues of the symmetrized chain, ascending.
Vector chain_spectrum(const FiniteChain& fc);

/// Block labels 0..m-1 per state.
struct Partition {
  std::vector<std::size_t> label;
  std::size_t blocks = 0;

  static Partition from_labels(std::vector<std::size_t> labels);
  std::vector<std::size_t> members(std::size_t block) const;
};

/// m-state chain P_c(i,j) = (1 / (2 pi(A_i))) sum_{x in A_i} pi_x P(x, A_j).
FiniteChain component_chain(const FiniteChain& fc, const Partition& part);
/// Chain restricted to `block` with exits turned into holding.
FiniteChain restricted_chain(const FiniteChain& fc, const std::vector<std::size_t>& block);

struct SdtCheck {
  double lhs = 0.0;  // Gap(P)
  double rhs = 0.0;  // 0.5 Gap(P_c) min_i Gap(P_{A_i})
  double gap_component = 0.0;
  double min_gap_restricted = 0.0;
  bool holds = false;
};

SdtCheck sdt_check(const FiniteChain& fc, const Partition& part, double slack = 0.0);

struct CheegerCheck {
  double h = 0.0;
  double gap = 0.0;
  bool holds = false;
};
/// h^2/2 <= Gap <= 2h (exact conductance).
CheegerCheck cheeger_check(const FiniteChain& fc, double slack = 0.0);

struct MixtureBoundCheck {
  double gap = 0.0;
  double h_local = 0.0;
  double h_long = 0.0;
  double bound = 0.0;
  bool holds = false;
};
/// Gap((1-s)P1 + sP2) >= 0.5 max((1-s)^2 h1^2, s^2 h2^2).
MixtureBoundCheck mixture_bound_check(const Vector& pi, const Matrix& q_local, const Matrix& q_long, double s,
                                      double slack = 0.0);

/// Lower bound m min_{i != j} P_c(i,j) and the all-entries variant m min_{i,j} P_c(i,j).
struct DoeblinBounds {
  double off_diagonal = 0.0;
  double all_entries = 0.0;
};
DoeblinBounds doeblin_bounds(const FiniteChain& component);

/// Two-mode one-dimensional grid target used by the temperature-scaling study:
/// log pi(x) = log(exp(-|x - a| / scale) + exp(-|x - b| / scale)).
struct TwoModeGrid {
  std::size_t n_states = 1200;
  double mode_a = 300.0;
  double mode_b = 900.0;
  double scale = 2.0;  // in cells
  std::size_t local_radius = 1;

  std::vector<double> log_density() const;
  Partition mode_partition() const;
};

struct ScalingRow {
  double t = 1.0;
  double gap_ec = 0.0;
  double gap_sc = 0.0;
  double h_ec = 0.0;
  double h_sc = 0.0;
  bool saturated = false;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double slope_ec = 0.0;
  double slope_sc = 0.0;
  std::size_t fit_points_ec = 0;
  std::size_t fit_points_sc = 0;
  bool sc_monotone = false;
};

/// For each t builds the exploring chain (Small-World on pi_t with a uniform
/// long-range proposal) and the idealized sampling chain (pi with pi_t as its
/// long-range proposal), reduces both to component chains over the mode
/// partition, and fits log-gap against log t by least squares, leaving out
/// points whose gap is within 1e-3 of the ceiling s/2 (all long-range
/// proposals accepted).
ScalingReport theorem23_scaling_experiment(const TwoModeGrid& target, const std::vector<double>& temperatures,
                                           double s);

/// Ordinary least-squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Normalized peak ratio f_t(0)/f(0) for a log-concave density f on [lo, hi)
/// with unique maximum at 0, computed by adaptive quadrature of f and f^(1/t).
struct TemperedPeakRatio {
  double ratio = 0.0;
  double lower_bound = 0.0;  // t^-d
  bool holds = false;
};

enum class LogConcaveFamily { exponential, gaussian, laplace };

TemperedPeakRatio lemma4_ratio_check(LogConcaveFamily family, double t);

/// Piece-wise normalized mass versus pooled normalization for Laplace pieces
/// with weights w_i and rates alpha_i: m I_i / sum_j I_j, I_i = w_i^(1/t) int exp(-alpha_i |x| / t).
std::vector<double> lemma5_normalization_ratios(const std::vector<double>& weights, const std::vector<double>& rates,
                                                double t);

/// Outcome of one randomized inequality suite.
struct SuiteReport {
  std::string name;
  std::size_t instances = 0;
  std::size_t violations = 0;
  /// Smallest (bound side - violated side); negative means a violation.
  double worst_margin = 0.0;
};

/// Random lazy reversible chains on 4..10 states: Cheeger sandwich, SDT bound,
/// mixture bound, detailed balance and row sums, `instances` draws each.
std::vector<SuiteReport> run_inequality_suites(std::size_t instances, std::uint64_t seed, double slack = 1e-9);

/// delta e^{-alpha delta} / (1024 sqrt(d) M_pi).
double theorem5_bound(double alpha, double delta, double d, double m_pi);

}  // namespace steep::spectral
