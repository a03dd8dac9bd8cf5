#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "steep/spectral.hpp"

using namespace steep;
using namespace steep::spectral;

namespace {

FiniteChain two_state(double p) {
  Matrix m(2, 2);
  m << 1 - p, p, p, 1 - p;
  Vector pi(2);
  pi << 0.5, 0.5;
  return {m, pi, true};
}

// Brute-force conductance straight from the definition, for small n.
double brute_conductance(const FiniteChain& fc) {
  const auto n = fc.size();
  double best = 1e300;
  for (std::size_t mask = 1; mask + 1 < (1u << n); ++mask) {
    double mass = 0.0, flow = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      mass += fc.pi(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1u) continue;
        flow += fc.pi(static_cast<Eigen::Index>(i)) * fc.P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    if (mass <= 0.5 + 1e-15) best = std::min(best, flow / mass);
  }
  return best;
}

Vector random_positive(std::size_t n, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = 0.05 + rng.uniform();
  return v / v.sum();
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("two-state chain gap and conductance") {
    for (double p : {0.1, 0.25, 0.4}) {
      const auto fc = two_state(p);
      CHECK(spectral_gap(fc) == doctest::Approx(2 * p).epsilon(1e-12));
      CHECK(conductance(fc).value == doctest::Approx(p).epsilon(1e-12));
      CHECK(conductance(fc).exact);
    }
  }

  TEST_CASE("identity chain has no gap") {
    Vector pi = Vector::Constant(4, 0.25);
    FiniteChain id{Matrix::Identity(4, 4), pi, true};
    CHECK(spectral_gap(id) == doctest::Approx(0.0).epsilon(1e-14));
  }

  TEST_CASE("non-reversible input is refused") {
    Matrix p(3, 3);
    p << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    FiniteChain cyc{p, Vector::Constant(3, 1.0 / 3), false};
    CHECK_THROWS_AS(spectral_gap(cyc), ConfigError);
  }

  TEST_CASE("mh matrix by hand") {
    Vector pi(2);
    pi << 2.0 / 3, 1.0 / 3;
    Matrix q = Matrix::Constant(2, 2, 0.5);
    const auto fc = assemble_mh_matrix(pi, q);
    CHECK(fc.P(0, 0) == doctest::Approx(0.75));
    CHECK(fc.P(0, 1) == doctest::Approx(0.25));
    CHECK(fc.P(1, 0) == doctest::Approx(0.5));
    CHECK(fc.P(1, 1) == doctest::Approx(0.5));
    CHECK(fc.reversible);
    CHECK(diagnose(fc).detailed_balance_error <= 1e-15);
  }

  TEST_CASE("uniform pi with a symmetric proposal accepts everything") {
    const auto q = window_proposal(7, 2);
    const auto fc = assemble_mh_matrix(Vector::Constant(7, 1.0 / 7), q);
    CHECK((fc.P - q).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("mh matrix invariants on random instances") {
    Rng rng(1, 0);
    for (int k = 0; k < 20; ++k) {
      const std::size_t n = 3 + rng.uniform_index(8);
      const auto pi = random_positive(n, rng);
      Matrix q(n, n);
      for (auto& x : q.reshaped()) x = rng.uniform();
      for (Eigen::Index i = 0; i < q.rows(); ++i) q.row(i) /= q.row(i).sum();
      const auto fc = assemble_mh_matrix(pi, q);
      const auto d = diagnose(fc);
      CHECK(d.row_sum_error <= 1e-12);
      CHECK(d.min_entry >= 0.0);
      CHECK(d.detailed_balance_error <= 1e-12);
      CHECK(d.pi_sum_error <= 1e-12);
      CHECK_NOTHROW(check_chain(fc));
    }
  }

  TEST_CASE("small-world matrix endpoints") {
    Rng rng(2, 0);
    const auto pi = random_positive(6, rng);
    const auto ql = neighbor_proposal(6), qg = uniform_proposal(6);
    CHECK((assemble_small_world_matrix(pi, ql, qg, 0.0).P - assemble_mh_matrix(pi, ql).P).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((assemble_small_world_matrix(pi, ql, qg, 1.0).P - assemble_mh_matrix(pi, qg).P).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("idealized sampling chain at t=1 proposes the target") {
    Rng rng(3, 0);
    const auto pi = random_positive(6, rng);
    const auto ql = neighbor_proposal(6);
    const double s = 0.4;
    const auto fc = assemble_idealized_sampling_matrix(pi, pi, ql, s);
    const auto local = assemble_mh_matrix(pi, ql);
    // Long branch rows are exactly s * pi.
    Matrix long_part = (fc.P - (1 - s) * local.P) / s;
    for (Eigen::Index i = 0; i < 6; ++i) CHECK((long_part.row(i) - pi.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(diagnose(fc).detailed_balance_error <= 1e-12);
  }

  TEST_CASE("conductance against brute force and the complete chain") {
    Rng rng(4, 0);
    for (int k = 0; k < 20; ++k) {
      const std::size_t n = 3 + rng.uniform_index(7);
      const auto fc = assemble_mh_matrix(random_positive(n, rng), lazy_neighbor_proposal(n));
      const auto c = conductance(fc);
      CHECK(c.value == doctest::Approx(brute_conductance(fc)).epsilon(1e-12));
      double mass = 0.0;
      for (auto i : c.argmin) mass += fc.pi(static_cast<Eigen::Index>(i));
      CHECK(mass <= 0.5 + 1e-12);
      CHECK(mass > 0.0);
    }
    for (std::size_t n : {4, 6, 8}) {
      const auto fc = assemble_mh_matrix(Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / n), uniform_proposal(n));
      CHECK(conductance(fc).value == doctest::Approx(0.5).epsilon(1e-12));
    }
  }

  TEST_CASE("conductance beyond the exact limit needs a cut family") {
    const std::size_t n = 30;
    const auto fc = assemble_mh_matrix(Vector::Constant(n, 1.0 / n), neighbor_proposal(n));
    CHECK_THROWS_AS(conductance(fc), ConfigError);
    std::vector<std::size_t> half;
    for (std::size_t i = 0; i < n / 2; ++i) half.push_back(i);
    const auto c = conductance(fc, std::vector<Cut>{{half}});
    CHECK_FALSE(c.exact);
    CHECK(c.value == doctest::Approx(set_conductance(fc, half)));
  }

  TEST_CASE("component chain") {
    const auto fc = assemble_mh_matrix(Vector::Constant(6, 1.0 / 6), lazy_neighbor_proposal(6));
    const auto one = component_chain(fc, Partition::from_labels({0, 0, 0, 0, 0, 0}));
    CHECK(one.P.rows() == 1);
    CHECK(one.P(0, 0) == doctest::Approx(1.0));
    const auto two = component_chain(fc, Partition::from_labels({0, 0, 0, 1, 1, 1}));
    CHECK(two.P(0, 1) == doctest::Approx(two.P(1, 0)));
    // Flow 1/6 * 1/4 across the single boundary edge, halved and divided by block mass 1/2.
    CHECK(two.P(0, 1) == doctest::Approx((1.0 / 6) * 0.25 / (2 * 0.5)));
    CHECK(diagnose(two).row_sum_error <= 1e-12);
    CHECK(diagnose(two).detailed_balance_error <= 1e-12);
    CHECK_THROWS_AS(Partition::from_labels({0, 2, 2}), ConfigError);
  }

  TEST_CASE("restricted chain") {
    Matrix p(3, 3);
    p << 0.5, 0.3, 0.2, 0.3, 0.4, 0.3, 0.2, 0.3, 0.5;
    FiniteChain fc{p, Vector::Constant(3, 1.0 / 3), true};
    const auto r = restricted_chain(fc, {0, 1});
    CHECK(r.P(0, 0) == doctest::Approx(0.7));
    CHECK(r.P(0, 1) == doctest::Approx(0.3));
    CHECK(r.P(1, 1) == doctest::Approx(0.7));
    CHECK(r.reversible);
    const auto all = restricted_chain(fc, {0, 1, 2});
    CHECK((all.P - p).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK_THROWS_AS(restricted_chain(fc, {}), ConfigError);
  }

  TEST_CASE("decomposition bound") {
    const auto fc = assemble_mh_matrix(Vector::Constant(6, 1.0 / 6), lazy_neighbor_proposal(6));
    const auto triv = sdt_check(fc, Partition::from_labels({0, 0, 0, 0, 0, 0}));
    CHECK(triv.holds);
    CHECK(triv.rhs == doctest::Approx(0.5 * spectral_gap(fc)));
    TwoModeGrid g;
    g.n_states = 200;
    g.mode_a = 50;
    g.mode_b = 150;
    g.scale = 8;
    const auto pi = normalize_log_weights(g.log_density());
    const auto needle = assemble_small_world_matrix(pi, window_proposal(200, 1), uniform_proposal(200), 0.3);
    const auto r = sdt_check(needle, g.mode_partition());
    CHECK(r.holds);
    CHECK(r.lhs / r.rhs >= 1.0);
  }

  TEST_CASE("randomized inequality suites") {
    const auto reports = run_inequality_suites(100, 5);
    CHECK(reports.size() == 5);
    for (const auto& r : reports) {
      INFO(r.name);
      CHECK(r.instances >= 100);
      CHECK(r.violations == 0);
    }
  }

  TEST_CASE("doeblin bounds") {
    Matrix p(2, 2);
    p << 0.9, 0.1, 0.2, 0.8;
    FiniteChain fc{p, Vector(), false};
    const auto b = doeblin_bounds(fc);
    CHECK(b.off_diagonal == doctest::Approx(0.2));
    CHECK(b.all_entries == doctest::Approx(0.2));
  }

  TEST_CASE("grid discretization") {
    GridSpec g{{-2.0}, {2.0}, {40}};
    const auto u = discretize_target(uniform_box_target(1, -5, 5), g);
    CHECK((u.pi.array() - 1.0 / 40).abs().maxCoeff() <= 1e-15);
    MixtureTarget sym({{0.5, {-1.0}, {0.1}}, {0.5, {1.0}, {0.1}}});
    const auto d = discretize_target(sym.as_target(), g);
    for (Eigen::Index i = 0; i < 40; ++i) CHECK(d.pi(i) == doctest::Approx(d.pi(39 - i)).epsilon(1e-12));
    const auto hot = discretize_target(sym.as_target(), g, 1e6);
    CHECK(0.5 * (hot.pi.array() - 1.0 / 40).abs().sum() < 0.01);
    CHECK_THROWS((void)discretize_target(uniform_box_target(1, 10, 11), g));
    GridSpec huge{{0, 0}, {1, 1}, {200, 200}};
    CHECK_THROWS_AS(huge.validate(), ConfigError);
    GridSpec g2{{0, 0}, {1, 2}, {2, 4}};
    CHECK(g2.total() == 8);
    CHECK(g2.flat(g2.coords(5)) == 5);
    CHECK(g2.center(5) == ContinuousState{0.75, 0.75});
  }

  TEST_CASE("temperature scaling at desk scale") {
    const auto rep = theorem23_scaling_experiment(TwoModeGrid{}, {1, 2, 4, 8, 16}, 0.33);
    CHECK(rep.slope_ec >= 0.5);
    CHECK(rep.slope_ec <= 1.5);
    CHECK(rep.slope_sc >= -2.2);
    CHECK(rep.slope_sc <= -0.8);
    CHECK(rep.sc_monotone);
    // t = 1 proposes from the target: the sampling component gap is at its largest.
    for (const auto& row : rep.rows) CHECK(row.gap_sc <= rep.rows.front().gap_sc + 1e-12);
    CHECK(rep.rows.front().saturated);
  }

  TEST_CASE("sampling gap at t=6 sits in the power-law band fitted at t=2" * doctest::may_fail()) {
    const auto rep = theorem23_scaling_experiment(TwoModeGrid{}, {2, 6}, 0.33);
    const double g2 = rep.rows[0].gap_sc, g6 = rep.rows[1].gap_sc;
    CHECK(g6 >= g2 * 4.0 / 36.0);
    CHECK(g6 <= g2 * 2.0 / 6.0 * 1.0001);
  }

  TEST_CASE("ols slope") {
    CHECK(ols_slope({0, 1, 2, 3}, {1, 3, 5, 7}) == doctest::Approx(2.0));
    CHECK_THROWS(ols_slope({1}, {1}));
  }

  TEST_CASE("tempered peak ratios") {
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
      const auto e = lemma4_ratio_check(LogConcaveFamily::exponential, t);
      CHECK(e.ratio == doctest::Approx(1.0 / t).epsilon(1e-8));
      CHECK(e.holds);
      const auto g = lemma4_ratio_check(LogConcaveFamily::gaussian, t);
      CHECK(g.ratio == doctest::Approx(1.0 / std::sqrt(t)).epsilon(1e-8));
      CHECK(g.ratio >= 1.0 / t - 1e-12);
      const auto l = lemma4_ratio_check(LogConcaveFamily::laplace, t);
      CHECK(l.ratio == doctest::Approx(1.0 / t).epsilon(1e-8));
    }
  }

  TEST_CASE("normalization ratios stay bounded") {
    const std::vector<double> w{0.2, 0.5, 0.3}, a{1.0, 3.0, 0.5};
    for (double t : {1.0, 10.0, 100.0, 1e4}) {
      const auto r = lemma5_normalization_ratios(w, a, t);
      // Closed form: I_i = w_i^(1/t) 2t / a_i.
      double tot = 0.0;
      std::vector<double> ii;
      for (std::size_t k = 0; k < 3; ++k) {
        ii.push_back(std::pow(w[k], 1 / t) * 2 * t / a[k]);
        tot += ii.back();
      }
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(r[k] == doctest::Approx(3 * ii[k] / tot).epsilon(1e-8));
        CHECK(r[k] < 3.0);
        CHECK(r[k] > 0.0);
      }
    }
    const auto eq = lemma5_normalization_ratios({0.5, 0.5}, {2.0, 2.0}, 7.0);
    CHECK(eq[0] == doctest::Approx(1.0));
  }

  TEST_CASE("ball-proposal conductance bound") {
    CHECK(theorem5_bound(1, 1, 1, 1) == doctest::Approx(std::exp(-1.0) / 1024).epsilon(1e-12));
    CHECK(theorem5_bound(1, 1, 1, 1) == doctest::Approx(3.589e-4).epsilon(1e-3));
    const double alpha = 2.5;
    double best = 0.0, arg = 0.0;
    for (int k = 1; k <= 4000; ++k) {
      const double d = k * 1e-3;
      const double v = theorem5_bound(alpha, d, 1, 1);
      if (v > best) {
        best = v;
        arg = d;
      }
    }
    CHECK(arg == doctest::Approx(1 / alpha).epsilon(1e-2));
    CHECK(best * 1024 == doctest::Approx(1 / (alpha * std::exp(1.0))).epsilon(1e-6));
    // Exp(1) on a 20-cell grid of width 0.5 with a radius-1 window: alpha = 1, M_pi = 1.
    GridSpec g{{0.0}, {10.0}, {20}};
    const auto d = discretize_target(exponential_target(), g);
    const auto fc = assemble_mh_matrix(d.pi, window_proposal(20, 2));
    CHECK(theorem5_bound(1, 1, 1, 1) <= conductance(fc).value);
  }
}
