#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "steep/core.hpp"
#include "steep/rng.hpp"

using namespace steep;

TEST_SUITE("core") {
  TEST_CASE("standard gaussian at zero") {
    const auto g = gaussian_target({0.0}, 1.0);
    CHECK(log_density_at(g, ContinuousState{0.0}) == doctest::Approx(-0.5 * std::log(2.0 * oracle::kPi)).epsilon(1e-14));
    CHECK(log_density_at(g, ContinuousState{0.0}) == doctest::Approx(-0.9189).epsilon(1e-4));
  }

  TEST_CASE("needles mixture at the origin") {
    const auto m = needles_mixture();
    const double expected = std::log(0.5 / (2.0 * oracle::kPi * 0.01));
    // The far mode contributes exp(-2500) which underflows to nothing.
    CHECK(m.log_density({0.0, 0.0}) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(m.as_target().log_density({0.0, 0.0}) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(m.dominant_component({0.0, 0.0}) == 0);
    CHECK(m.dominant_component({4.9, 5.2}) == 1);
  }

  TEST_CASE("mixture log-sum-exp agrees with direct summation") {
    const auto m = needles_mixture({1.0, 0.5}, 0.5);
    Rng rng(3, 0);
    for (int k = 0; k < 200; ++k) {
      const ContinuousState x{rng.uniform() * 3.0 - 1.0, rng.uniform() * 3.0 - 1.0};
      const double direct = std::log(0.5 * std::exp(oracle::normal_log_pdf_iso(x, {0.0, 0.0}, 0.5)) +
                                     0.5 * std::exp(oracle::normal_log_pdf_iso(x, {1.0, 0.5}, 0.5)));
      CHECK(m.log_density(x) == doctest::Approx(direct).epsilon(1e-12));
      CHECK(m.log_density_direct(x) == doctest::Approx(direct).epsilon(1e-12));
    }
  }

  TEST_CASE("far from both needles the density stays finite") {
    const auto m = needles_mixture();
    const double v = m.log_density({100.0, -100.0});
    CHECK(std::isfinite(v));
  }

  TEST_CASE("zero density is -inf") {
    const auto e = exponential_target();
    CHECK(e.log_density({-1.0}) == kNegInf);
    CHECK(e.log_density({2.0}) == doctest::Approx(-2.0));
    const auto box = uniform_box_target(2, 0.0, 1.0);
    CHECK(box.log_density({1.5, 0.5}) == kNegInf);
    CHECK(std::isfinite(box.log_density({0.5, 0.5})));
  }

  TEST_CASE("dimension mismatch names expected and actual") {
    const auto m = needles_mixture();
    const auto t = m.as_target();
    try {
      (void)t.log_density({1.0, 2.0, 3.0});
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      CHECK(e.expected() == 2);
      CHECK(e.actual() == 3);
      CHECK(std::string(e.what()).find("expected d=2") != std::string::npos);
      CHECK(std::string(e.what()).find("got d=3") != std::string::npos);
    }
  }

  TEST_CASE("NaN from a user density is a numerical error") {
    TargetDensity<ContinuousState> bad([](const ContinuousState&) { return std::nan(""); },
                                       SpaceDescriptor::continuous(1));
    CHECK_THROWS_AS((void)bad.log_density({0.0}), NumericalError);
  }

  TEST_CASE("tempered density divides by t") {
    TargetDensity<ContinuousState> flat([](const ContinuousState&) { return -10.0; }, SpaceDescriptor::continuous(1));
    CHECK(tempered_log_density(TemperedDensity(flat, 2.0), ContinuousState{0.3}) == doctest::Approx(-5.0));
    CHECK(tempered_log_density(TemperedDensity(flat, 1.0), ContinuousState{0.3}) == -10.0);
    CHECK_THROWS_AS(TemperedDensity(flat, 0.0), ConfigError);
    CHECK_THROWS_AS(TemperedDensity(flat, -1.0), ConfigError);
    const auto e = exponential_target();
    CHECK(TemperedDensity(e, 3.0).log_density({-1.0}) == kNegInf);
  }

  TEST_CASE("log_sum_exp") {
    CHECK(log_sum_exp({}) == kNegInf);
    CHECK(log_sum_exp({kNegInf, kNegInf}) == kNegInf);
    CHECK(log_sum_exp({1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
    CHECK(log_sum_exp({std::log(0.25), std::log(0.75)}) == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("rosenbrock optimum") {
    const auto r = rosenbrock_target(1.0, 5.0, {2.0, -1.0});
    CHECK(r.log_density({3.0, 0.0}) == doctest::Approx(0.0));
    CHECK(r.log_density({3.1, 0.0}) < 0.0);
  }

  TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(42, 7), b(42, 7), c(42, 8);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
      const auto x = a.next_u64();
      CHECK(x == b.next_u64());
      differs |= x != c.next_u64();
    }
    CHECK(differs);
    Rng s1 = Rng(1, 0).split(0), s2 = Rng(1, 0).split(1);
    CHECK(s1.next_u64() != s2.next_u64());
  }

  TEST_CASE("rng uniform and normal moments") {
    Rng r(11, 0);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      CHECK_UNARY(u >= 0.0);
      CHECK_UNARY(u < 1.0);
      su += u;
      const double z = r.normal();
      sn += z;
      sn2 += z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("rng uniform_index is uniform") {
    Rng r(5, 1);
    std::vector<double> counts(6, 0.0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) counts[r.uniform_index(6)] += 1.0;
    CHECK(oracle::chi2_sf(oracle::chi2_stat(counts, std::vector<double>(6, n / 6.0)), 5) > 0.001);
  }
}
