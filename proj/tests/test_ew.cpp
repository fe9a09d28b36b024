#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qrough/errors.hpp"
#include "qrough/ew.hpp"

using namespace qrough;

namespace {

// Direct mode sum with a fixed, generous number of terms.
double brute(double Lp, double t, long terms) {
  const double pi = std::numbers::pi;
  const double x = 8.0 * pi * pi * t / (Lp * Lp);
  double sum = 0.0;
  for (long n = terms; n >= 1; --n) {
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    sum += std::exp(-x * nn) / nn;
  }
  return std::sqrt(Lp / 24.0 - Lp / (4.0 * pi * pi) * sum);
}

}  // namespace

TEST_CASE("w_EW starts at zero") { CHECK(ew_roughness({}, 0.0) == 0.0); }

TEST_CASE("saturation value sqrt(L'/24)") {
  CHECK(ew_roughness({24.0, 1e-12}, 1e6) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ew_roughness({64.0, 1e-12}, 1e7) == doctest::Approx(std::sqrt(64.0 / 24.0)));
}

TEST_CASE("matches the direct mode sum") {
  for (double t : {0.5, 3.0, 40.0, 200.0, 1000.0}) {
    CHECK(ew_roughness({64.0, 1e-12}, t) ==
          doctest::Approx(brute(64.0, t, 1'000'000)).epsilon(1e-8));
  }
}

TEST_CASE("self-similarity w(sL', s^2 t) = sqrt(s) w(L', t)") {
  for (double s : {2.0, 4.0}) {
    for (double t : {0.01, 1.0, 50.0, 500.0}) {
      const double lhs = ew_roughness({64.0 * s, 1e-12}, s * s * t);
      const double rhs = std::sqrt(s) * ew_roughness({64.0, 1e-12}, t);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
  }
}

TEST_CASE("monotone and continuous across the small-x switch") {
  const EwParams p{64.0, 1e-12};
  double prev = 0.0;
  for (double t = 1e-4; t < 1e5; t *= 1.1) {
    const double w = ew_roughness(p, t);
    CHECK(w >= prev);
    prev = w;
  }
  const double t_switch = kEwSmallX * 64.0 * 64.0 / (8.0 * std::numbers::pi * std::numbers::pi);
  CHECK(ew_roughness(p, t_switch * (1 - 1e-9)) ==
        doctest::Approx(ew_roughness(p, t_switch * (1 + 1e-9))).epsilon(1e-8));
}

TEST_CASE("tolerance controls the truncation") {
  const double ref = brute(64.0, 2.0, 1'000'000);
  const double coarse = std::abs(ew_roughness({64.0, 1e-3}, 2.0) - ref) / ref;
  const double fine = std::abs(ew_roughness({64.0, 5e-4}, 2.0) - ref) / ref;
  CHECK(coarse < 1e-3);
  CHECK(fine <= coarse);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(ew_roughness({64.0, 0.0}, 1.0), ConfigError);
  CHECK_THROWS_AS(ew_roughness({64.0, 1e-2}, 1.0), ConfigError);
  CHECK_THROWS_AS(ew_roughness({-1.0, 1e-12}, 1.0), ConfigError);
  CHECK_THROWS_AS(ew_roughness({64.0, 1e-12}, -1.0), ConfigError);
  const std::vector<double> times{0.0, 1.0};
  CHECK(ew_curve({}, times).size() == 2);
}
