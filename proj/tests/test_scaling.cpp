#include <doctest.h>

#include <cmath>

#include "qrough/errors.hpp"
#include "qrough/scaling.hpp"

using namespace qrough;

namespace {

// Synthetic Family-Vicsek family w = L^alpha g(t / L^z), g(u) = min(u, 1)^beta,
// sampled on a common grid of scaled times so that t* scales exactly as L^z.
ObservableSeries fv_series(double L, double alpha, double beta, double z) {
  ObservableSeries s;
  s.times.push_back(0.0);
  s.w.push_back(0.0);
  for (int k = 0; k <= 400; ++k) {
    const double u = 1e-4 * std::pow(10.0, 12.0 * k / 400.0);
    s.times.push_back(u * std::pow(L, z));
    s.w.push_back(std::pow(L, alpha) * std::pow(std::min(u, 1.0), beta));
  }
  return s;
}

Curve power_curve(double a, double b, double lo, double hi) {
  Curve c;
  for (int k = 0; k <= 200; ++k) {
    const double t = lo * std::pow(hi / lo, k / 200.0);
    c.t.push_back(t);
    c.w.push_back(a * std::pow(t, b));
  }
  return c;
}

}  // namespace

TEST_CASE("pure power law is fitted exactly") {
  std::vector<double> x, y;
  for (int i = 1; i <= 30; ++i) {
    x.push_back(i);
    y.push_back(3.0 * std::pow(i, 0.37));
  }
  const auto f = fit_power_law(x, y);
  CHECK(std::abs(f.exponent - 0.37) < 1e-10);
  CHECK(f.err < 1e-10);
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
}

TEST_CASE("slope is invariant under rescaling of x and y") {
  std::vector<double> x, y, xs, ys;
  for (int i = 1; i <= 20; ++i) {
    x.push_back(i);
    y.push_back(std::pow(i, 0.5) * (1.0 + 0.05 * std::sin(i)));
    xs.push_back(7.0 * i);
    ys.push_back(0.01 * y.back());
  }
  CHECK(std::abs(fit_power_law(x, y).exponent - fit_power_law(xs, ys).exponent) < 1e-12);
}

TEST_CASE("bootstrap is reproducible for a fixed seed") {
  std::vector<double> x, y;
  for (int i = 1; i <= 20; ++i) {
    x.push_back(i);
    y.push_back(std::pow(i, 0.5) * (1.0 + 0.05 * std::cos(3.0 * i)));
  }
  const auto a = fit_power_law(x, y, 42);
  const auto b = fit_power_law(x, y, 42);
  CHECK(a.err == b.err);
  CHECK(a.err > 0.0);
}

TEST_CASE("fit argument validation") {
  const std::vector<double> x{1, 2}, y{1, -2};
  CHECK_THROWS_AS(fit_power_law(x, y), ConfigError);
  ObservableSeries s = fv_series(16, 0.5, 0.25, 2.0);
  CHECK_THROWS_AS(fit_beta(s, {1e20, 2e20}, kDefaultSeed), ConfigError);
  CHECK_THROWS_AS(fit_beta(s, {2.0, 1.0}, kDefaultSeed), ConfigError);
}

TEST_CASE("saturation time of a step") {
  ObservableSeries s;
  for (int i = 0; i <= 100; ++i) {
    s.times.push_back(i);
    s.w.push_back(i < 30 ? 0.1 : 2.0);
  }
  CHECK(saturation_time(s) == 30.0);
  CHECK(saturation_value(s) == 2.0);
  CHECK_THROWS_AS(saturation_time(s, 1.5), ConfigError);
}

TEST_CASE("growing curve is reported as not saturated") {
  ObservableSeries s;
  for (int i = 0; i <= 100; ++i) {
    s.times.push_back(i);
    s.w.push_back(std::sqrt(static_cast<double>(i)));
  }
  CHECK_FALSE(plateau_check(s).saturated);
  CHECK(plateau_check(s, 1.0).saturated);
  CHECK_THROWS_AS(saturation_time(s), NumericalError);
}

TEST_CASE("collapse of identical curves has zero cost, independent of order") {
  std::vector<Curve> c{power_curve(1.0, 0.3, 1, 100), power_curve(1.0, 0.3, 2, 50)};
  c[0].L = 16;
  c[1].L = 32;
  CHECK(collapse_cost(c) < 1e-20);
  std::vector<Curve> d{power_curve(1.0, 0.3, 1, 100), power_curve(2.0, 0.3, 1, 100)};
  const double fwd = collapse_cost(d);
  std::swap(d[0], d[1]);
  CHECK(collapse_cost(d) == doctest::Approx(fwd).epsilon(1e-12));
  CHECK(fwd == doctest::Approx(std::log(2.0) * std::log(2.0)).epsilon(1e-9));
  std::vector<Curve> disjoint{power_curve(1, 0.3, 1, 2), power_curve(1, 0.3, 10, 20)};
  CHECK_THROWS_AS(collapse_cost(disjoint), ConfigError);
}

TEST_CASE("fit_family recovers synthetic exponents") {
  const std::vector<double> Ls{16, 32, 64};
  std::vector<ObservableSeries> s;
  for (double L : Ls) s.push_back(fv_series(L, 0.5, 0.25, 2.0));
  const auto f = fit_family(s, Ls, 1.0);
  CHECK(std::abs(f.alpha - 0.5) < 1e-10);
  CHECK(std::abs(f.z - 2.0) < 1e-10);
  CHECK(std::abs(f.beta - 0.25) < 1e-10);
  CHECK(f.collapse_cost < 1e-10);
  CHECK(f.baseline_cost > 0.1);
  CHECK(f.to_json().contains("alpha"));
  CHECK_THROWS_AS(fit_family(std::span(s).first(2), std::span(Ls).first(2), 1.0), ConfigError);
}

TEST_CASE("fit_affine recovers a known rescaling") {
  Curve ref;
  for (int k = 0; k <= 300; ++k) {
    const double t = 1e-2 * std::pow(1e5, k / 300.0);
    ref.t.push_back(t);
    ref.w.push_back(std::sqrt(1.0 - std::exp(-std::sqrt(t))));
  }
  Curve cand = ref;
  for (auto& t : cand.t) t *= 3.0;
  for (auto& w : cand.w) w *= 0.5;
  const auto f = fit_affine(ref, cand, {1.0, 100.0});
  CHECK(f.d1 == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(f.d2 == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(f.rms < 1e-4);
  CHECK(affine_rms(ref, cand, {1.0, 100.0}, 3.0, 0.5) < 1e-4);
}

TEST_CASE("default growth window") {
  CHECK(default_beta_window(0.25, 100).t_min == 8.0);
  CHECK(default_beta_window(4.0, 100).t_min == 1.0);
  CHECK(default_beta_window(0.0, 100).t_max == 50.0);
}
