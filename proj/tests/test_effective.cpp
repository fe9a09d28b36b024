#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qrough/config_io.hpp"
#include "qrough/effective.hpp"
#include "qrough/errors.hpp"
#include "qrough/exact_dynamics.hpp"

using namespace qrough;

namespace {

SystemConfig config(int L, double gamma, double t_final) {
  SystemConfig c;
  c.L = L;
  c.dissipator = Dephasing{gamma};
  c.t_final = t_final;
  c.sample_times = expand_sample_spec({20, 20, 0.1}, t_final);
  return c;
}

}  // namespace

TEST_CASE("initial fields are the Fock diagonals") {
  const auto c = config(8, 1.0, 1.0);
  const auto s = initial_effective_state(c);
  const auto fd = fock_diagonals(occupation_pattern(c.initial_state, 8), c.statistics);
  CHECK(s.d == fd.d);
  CHECK(s.f == fd.f);
  CHECK(effective_roughness(s, c.statistics, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("zero-flux Laplacian conserves the sums and kills constants") {
  EffectiveState s;
  s.L = 6;
  s.d = {0.3, 1.0, 0.0, 2.0, 0.5, 0.1};
  s.f.assign(36, 0.0);
  for (std::size_t i = 0; i < 36; ++i) s.f[i] = std::sin(static_cast<double>(i));
  const auto r = effective_rhs(s, 0.5);
  CHECK(std::accumulate(r.d.begin(), r.d.end(), 0.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(std::abs(std::accumulate(r.f.begin(), r.f.end(), 0.0)) < 1e-12);
  // Single interior site: (2/gamma)(d[0] - 2 d[1] + d[2]).
  CHECK(r.d[1] == doctest::Approx(4.0 * (0.3 - 2.0 + 0.0)));
  s.d.assign(6, 0.7);
  s.f.assign(36, 0.2);
  const auto z = effective_rhs(s, 0.5);
  for (double v : z.d) CHECK(v == 0.0);
  for (double v : z.f) CHECK(v == 0.0);
}

TEST_CASE("direct and adjoint routes agree") {
  for (auto st : {Statistics::Fermion, Statistics::Boson}) {
    auto c = config(32, 1.0, 50.0);
    c.statistics = st;
    c.dt = 0.01;
    const auto a = evolve_effective(c);
    const auto b = evolve_effective_adjoint(c);
    REQUIRE(a.size() == b.size());
    CHECK(a.w_label == "w_eff");
    // RK4 of the Kronecker-sum generator differs from the product of two RK4 propagators
    // at truncation order.
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a.w[k] - b.w[k]) < 1e-7);
  }
}

TEST_CASE("effective roughness saturates") {
  const auto s = evolve_effective(config(16, 1.0, 200.0));
  CHECK(s.w.front() == 0.0);
  CHECK(std::abs(s.w.back() - s.w[s.size() - 5]) < 1e-3 * s.w.back());
  CHECK(s.n_tot.back() == doctest::Approx(8.0));
}

TEST_CASE("effective model tracks the exact roughness at strong dephasing") {
  auto c = config(16, 4.0, 60.0);
  c.dt = 0.05;
  const auto exact = evolve(c);
  const auto eff = evolve_effective(c);
  const auto err = relative_error(exact, eff);
  double worst = 0.0;
  for (std::size_t k = 0; k < err.size(); ++k)
    if (exact.times[k] >= 10.0 && err[k]) worst = std::max(worst, *err[k]);
  CHECK(worst < 0.3);
}

TEST_CASE("relative_error skips zero entries") {
  ObservableSeries a, b;
  a.times = b.times = {0.0, 1.0};
  a.w = {0.0, 1.1};
  b.w = {0.0, 1.0};
  const auto e = relative_error(a, b);
  CHECK_FALSE(e[0].has_value());
  CHECK(*e[1] == doctest::Approx(0.1));
}

TEST_CASE("effective engine needs dephasing with gamma > 0") {
  auto c = config(8, 0.0, 1.0);
  CHECK_THROWS_AS(evolve_effective(c), ConfigError);
  c.dissipator = InOut{0.1, 0.1};
  CHECK_THROWS_AS(evolve_effective_adjoint(c), ConfigError);
}
