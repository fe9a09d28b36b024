#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "qrough/config_io.hpp"
#include "qrough/errors.hpp"
#include "qrough/exact_dynamics.hpp"
#include "qrough/oracle.hpp"

using namespace qrough;

namespace {

const RhsKind kKinds[] = {{Statistics::Fermion, Dephasing{0.7}},
                          {Statistics::Fermion, InOut{0.2, 0.3}},
                          {Statistics::Boson, Dephasing{0.7}},
                          {Statistics::Boson, InOut{0.2, 0.6}}};

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// A generic real-gauge state: a Fock state evolved for a while.
CorrelationState evolved(const RhsKind& kind, std::vector<int> occ, double t) {
  auto ev = CorrelationEvolver::from_fock(kind, occ, 0.01, true);
  ev.advance_to(t);
  return ev.to_dense();
}

SystemConfig small_config(Statistics st, Dissipator d, int L, double t_final) {
  SystemConfig c;
  c.L = L;
  c.statistics = st;
  c.dissipator = d;
  c.t_final = t_final;
  c.dt = 0.05;
  for (int i = 0; i <= 10; ++i) c.sample_times.push_back(t_final * i / 10.0);
  return c;
}

}  // namespace

TEST_CASE("rhs_D stencil on a single off-diagonal entry") {
  CorrelationState s(4, Statistics::Fermion);
  s.D(0, 1) = 1.0;
  const auto r = rhs_D(s, {Statistics::Fermion, Dephasing{1.0}});
  const auto at = [&](int m, int n) { return r[static_cast<std::size_t>(m) * 4 + n]; };
  CHECK(at(0, 1) == cplx(-1.0, 0.0));
  CHECK(at(0, 0) == cplx(0.0, 1.0));
  CHECK(at(0, 2) == cplx(0.0, 1.0));
  CHECK(at(1, 1) == cplx(0.0, -1.0));
  int nonzero = 0;
  for (const auto& v : r) nonzero += v != cplx(0.0);
  CHECK(nonzero == 4);
}

TEST_CASE("boson dephasing rate of F_1312") {
  CHECK(four_point_rate(0, 2, 0, 1) == -1);
  CorrelationState s(4, Statistics::Boson);
  s.F(0, 2, 0, 1) = 1.0;
  const double g = 0.8;
  const auto r = rhs_F(s, {Statistics::Boson, Dephasing{g}});
  CHECK(r[s.f_index(0, 2, 0, 1)] == cplx(-g, 0.0));
}

TEST_CASE("fermion uniform state is stationary under dephasing") {
  SystemConfig c = small_config(Statistics::Fermion, Dephasing{1.0}, 4, 1.0);
  c.initial_state = InitialState::Uniform;
  const auto s = build_initial_correlations(c);
  const RhsKind k = rhs_kind(c);
  for (const auto& v : rhs_D(s, k)) CHECK(v == cplx(0.0));
  for (const auto& v : rhs_F(s, k)) CHECK(std::abs(v) == 0.0);
  const auto next = step(s, k, 0.1);
  CHECK(max_diff(next.d, s.d) == 0.0);
  CHECK(max_diff(next.f, s.f) == 0.0);
}

TEST_CASE("in/out fixed point of the diagonal") {
  const double gi = 0.2;
  const double go = 0.3;
  CorrelationState s(6, Statistics::Fermion, false);
  for (int m = 0; m < 6; ++m) s.D(m, m) = gi / (gi + go);
  const auto r = rhs_D(s, {Statistics::Fermion, InOut{gi, go}});
  for (int m = 0; m < 6; ++m) CHECK(std::abs(r[static_cast<std::size_t>(m) * 6 + m]) < 1e-15);
}

TEST_CASE("packed real-gauge kernel matches the dense equations") {
  for (const auto& kind : kKinds) {
    const bool fermion = kind.statistics == Statistics::Fermion;
    const std::vector<int> occ = fermion ? std::vector<int>{1, 1, 0, 1, 0, 0}
                                         : std::vector<int>{2, 0, 1, 1, 0};
    const CorrelationState s = evolved(kind, occ, 0.9);
    const double h = 0.05;
    const CorrelationState dense = step(s, kind, h);
    CorrelationEvolver ev(kind, s, h);
    ev.step(h);
    const CorrelationState packed = ev.to_dense();
    CHECK(max_diff(dense.d, packed.d) < 1e-13);
    CHECK(max_diff(dense.f, packed.f) < 1e-13);
  }
}

TEST_CASE("evolved states stay in the real gauge with exact symmetries") {
  for (const auto& kind : kKinds) {
    const CorrelationState s = evolved(kind, {1, 0, 1, 1, 0, 1}, 1.3);
    double resid = 0.0;
    for (int m = 0; m < s.L; ++m)
      for (int n = 0; n < s.L; ++n) resid = std::max(resid, std::abs((s.D(m, n) / i_pow(n - m)).imag()));
    CHECK(resid < 1e-14);
    const auto r = symmetry_residuals(s);
    CHECK(r.d_hermiticity < 1e-14);
    CHECK(r.f_exchange < 1e-14);
    CHECK(r.f_hermiticity < 1e-14);
    CHECK(r.fermion_pauli < 1e-14);
  }
}

TEST_CASE("non-gauge initial states are rejected") {
  CorrelationState s(4, Statistics::Fermion);
  s.D(0, 1) = 0.3;  // must be imaginary in the gauge
  s.D(1, 0) = 0.3;
  CHECK_THROWS_AS(CorrelationEvolver({Statistics::Fermion, Dephasing{1.0}}, s, 0.1), ConfigError);
}

TEST_CASE("two-site Rabi oscillation") {
  const std::vector<int> occ{1, 0};
  auto ev = CorrelationEvolver::from_fock({Statistics::Fermion, Dephasing{0.0}}, occ, 0.01, true);
  for (double t : {0.3, 0.8, 1.7, 2.5}) {
    ev.advance_to(t);
    CHECK(ev.D(0, 0).real() == doctest::Approx(std::cos(t) * std::cos(t)).epsilon(1e-8));
  }
}

TEST_CASE("staggered fermions L=8 match the oracle up to t=1") {
  const RhsKind kind{Statistics::Fermion, Dephasing{1.0}};
  const std::vector<int> occ = occupation_pattern(InitialState::Staggered, 8);
  const oracle::FockBasis basis(8, Statistics::Fermion, 1, 4);
  const auto gen = oracle::build_lindbladian(kind.dissipator, basis);
  const std::vector<double> grid{0.5, 1.0};
  const auto rhos = oracle::evolve_rho(oracle::pure_state(basis, occ), gen, grid, 0.01);
  auto ev = CorrelationEvolver::from_fock(kind, occ, 0.01, false);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    ev.advance_to(grid[k]);
    const auto ref = oracle::correlations_from_rho(rhos[k], basis);
    double dev = 0.0;
    for (int m = 0; m < 8; ++m)
      for (int n = 0; n < 8; ++n) dev = std::max(dev, std::abs(ev.D(m, n) - ref.D(m, n)));
    CHECK(dev < 1e-6);
  }
}

TEST_CASE("dephasing conserves N and N^2") {
  for (auto st : {Statistics::Fermion, Statistics::Boson}) {
    const auto s = evolve(small_config(st, Dephasing{1.0}, 12, 5.0));
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s.n_tot[i] == doctest::Approx(6.0).epsilon(1e-12));
      CHECK(s.n_tot_sq[i] == doctest::Approx(36.0).epsilon(1e-12));
    }
    CHECK(s.w.front() == 0.0);
  }
}

TEST_CASE("dephasing step conserves the trace of D") {
  const RhsKind kind{Statistics::Fermion, Dephasing{1.5}};
  CorrelationState s = evolved(kind, {1, 1, 0, 0, 1, 0}, 0.4);
  cplx before{};
  for (int m = 0; m < s.L; ++m) before += s.D(m, m);
  s = step(s, kind, 0.1);
  cplx after{};
  for (int m = 0; m < s.L; ++m) after += s.D(m, m);
  CHECK(std::abs(after - before) < 1e-12);
}

TEST_CASE("mean-number law under in/out flow") {
  const double gi = 0.2;
  const double go = 0.6;
  for (auto st : {Statistics::Fermion, Statistics::Boson}) {
    SystemConfig c = small_config(st, InOut{gi, go}, 10, 8.0);
    c.dt = 0.01;
    const auto s = evolve_D_only(c);
    const double rate = st == Statistics::Fermion ? gi + go : go - gi;
    const double n_eq = c.L * gi / rate;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double expect = n_eq + (5.0 - n_eq) * std::exp(-rate * s.times[i]);
      CHECK(s.n_tot[i] == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("no rates keep N constant in the D-only path") {
  const auto s = evolve_D_only(small_config(Statistics::Boson, InOut{0.0, 0.0}, 16, 4.0));
  for (double n : s.n_tot) CHECK(std::abs(n - 8.0) < 1e-10);
}

TEST_CASE("transfer vanishes for the uniform state and grows from a domain wall") {
  SystemConfig c = small_config(Statistics::Fermion, Dephasing{0.5}, 16, 6.0);
  c.initial_state = InitialState::Uniform;
  for (double p : evolve_D_only(c).p_tra) CHECK(std::abs(p) < 1e-9);
  c.initial_state = InitialState::DomainWall;
  const auto s = evolve_D_only(c);
  CHECK(s.p_tra.front() == 0.0);
  CHECK(s.p_tra.back() > 0.5);
  CHECK(s.p_tra.back() < 8.0);
}

TEST_CASE("fermion uniform state keeps w = 0") {
  SystemConfig c = small_config(Statistics::Fermion, Dephasing{1.0}, 8, 3.0);
  c.initial_state = InitialState::Uniform;
  for (double w : evolve(c).w) CHECK(w == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("D-only rejects four-point observables") {
  const auto c = small_config(Statistics::Fermion, Dephasing{1.0}, 8, 1.0);
  CHECK_THROWS_AS(evolve_D_only(c, {true, true, false, false}), ConfigError);
}

TEST_CASE("memory guard names the D-only alternative") {
  const auto c = small_config(Statistics::Fermion, Dephasing{1.0}, 64, 1.0);
  EvolveOptions o;
  o.mem_cap_bytes = 1 << 20;
  try {
    evolve(c, {}, o);
    FAIL("expected ResourceError");
  } catch (const ResourceError& e) {
    CHECK(std::string(e.what()).find("evolve_D_only") != std::string::npos);
  }
}

TEST_CASE("non-finite state raises a numerical error") {
  SystemConfig c = small_config(Statistics::Boson, Dephasing{2.0}, 8, 300.0);
  c.dt = 3.0;
  c.sample_times = {0.0, 300.0};
  CHECK_THROWS_AS(evolve(c), NumericalError);
}

TEST_CASE("diagnostics start at zero and follow the G equation") {
  SystemConfig c = small_config(Statistics::Fermion, Dephasing{0.25}, 8, 2.0);
  DiagnosticsRequest req;
  req.tracked = {{3, 6, 3, 6}, {4, 6, 3, 6}};
  const auto samples = evolve_diagnostics(c, req);
  for (const auto& v : samples.front().G) CHECK(v == cplx(0.0));
  for (const auto& v : samples.front().I) CHECK(v == cplx(0.0));
  CHECK(std::abs(samples.back().G[3 * 8 + 3]) > 0.0);
  CHECK_THROWS_AS(evolve_diagnostics(small_config(Statistics::Fermion, InOut{0.1, 0.1}, 8, 1.0), req),
                  ConfigError);
}

TEST_CASE("snapshot round trip") {
  const RhsKind kind{Statistics::Boson, InOut{0.2, 0.6}};
  const CorrelationState s = evolved(kind, {1, 0, 2, 0}, 0.5);
  const auto path = std::filesystem::temp_directory_path() / "qrough_snapshot_test.bin";
  write_snapshot(path, s, kind.dissipator);
  const Snapshot back = read_snapshot(path);
  std::filesystem::remove(path);
  CHECK(back.state.L == s.L);
  CHECK(back.state.t == s.t);
  CHECK(max_diff(back.state.d, s.d) == 0.0);
  CHECK(max_diff(back.state.f, s.f) == 0.0);
  CHECK(std::get<InOut>(back.dissipator).gamma_out == 0.6);
}

TEST_CASE("RK4 is fourth order") {
  SystemConfig c = small_config(Statistics::Fermion, Dephasing{1.0}, 8, 4.0);
  c.sample_times = {0.0, 4.0};
  const auto w_at = [&](double dt) {
    c.dt = dt;
    return evolve(c, {true, false, false, false}).w.back();
  };
  const double ref = w_at(0.003125);
  const double e1 = std::abs(w_at(0.05) - ref);
  const double e2 = std::abs(w_at(0.025) - ref);
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
}
