#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "qrough/config_io.hpp"
#include "qrough/errors.hpp"
#include "qrough/model.hpp"
#include "qrough/oracle.hpp"

using namespace qrough;

namespace {

SystemConfig valid_config() {
  SystemConfig c;
  c.L = 8;
  c.t_final = 2.0;
  c.sample_times = {0.0, 1.0, 2.0};
  return c;
}

}  // namespace

TEST_CASE("occupation patterns") {
  CHECK(occupation_pattern(InitialState::Staggered, 6) == std::vector<int>{0, 1, 0, 1, 0, 1});
  CHECK(occupation_pattern(InitialState::DomainWall, 6) == std::vector<int>{1, 1, 1, 0, 0, 0});
  CHECK(occupation_pattern(InitialState::Uniform, 4) == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("fermion staggered L=4 initial correlations") {
  SystemConfig c = valid_config();
  c.L = 4;
  const CorrelationState s = build_initial_correlations(c);
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n)
      CHECK(s.D(m, n) == cplx(m == n && m % 2 == 1 ? 1.0 : 0.0));
  // Sites 2 and 4 are indices 1 and 3.
  CHECK(s.F(1, 3, 1, 3) == cplx(-1.0));
  CHECK(s.F(1, 3, 3, 1) == cplx(1.0));
  CHECK(s.F(1, 1, 1, 1) == cplx(0.0));
}

TEST_CASE("initial correlations agree with the Fock-space oracle") {
  for (auto st : {Statistics::Fermion, Statistics::Boson}) {
    const std::vector<int> occ =
        st == Statistics::Fermion ? std::vector<int>{0, 1, 0, 1} : std::vector<int>{1, 1};
    const oracle::FockBasis basis(static_cast<int>(occ.size()), st, 2);
    const auto ref = oracle::correlations_from_rho(oracle::pure_state(basis, occ), basis);
    const auto got = fock_correlations(occ, st, true);
    for (std::size_t i = 0; i < got.d.size(); ++i) CHECK(std::abs(got.d[i] - ref.d[i]) < 1e-14);
    for (std::size_t i = 0; i < got.f.size(); ++i) CHECK(std::abs(got.f[i] - ref.f[i]) < 1e-14);
  }
}

TEST_CASE("boson uniform L=2 initial correlations") {
  const std::vector<int> occ{1, 1};
  const auto s = fock_correlations(occ, Statistics::Boson, true);
  CHECK(s.D(0, 0) == cplx(1.0));
  CHECK(s.D(1, 1) == cplx(1.0));
  CHECK(s.F(0, 1, 0, 1) == cplx(1.0));
  CHECK(s.F(0, 1, 1, 0) == cplx(1.0));
  CHECK(s.F(0, 0, 0, 0) == cplx(0.0));
}

TEST_CASE("fermion uniform state is a filled determinant") {
  SystemConfig c = valid_config();
  c.L = 4;
  c.initial_state = InitialState::Uniform;
  const auto s = build_initial_correlations(c);
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      CHECK(s.D(m, n) == cplx(m == n ? 1.0 : 0.0));
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) {
          if (m == n) continue;
          const double e = (m == q && n == p ? 1.0 : 0.0) - (m == p && n == q ? 1.0 : 0.0);
          CHECK(s.F(m, n, p, q) == cplx(e));
        }
    }
}

TEST_CASE("symmetry residuals vanish for Fock states") {
  for (auto st : {Statistics::Fermion, Statistics::Boson}) {
    const std::vector<int> occ{1, 0, 1, 1, 0, 0};
    const auto r = symmetry_residuals(fock_correlations(occ, st, true));
    CHECK(r.d_hermiticity == 0.0);
    CHECK(r.f_exchange == 0.0);
    CHECK(r.f_hermiticity == 0.0);
    CHECK(r.fermion_pauli == 0.0);
  }
}

TEST_CASE("validate_config") {
  CHECK(validate_config(valid_config()).empty());
  SystemConfig odd = valid_config();
  odd.L = 5;
  CHECK(validate_config(odd) == std::vector<std::string>{"L must be even"});
  SystemConfig neg = valid_config();
  neg.dissipator = Dephasing{-1.0};
  CHECK(validate_config(neg) == std::vector<std::string>{"rates must be nonnegative"});
  SystemConfig unordered = valid_config();
  unordered.sample_times = {0.0, 2.0, 1.0};
  CHECK(validate_config(unordered).size() == 1);
  CHECK_THROWS_AS(require_valid(odd), ConfigError);
}

TEST_CASE("filling follows the initial state") {
  SystemConfig c = valid_config();
  CHECK(filling(c) == doctest::Approx(0.5));
  c.initial_state = InitialState::Uniform;
  CHECK(filling(c) == doctest::Approx(1.0));
}

TEST_CASE("config JSON round trip and unknown keys") {
  const nlohmann::json j = {{"L", 16},
                            {"statistics", "boson"},
                            {"dissipator", {{"kind", "inout"}, {"gamma_in", 0.2}, {"gamma_out", 0.6}}},
                            {"initial_state", "domain_wall"},
                            {"dt", 0.05},
                            {"t_final", 3.0},
                            {"sample_spec", {{"log_points", 5}, {"linear_points", 3}, {"t_min", 0.1}}}};
  const SystemConfig c = config_from_json(j);
  CHECK(c.L == 16);
  CHECK(c.statistics == Statistics::Boson);
  CHECK(std::get<InOut>(c.dissipator).gamma_out == 0.6);
  CHECK(c.sample_times.front() == 0.0);
  CHECK(c.sample_times.back() == doctest::Approx(3.0));
  CHECK(std::is_sorted(c.sample_times.begin(), c.sample_times.end()));
  const SystemConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));

  nlohmann::json bad = j;
  bad["colour"] = "red";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  nlohmann::json bad_diss = j;
  bad_diss["dissipator"]["kind"] = "heating";
  CHECK_THROWS_AS(config_from_json(bad_diss), ConfigError);
}

TEST_CASE("sample spec expansion") {
  const auto ts = expand_sample_spec({4, 4, 0.5}, 8.0);
  CHECK(ts.front() == 0.0);
  CHECK(ts.back() == doctest::Approx(8.0));
  CHECK(std::adjacent_find(ts.begin(), ts.end(), std::greater_equal<>()) == ts.end());
  CHECK_THROWS_AS(expand_sample_spec({4, 0, 9.0}, 8.0), ConfigError);
}
