#include <doctest.h>

#include <cmath>

#include "qrough/errors.hpp"
#include "qrough/exact_dynamics.hpp"
#include "qrough/oracle.hpp"

using namespace qrough;
using namespace qrough::oracle;

namespace {

OracleCheckReport check(Statistics st, Dissipator d, std::vector<int> occ, int n_max = 4) {
  OracleCheckSpec spec;
  spec.kind = {st, d};
  spec.occupations = std::move(occ);
  spec.n_max = n_max;
  spec.dt = 0.01;
  return oracle_check(spec);
}

}  // namespace

TEST_CASE("basis dimensions") {
  CHECK(FockBasis(4, Statistics::Fermion).dimension() == 16);
  CHECK(FockBasis(6, Statistics::Fermion, 1, 3).dimension() == 20);
  CHECK(FockBasis(3, Statistics::Boson, 4).dimension() == 125);
  CHECK(FockBasis(3, Statistics::Fermion, 7).n_max() == 1);
  const FockBasis b(3, Statistics::Boson, 2);
  for (std::size_t i = 0; i < b.dimension(); ++i) CHECK(b.index(b.occupation(i)) == i);
}

TEST_CASE("fermion operators anticommute across sites") {
  const FockBasis b(3, Statistics::Fermion);
  const Ladder a0[] = {{0, false}};
  const Ladder a2d[] = {{2, true}};
  const Ladder prod1[] = {{0, false}, {2, true}};
  const Ladder prod2[] = {{2, true}, {0, false}};
  const SparseC x = operator_matrix(b, prod1);
  const SparseC y = operator_matrix(b, prod2);
  const SparseC sum = x + y;
  CHECK(sum.norm() == 0.0);
  const SparseC prod = operator_matrix(b, a0) * operator_matrix(b, a2d);
  const SparseC diff = prod - x;
  CHECK(diff.norm() == 0.0);
}

TEST_CASE("generator preserves the trace") {
  const FockBasis b(3, Statistics::Boson, 2);
  const SparseC s = build_lindbladian(InOut{0.3, 0.5}, b);
  const auto dim = static_cast<Eigen::Index>(b.dimension());
  Eigen::VectorXcd trace_row = Eigen::VectorXcd::Zero(dim * dim);
  for (Eigen::Index i = 0; i < dim; ++i) trace_row(i * dim + i) = 1.0;
  const Eigen::VectorXcd col = s.adjoint() * trace_row;
  CHECK(col.norm() < 1e-13);
}

TEST_CASE("zero generator and diagonal dephasing leave rho unchanged") {
  const FockBasis b(4, Statistics::Fermion);
  const std::vector<int> occ{1, 0, 1, 0};
  const auto rho0 = pure_state(b, occ);
  const SparseC zero(static_cast<Eigen::Index>(b.dimension() * b.dimension()),
                     static_cast<Eigen::Index>(b.dimension() * b.dimension()));
  const std::vector<double> grid{1.0};
  CHECK((evolve_rho(rho0, zero, grid, 0.1)[0].rho - rho0.rho).norm() == 0.0);
  Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Zero(16, 16);
  mixed(3, 3) = 0.25;
  mixed(5, 5) = 0.75;
  // Jumps n_j alone (no hopping) keep any diagonal rho fixed: test via the dissipator part.
  const SparseC full = build_lindbladian(Dephasing{1.0}, b);
  const SparseC ham = build_lindbladian(Dephasing{0.0}, b);
  const SparseC diss = full - ham;
  const Eigen::VectorXcd v = Eigen::Map<Eigen::VectorXcd>(mixed.data(), 256);
  CHECK((diss * v).norm() < 1e-14);
}

TEST_CASE("L=1 dephasing keeps populations") {
  const FockBasis b(1, Statistics::Fermion);
  const std::vector<int> occ{1};
  const auto out = evolve_rho(pure_state(b, occ), build_lindbladian(Dephasing{2.0}, b),
                              std::vector<double>{3.0}, 0.01);
  CHECK(std::abs(out[0].rho(1, 1) - 1.0) < 1e-14);
}

TEST_CASE("two-site Rabi oscillation in the oracle") {
  const FockBasis b(2, Statistics::Fermion);
  const std::vector<int> occ{1, 0};
  const std::vector<double> grid{0.4, 1.1, 2.0};
  const auto rhos = evolve_rho(pure_state(b, occ), build_lindbladian(Dephasing{0.0}, b), grid, 0.001);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto s = correlations_from_rho(rhos[k], b);
    CHECK(s.D(0, 0).real() == doctest::Approx(std::pow(std::cos(grid[k]), 2)).epsilon(1e-10));
  }
}

TEST_CASE("maximally mixed two-site fermions") {
  const FockBasis b(2, Statistics::Fermion);
  DensityMatrix rho;
  rho.rho = Eigen::MatrixXcd::Identity(4, 4) / 4.0;
  const auto s = correlations_from_rho(rho, b);
  CHECK(s.D(0, 0) == cplx(0.5));
  CHECK(s.D(1, 1) == cplx(0.5));
  CHECK(s.D(0, 1) == cplx(0.0));
  const auto r = symmetry_residuals(s);
  CHECK(r.d_hermiticity == 0.0);
  CHECK(r.f_exchange == 0.0);
  CHECK(r.f_hermiticity == 0.0);
}

TEST_CASE("oracle mean-number law for fermion in/out flow") {
  const FockBasis b(4, Statistics::Fermion);
  const std::vector<int> occ{0, 1, 0, 1};
  const std::vector<double> grid{1.0, 2.0, 4.0};
  const double gi = 0.2, go = 0.2;
  const auto rhos = evolve_rho(pure_state(b, occ), build_lindbladian(InOut{gi, go}, b), grid, 0.01);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto s = correlations_from_rho(rhos[k], b);
    const double n = total_number(s);
    CHECK(n == doctest::Approx(2.0).epsilon(1e-8));
  }
  const std::vector<int> full{1, 1, 1, 1};
  const auto rhos2 = evolve_rho(pure_state(b, full), build_lindbladian(InOut{gi, 0.6}, b),
                                grid, 0.01);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double neq = 4.0 * gi / (gi + 0.6);
    const double expect = neq + (4.0 - neq) * std::exp(-(gi + 0.6) * grid[k]);
    CHECK(std::abs(total_number(correlations_from_rho(rhos2[k], b)) - expect) < 1e-8);
  }
}

TEST_CASE("rhs matches the oracle finite difference at t = 0") {
  const RhsKind kind{Statistics::Fermion, InOut{0.2, 0.2}};
  const std::vector<int> occ{0, 1, 0, 1};
  const FockBasis b(4, Statistics::Fermion);
  const double h = 1e-4;
  const auto rhos = evolve_rho(pure_state(b, occ), build_lindbladian(kind.dissipator, b),
                               std::vector<double>{h}, h);
  const auto s0 = fock_correlations(occ, Statistics::Fermion, true);
  const auto s1 = correlations_from_rho(rhos[0], b);
  const auto rd = rhs_D(s0, kind);
  const auto rf = rhs_F(s0, kind);
  for (std::size_t i = 0; i < rd.size(); ++i) CHECK(std::abs((s1.d[i] - s0.d[i]) / h - rd[i]) < 1e-3);
  for (std::size_t i = 0; i < rf.size(); ++i) CHECK(std::abs((s1.f[i] - s0.f[i]) / h - rf[i]) < 1e-3);
}

TEST_CASE("oracle equivalence for the number-conserving and loss cases") {
  CHECK(check(Statistics::Fermion, Dephasing{1.0}, {0, 1, 0, 1}).pass);
  CHECK(check(Statistics::Fermion, Dephasing{0.5}, {1, 1, 1, 0, 0, 0}).pass);
  CHECK(check(Statistics::Fermion, InOut{0.2, 0.2}, {0, 1, 0, 1}).pass);
  CHECK(check(Statistics::Fermion, InOut{0.3, 0.1}, {1, 1, 0, 0, 0, 0}).pass);
  CHECK(check(Statistics::Boson, Dephasing{2.0}, {1, 1, 1}).pass);
  CHECK(check(Statistics::Boson, Dephasing{1.0}, {0, 1, 0}).pass);
  CHECK(check(Statistics::Boson, InOut{0.0, 0.2}, {1, 1, 1}).pass);
}

TEST_CASE("boson truncation converges with n_max for dephasing") {
  const std::vector<int> occ{1, 1, 1};
  const FockBasis b3(3, Statistics::Boson, 3);
  const FockBasis b4(3, Statistics::Boson, 4);
  const std::vector<double> grid{2.0};
  const auto r3 = evolve_rho(pure_state(b3, occ), build_lindbladian(Dephasing{1.0}, b3), grid, 0.01);
  const auto r4 = evolve_rho(pure_state(b4, occ), build_lindbladian(Dephasing{1.0}, b4), grid, 0.01);
  const auto s3 = correlations_from_rho(r3[0], b3);
  const auto s4 = correlations_from_rho(r4[0], b4);
  double dev = 0.0;
  for (std::size_t i = 0; i < s3.f.size(); ++i) dev = std::max(dev, std::abs(s3.f[i] - s4.f[i]));
  CHECK(dev < 1e-8);
}

TEST_CASE("boson gain: oracle truncation error shrinks geometrically with n_max") {
  double prev = INFINITY;
  for (int n_max : {4, 6, 8}) {
    const auto r = check(Statistics::Boson, InOut{0.2, 0.6}, {1, 1}, n_max);
    CHECK(r.max_dev_D < prev / 4.0);
    prev = r.max_dev_D;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("negative control: corrupted roughness sign fails") {
  OracleCheckSpec spec;
  spec.kind = {Statistics::Fermion, Dephasing{1.0}};
  spec.occupations = {0, 1, 0, 1};
  spec.corrupt_roughness_sign = true;
  const auto r = oracle_check(spec);
  CHECK_FALSE(r.pass);
  CHECK(r.max_dev_w2 > 1e-3);
}

TEST_CASE("dimension guard") {
  const FockBasis b(11, Statistics::Fermion);
  CHECK_THROWS_AS(build_lindbladian(Dephasing{1.0}, b), ResourceError);
}

TEST_CASE("trace drift stays below 1e-9") {
  const auto r = check(Statistics::Fermion, Dephasing{1.0}, {1, 0, 1, 0});
  CHECK(r.max_trace_drift < 1e-9);
}
