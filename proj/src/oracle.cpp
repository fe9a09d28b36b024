#include "qrough/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qrough/errors.hpp"
#include "qrough/observables.hpp"

namespace qrough::oracle {

namespace {

constexpr std::size_t kMaxBasis = 1'000'000;

using Triplet = Eigen::Triplet<cplx>;

/// Applies ops right to left to occ in place; returns the amplitude (0 if annihilated).
double apply(std::vector<int>& occ, std::span<const Ladder> ops, Statistics stats, int n_max) {
  double amp = 1.0;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const int j = it->site;
    if (j < 0 || j >= static_cast<int>(occ.size())) throw ConfigError("ladder site outside chain");
    if (stats == Statistics::Fermion) {
      int parity = 0;
      for (int k = 0; k < j; ++k) parity += occ[k];
      const double sign = parity % 2 == 0 ? 1.0 : -1.0;
      if (it->dagger) {
        if (occ[j] == 1) return 0.0;
        occ[j] = 1;
      } else {
        if (occ[j] == 0) return 0.0;
        occ[j] = 0;
      }
      amp *= sign;
    } else {
      if (it->dagger) {
        if (occ[j] >= n_max) return 0.0;
        amp *= std::sqrt(static_cast<double>(occ[j] + 1));
        ++occ[j];
      } else {
        if (occ[j] == 0) return 0.0;
        amp *= std::sqrt(static_cast<double>(occ[j]));
        --occ[j];
      }
    }
  }
  return amp;
}

/// (X kron Y) for sparse matrices.
SparseC kron(const SparseC& x, const SparseC& y) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(x.nonZeros()) * static_cast<std::size_t>(y.nonZeros()));
  for (int kx = 0; kx < x.outerSize(); ++kx)
    for (SparseC::InnerIterator ix(x, kx); ix; ++ix)
      for (int ky = 0; ky < y.outerSize(); ++ky)
        for (SparseC::InnerIterator iy(y, ky); iy; ++iy)
          trips.emplace_back(ix.row() * y.rows() + iy.row(), ix.col() * y.cols() + iy.col(),
                             ix.value() * iy.value());
  SparseC out(x.rows() * y.rows(), x.cols() * y.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseC identity(Eigen::Index n) {
  SparseC id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

FockBasis::FockBasis(int L, Statistics statistics, int n_max, std::optional<int> sector)
    : L_(L),
      statistics_(statistics),
      n_max_(statistics == Statistics::Fermion ? 1 : n_max),
      sector_(sector) {
  if (L < 1) throw ConfigError("FockBasis needs at least one site");
  if (n_max_ < 1) throw ConfigError("n_max must be at least 1");
  if (sector_ && (*sector_ < 0 || *sector_ > L * n_max_))
    throw ConfigError("particle-number sector out of range");
  double full = std::pow(static_cast<double>(n_max_ + 1), L);
  if (full > static_cast<double>(kMaxBasis)) throw ResourceError("Fock basis too large");

  std::vector<int> occ(static_cast<std::size_t>(L), 0);
  const auto total = static_cast<std::size_t>(full);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    int n = 0;
    for (int j = L - 1; j >= 0; --j) {
      occ[j] = static_cast<int>(c % static_cast<std::size_t>(n_max_ + 1));
      c /= static_cast<std::size_t>(n_max_ + 1);
      n += occ[j];
    }
    if (sector_ && n != *sector_) continue;
    lookup_.emplace(key(occ), states_.size());
    states_.push_back(occ);
  }
}

std::size_t FockBasis::key(std::span<const int> occ) const {
  std::size_t k = 0;
  for (int v : occ) k = k * static_cast<std::size_t>(n_max_ + 1) + static_cast<std::size_t>(v);
  return k;
}

std::optional<std::size_t> FockBasis::index(std::span<const int> occupations) const {
  if (occupations.size() != static_cast<std::size_t>(L_)) return std::nullopt;
  for (int v : occupations)
    if (v < 0 || v > n_max_) return std::nullopt;
  const auto it = lookup_.find(key(occupations));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

SparseC operator_matrix(const FockBasis& basis, std::span<const Ladder> ops) {
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  std::vector<Triplet> trips;
  std::vector<int> occ;
  for (std::size_t j = 0; j < basis.dimension(); ++j) {
    const auto src = basis.occupation(j);
    occ.assign(src.begin(), src.end());
    const double amp = apply(occ, ops, basis.statistics(), basis.n_max());
    if (amp == 0.0) continue;
    if (const auto i = basis.index(occ))
      trips.emplace_back(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(j), amp);
  }
  SparseC out(dim, dim);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseC hamiltonian(const FockBasis& basis) {
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  SparseC h(dim, dim);
  for (int j = 0; j + 1 < basis.sites(); ++j) {
    const Ladder fwd[] = {{j + 1, true}, {j, false}};
    const Ladder bwd[] = {{j, true}, {j + 1, false}};
    h -= operator_matrix(basis, fwd);
    h -= operator_matrix(basis, bwd);
  }
  return h;
}

std::vector<SparseC> jump_operators(const FockBasis& basis, const Dissipator& dissipator) {
  std::vector<SparseC> out;
  if (const auto* dep = std::get_if<Dephasing>(&dissipator)) {
    if (dep->gamma == 0.0) return out;
    const double s = std::sqrt(dep->gamma);
    for (int j = 0; j < basis.sites(); ++j) {
      const Ladder n[] = {{j, true}, {j, false}};
      out.push_back(s * operator_matrix(basis, n));
    }
    return out;
  }
  const auto& io = std::get<InOut>(dissipator);
  if (basis.sector()) throw ConfigError("in/out dissipation needs the full Fock space");
  for (int j = 0; j < basis.sites(); ++j) {
    if (io.gamma_in > 0.0) {
      const Ladder up[] = {{j, true}};
      out.push_back(std::sqrt(io.gamma_in) * operator_matrix(basis, up));
    }
    if (io.gamma_out > 0.0) {
      const Ladder down[] = {{j, false}};
      out.push_back(std::sqrt(io.gamma_out) * operator_matrix(basis, down));
    }
  }
  return out;
}

SparseC build_lindbladian(const Dissipator& dissipator, const FockBasis& basis) {
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  if (basis.dimension() * basis.dimension() > kMaxSuperDim) {
    std::ostringstream msg;
    msg << "superoperator dimension " << basis.dimension() * basis.dimension()
        << " exceeds the limit " << kMaxSuperDim;
    throw ResourceError(msg.str());
  }
  const SparseC id = identity(dim);
  const SparseC h = hamiltonian(basis);
  const SparseC ht = SparseC(h.transpose());
  const cplx mi{0.0, -1.0};
  SparseC s = mi * (kron(id, h) - kron(ht, id));
  for (const SparseC& j : jump_operators(basis, dissipator)) {
    const SparseC jd = SparseC(j.adjoint());
    const SparseC jdj = jd * j;
    const SparseC jdjt = SparseC(jdj.transpose());
    s += kron(SparseC(j.conjugate()), j);
    s -= 0.5 * kron(id, jdj);
    s -= 0.5 * kron(jdjt, id);
  }
  s.makeCompressed();
  return s;
}

DensityMatrix pure_state(const FockBasis& basis, std::span<const int> occupations) {
  const auto i = basis.index(occupations);
  if (!i) throw ConfigError("initial occupations are not in the basis");
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  DensityMatrix out;
  out.rho = Eigen::MatrixXcd::Zero(dim, dim);
  out.rho(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*i)) = 1.0;
  return out;
}

std::vector<DensityMatrix> evolve_rho(const DensityMatrix& rho0, const SparseC& generator,
                                      std::span<const double> t_grid, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const Eigen::Index dim = rho0.rho.rows();
  if (generator.rows() != dim * dim) throw ConfigError("generator does not match rho");
  Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho0.rho.data(), dim * dim);
  Eigen::VectorXcd k1, k2, k3, k4;
  double t = rho0.t;
  const auto rk4 = [&](double h) {
    k1 = generator * v;
    k2 = generator * (v + (h / 2) * k1);
    k3 = generator * (v + (h / 2) * k2);
    k4 = generator * (v + h * k3);
    v += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  };
  std::vector<DensityMatrix> out;
  for (double target : t_grid) {
    if (target < t - 1e-12) throw ConfigError("t_grid must be increasing and start at or after rho0.t");
    const double eps = 1e-12 * std::max(1.0, std::abs(target));
    while (target - t > eps) {
      const double remaining = target - t;
      if (remaining <= dt * (1.0 + 1e-9)) {
        rk4(remaining);
        t = target;
      } else {
        rk4(dt);
      }
    }
    if (!v.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite density matrix at t=" << t;
      throw NumericalError(msg.str());
    }
    DensityMatrix s;
    s.rho = Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim);
    s.t = target;
    out.push_back(std::move(s));
  }
  return out;
}

CorrelationState correlations_from_rho(const DensityMatrix& rho, const FockBasis& basis) {
  const int L = basis.sites();
  CorrelationState st(L, basis.statistics(), true);
  st.t = rho.t;
  std::vector<int> occ;
  const auto expect = [&](std::span<const Ladder> ops) {
    cplx acc{};
    for (std::size_t k = 0; k < basis.dimension(); ++k) {
      const auto src = basis.occupation(k);
      occ.assign(src.begin(), src.end());
      const double amp = apply(occ, ops, basis.statistics(), basis.n_max());
      if (amp == 0.0) continue;
      if (const auto kp = basis.index(occ))
        acc += rho.rho(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(*kp)) * amp;
    }
    return acc;
  };
  for (int m = 0; m < L; ++m)
    for (int n = 0; n < L; ++n) {
      const Ladder two[] = {{m, true}, {n, false}};
      st.D(m, n) = expect(two);
      for (int p = 0; p < L; ++p)
        for (int q = 0; q < L; ++q) {
          const Ladder four[] = {{m, true}, {n, true}, {p, false}, {q, false}};
          st.F(m, n, p, q) = expect(four);
        }
    }
  return st;
}

double height_variance(const DensityMatrix& rho, const FockBasis& basis) {
  const int half = basis.sites() / 2;
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const auto occ = basis.occupation(i);
    double h = 0.0;
    for (int k = 0; k < half; ++k) h += occ[k];
    const double p = rho.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    mean += p * h;
    second += p * h * h;
  }
  return second - mean * mean;
}

nlohmann::json OracleCheckReport::to_json() const {
  return {{"max_dev_D", max_dev_D},         {"max_dev_F", max_dev_F},
          {"max_dev_w2", max_dev_w2},       {"max_trace_drift", max_trace_drift},
          {"tolerance", tolerance},         {"hilbert_dim", hilbert_dim},
          {"pass", pass}};
}

OracleCheckReport oracle_check(const OracleCheckSpec& spec) {
  const int L = static_cast<int>(spec.occupations.size());
  const Statistics stats = spec.kind.statistics;
  const FockBasis basis(L, stats, spec.n_max);
  const SparseC gen = build_lindbladian(spec.kind.dissipator, basis);
  const double dt = spec.dt.value_or(default_dt(spec.kind.dissipator));

  std::vector<double> grid = spec.check_times;
  if (grid.empty()) {
    const int n = static_cast<int>(std::ceil(spec.t_final / 0.5 - 1e-9));
    for (int i = 0; i <= n; ++i) grid.push_back(std::min(spec.t_final, 0.5 * i));
  }
  const auto rhos = evolve_rho(pure_state(basis, spec.occupations), gen, grid, dt);

  CorrelationEvolver ev(spec.kind, fock_correlations(spec.occupations, stats, true), dt);
  double n0 = 0.0;
  for (int v : spec.occupations) n0 += v;
  const double nu = n0 / L;
  const Statistics w_stats = spec.corrupt_roughness_sign
                                 ? (stats == Statistics::Fermion ? Statistics::Boson
                                                                 : Statistics::Fermion)
                                 : stats;

  OracleCheckReport rep;
  rep.tolerance = spec.tolerance;
  rep.hilbert_dim = basis.dimension();
  for (std::size_t s = 0; s < grid.size(); ++s) {
    ev.advance_to(grid[s]);
    const CorrelationState ref = correlations_from_rho(rhos[s], basis);
    for (int m = 0; m < L; ++m)
      for (int n = 0; n < L; ++n) {
        rep.max_dev_D = std::max(rep.max_dev_D, std::abs(ev.D(m, n) - ref.D(m, n)));
        for (int p = 0; p < L; ++p)
          for (int q = 0; q < L; ++q)
            rep.max_dev_F =
                std::max(rep.max_dev_F, std::abs(ev.F(m, n, p, q) - ref.F(m, n, p, q)));
      }
    double sd = 0.0;
    double sf = 0.0;
    for (int m = 0; m < L / 2; ++m) {
      sd += ev.D(m, m).real();
      for (int n = 0; n < L / 2; ++n) sf += ev.F(m, n, m, n).real();
    }
    const double w2 = roughness_squared(w_stats, L, nu, sd, sf);
    rep.max_dev_w2 = std::max(rep.max_dev_w2, std::abs(w2 - height_variance(rhos[s], basis)));
    rep.max_trace_drift = std::max(rep.max_trace_drift, std::abs(rhos[s].rho.trace() - 1.0));
  }
  rep.pass = rep.max_dev_D < spec.tolerance && rep.max_dev_F < spec.tolerance &&
             rep.max_dev_w2 < spec.tolerance;
  return rep;
}

}  // namespace qrough::oracle
