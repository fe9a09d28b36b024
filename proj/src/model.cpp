#include "qrough/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qrough/errors.hpp"

namespace qrough {

double max_rate(const Dissipator& dissipator) {
  if (const auto* dep = std::get_if<Dephasing>(&dissipator)) return dep->gamma;
  const auto& io = std::get<InOut>(dissipator);
  return std::max(io.gamma_in, io.gamma_out);
}

double default_dt(const Dissipator& dissipator) {
  return std::min(0.05, 0.05 / std::max(1.0, max_rate(dissipator)));
}

std::string to_string(Statistics s) { return s == Statistics::Fermion ? "fermion" : "boson"; }

std::string to_string(InitialState s) {
  switch (s) {
    case InitialState::Staggered:
      return "staggered";
    case InitialState::DomainWall:
      return "domain_wall";
    case InitialState::Uniform:
      return "uniform";
  }
  return "unknown";
}

double filling(const SystemConfig& config) {
  if (config.nu_override) return *config.nu_override;
  return config.initial_state == InitialState::Uniform ? 1.0 : 0.5;
}

double resolved_dt(const SystemConfig& config) {
  return config.dt ? *config.dt : default_dt(config.dissipator);
}

std::vector<int> occupation_pattern(InitialState state, int L) {
  std::vector<int> occ(static_cast<std::size_t>(std::max(L, 0)), 0);
  for (int i = 0; i < L; ++i) {
    const int site = i + 1;
    switch (state) {
      case InitialState::Staggered:
        occ[i] = site % 2 == 0 ? 1 : 0;
        break;
      case InitialState::DomainWall:
        occ[i] = site <= L / 2 ? 1 : 0;
        break;
      case InitialState::Uniform:
        occ[i] = 1;
        break;
    }
  }
  return occ;
}

namespace {

bool negative_rates(const Dissipator& dissipator) {
  if (const auto* dep = std::get_if<Dephasing>(&dissipator)) return dep->gamma < 0.0;
  const auto& io = std::get<InOut>(dissipator);
  return io.gamma_in < 0.0 || io.gamma_out < 0.0;
}

bool finite_rates(const Dissipator& dissipator) {
  if (const auto* dep = std::get_if<Dephasing>(&dissipator)) return std::isfinite(dep->gamma);
  const auto& io = std::get<InOut>(dissipator);
  return std::isfinite(io.gamma_in) && std::isfinite(io.gamma_out);
}

}  // namespace

std::vector<std::string> validate_config(const SystemConfig& config) {
  std::vector<std::string> out;
  if (config.L % 2 != 0) out.emplace_back("L must be even");
  if (config.L < 4) out.emplace_back("L must be at least 4");
  if (negative_rates(config.dissipator)) out.emplace_back("rates must be nonnegative");
  if (!finite_rates(config.dissipator)) out.emplace_back("rates must be finite");
  if (config.dt && !(*config.dt > 0.0 && std::isfinite(*config.dt)))
    out.emplace_back("dt must be positive");
  if (!(config.t_final > 0.0 && std::isfinite(config.t_final)))
    out.emplace_back("t_final must be positive");
  const auto& ts = config.sample_times;
  bool ordered = true;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] >= 0.0 && ts[i] <= config.t_final)) ordered = false;
    if (i > 0 && !(ts[i] > ts[i - 1])) ordered = false;
  }
  if (!ordered) out.emplace_back("sample_times must be strictly increasing within [0, t_final]");
  if (config.nu_override) {
    const double nu = *config.nu_override;
    const auto occ = occupation_pattern(config.initial_state, std::max(config.L, 0));
    long particles = 0;
    for (int n : occ) particles += n;
    const double nl = nu * config.L;
    if (!(nu >= 0.0) || std::abs(nl - std::round(nl)) > 1e-12 ||
        std::lround(nl) != particles) {
      out.emplace_back("nu * L must equal the initial particle number");
    }
  }
  return out;
}

void require_valid(const SystemConfig& config) {
  const auto violations = validate_config(config);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid config:";
  for (const auto& v : violations) msg << ' ' << v << ';';
  throw ConfigError(msg.str());
}

CorrelationState::CorrelationState(int size, Statistics stats, bool with_four_point)
    : L(size), statistics(stats) {
  const auto l = static_cast<std::size_t>(size);
  d.assign(l * l, cplx{});
  if (with_four_point) f.assign(l * l * l * l, cplx{});
}

CorrelationState fock_correlations(std::span<const int> occupations, Statistics statistics,
                                   bool with_four_point) {
  const int L = static_cast<int>(occupations.size());
  if (L < 1) throw ConfigError("empty lattice");
  for (int n : occupations) {
    if (n < 0 || (statistics == Statistics::Fermion && n > 1))
      throw ConfigError("occupation out of range for the particle statistics");
  }
  CorrelationState state(L, statistics, with_four_point);
  for (int m = 0; m < L; ++m) state.D(m, m) = occupations[m];
  if (!with_four_point) return state;
  const double s = exchange_sign(statistics);
  for (int m = 0; m < L; ++m) {
    for (int n = 0; n < L; ++n) {
      const double nm = occupations[m];
      const double nn = occupations[n];
      if (m == n) {
        // Fermions: a_m a_m = 0. Bosons: <n(n-1)>.
        if (statistics == Statistics::Boson) state.F(m, m, m, m) = nm * (nm - 1.0);
        continue;
      }
      state.F(m, n, n, m) = nm * nn;
      state.F(m, n, m, n) = s * nm * nn;
    }
  }
  return state;
}

FockDiagonals fock_diagonals(std::span<const int> occupations, Statistics statistics) {
  const int L = static_cast<int>(occupations.size());
  FockDiagonals out;
  out.d.assign(occupations.begin(), occupations.end());
  out.f.assign(static_cast<std::size_t>(L) * L, 0.0);
  const double s = exchange_sign(statistics);
  for (int m = 0; m < L; ++m) {
    for (int n = 0; n < L; ++n) {
      const double nm = occupations[m];
      const double nn = occupations[n];
      out.f[static_cast<std::size_t>(m) * L + n] =
          m == n ? (statistics == Statistics::Boson ? nm * (nm - 1.0) : 0.0) : s * nm * nn;
    }
  }
  return out;
}

CorrelationState build_initial_correlations(const SystemConfig& config) {
  if (config.L % 2 != 0) throw ConfigError("L must be even");
  if (config.L < 2) throw ConfigError("L must be positive");
  if (negative_rates(config.dissipator)) throw ConfigError("rates must be nonnegative");
  return fock_correlations(occupation_pattern(config.initial_state, config.L),
                           config.statistics);
}

SymmetryResiduals symmetry_residuals(const CorrelationState& st) {
  SymmetryResiduals r;
  const int L = st.L;
  for (int m = 0; m < L; ++m)
    for (int n = 0; n < L; ++n)
      r.d_hermiticity = std::max(r.d_hermiticity, std::abs(st.D(m, n) - std::conj(st.D(n, m))));
  if (!st.has_four_point()) return r;
  const double s = exchange_sign(st.statistics);
  const bool fermion = st.statistics == Statistics::Fermion;
  for (int m = 0; m < L; ++m)
    for (int n = 0; n < L; ++n)
      for (int p = 0; p < L; ++p)
        for (int q = 0; q < L; ++q) {
          const cplx v = st.F(m, n, p, q);
          r.f_exchange = std::max(r.f_exchange, std::abs(v - s * st.F(n, m, p, q)));
          r.f_exchange = std::max(r.f_exchange, std::abs(v - s * st.F(m, n, q, p)));
          r.f_hermiticity = std::max(r.f_hermiticity, std::abs(v - std::conj(st.F(q, p, n, m))));
          if (fermion && (m == n || p == q)) r.fermion_pauli = std::max(r.fermion_pauli, std::abs(v));
        }
  return r;
}

}  // namespace qrough
