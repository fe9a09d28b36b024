#include "qrough/effective.hpp"

#include <cmath>
#include <sstream>

#include "qrough/config_io.hpp"
#include "qrough/errors.hpp"
#include "rk4.hpp"

namespace qrough {

namespace {

double require_gamma(const Dissipator& dissipator) {
  const auto* dep = std::get_if<Dephasing>(&dissipator);
  if (!dep) throw ConfigError("effective equations exist for the dephasing dissipator only");
  if (!(dep->gamma > 0.0)) throw ConfigError("effective equations need gamma > 0");
  return dep->gamma;
}

/// out = c * (zero-flux Laplacian of x) for a chain of n sites with stride s.
inline double lap(const double* x, int i, int n, std::ptrdiff_t s) {
  double v = 0.0;
  if (i > 0) v += x[-s] - x[0];
  if (i + 1 < n) v += x[s] - x[0];
  return v;
}

void rhs_1d(const double* d, double* out, int L, double c) {
  for (int m = 0; m < L; ++m) out[m] = c * lap(d + m, m, L, 1);
}

void rhs_2d(const double* f, double* out, int L, double c) {
  for (int m = 0; m < L; ++m)
    for (int n = 0; n < L; ++n) {
      const std::size_t i = static_cast<std::size_t>(m) * L + n;
      out[i] = c * (lap(f + i, m, L, L) + lap(f + i, n, L, 1));
    }
}

}  // namespace

EffectiveDerivative effective_rhs(const EffectiveState& state, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("effective_rhs needs gamma > 0");
  const int L = state.L;
  const auto l = static_cast<std::size_t>(L);
  if (state.d.size() != l || state.f.size() != l * l)
    throw ConfigError("effective state has wrong dimensions");
  EffectiveDerivative out{std::vector<double>(l), std::vector<double>(l * l)};
  rhs_1d(state.d.data(), out.d.data(), L, 2.0 / gamma);
  rhs_2d(state.f.data(), out.f.data(), L, 2.0 / gamma);
  return out;
}

EffectiveState initial_effective_state(const SystemConfig& config) {
  const auto occ = occupation_pattern(config.initial_state, config.L);
  const FockDiagonals fd = fock_diagonals(occ, config.statistics);
  return {config.L, 0.0, fd.d, fd.f};
}

double effective_roughness(const EffectiveState& state, Statistics statistics, double nu) {
  const int half = state.L / 2;
  double sd = 0.0;
  double sf = 0.0;
  for (int m = 0; m < half; ++m) {
    sd += state.d[m];
    for (int n = 0; n < half; ++n) sf += state.f[static_cast<std::size_t>(m) * state.L + n];
  }
  return std::sqrt(clamp_roughness(roughness_squared(statistics, state.L, nu, sd, sf)));
}

ObservableSeries evolve_effective(const SystemConfig& config) {
  require_valid(config);
  const double gamma = require_gamma(config.dissipator);
  const double c = 2.0 / gamma;
  const double nu = filling(config);
  const int L = config.L;
  const auto l = static_cast<std::size_t>(L);

  EffectiveState st = initial_effective_state(config);
  // One vector [d | f] so both fields share the step sequence.
  std::vector<double> y(l + l * l);
  std::copy(st.d.begin(), st.d.end(), y.begin());
  std::copy(st.f.begin(), st.f.end(), y.begin() + static_cast<std::ptrdiff_t>(l));
  detail::RealRk4 rk(y.size());
  const auto rhs = [&](const double* in, double* out) {
    rhs_1d(in, out, L, c);
    rhs_2d(in + l, out + l, L, c);
  };

  ObservableSeries series;
  series.metadata = run_metadata("effective", config);
  series.w_label = "w_eff";
  double t = 0.0;
  for (double ts : config.sample_times) {
    rk.advance(y, t, ts, resolved_dt(config), rhs);
    std::copy(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(l), st.d.begin());
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(l), y.end(), st.f.begin());
    st.t = ts;
    double n = 0.0;
    for (double v : st.d) n += v;
    if (!std::isfinite(n)) {
      std::ostringstream msg;
      msg << "non-finite effective fields at t=" << ts << "; reduce dt";
      throw NumericalError(msg.str());
    }
    series.times.push_back(ts);
    series.w.push_back(effective_roughness(st, config.statistics, nu));
    series.n_tot.push_back(n);
  }
  return series;
}

ObservableSeries evolve_effective_adjoint(const SystemConfig& config) {
  require_valid(config);
  const double gamma = require_gamma(config.dissipator);
  const double c = 2.0 / gamma;
  const double nu = filling(config);
  const int L = config.L;
  const auto l = static_cast<std::size_t>(L);
  const EffectiveState init = initial_effective_state(config);

  std::vector<double> v(l, 0.0);
  for (int m = 0; m < L / 2; ++m) v[m] = 1.0;
  detail::RealRk4 rk(l);
  const auto rhs = [&](const double* in, double* out) { rhs_1d(in, out, L, c); };

  ObservableSeries series;
  series.metadata = run_metadata("effective_adjoint", config);
  series.w_label = "w_eff";
  double t = 0.0;
  for (double ts : config.sample_times) {
    rk.advance(v, t, ts, resolved_dt(config), rhs);
    double sd = 0.0;
    double sf = 0.0;
    for (std::size_t m = 0; m < l; ++m) {
      sd += v[m] * init.d[m];
      double row = 0.0;
      for (std::size_t n = 0; n < l; ++n) row += init.f[m * l + n] * v[n];
      sf += v[m] * row;
    }
    if (!std::isfinite(sd) || !std::isfinite(sf)) {
      std::ostringstream msg;
      msg << "non-finite adjoint field at t=" << ts << "; reduce dt";
      throw NumericalError(msg.str());
    }
    series.times.push_back(ts);
    series.w.push_back(
        std::sqrt(clamp_roughness(roughness_squared(config.statistics, L, nu, sd, sf))));
  }
  return series;
}

std::vector<std::optional<double>> relative_error(const ObservableSeries& w,
                                                  const ObservableSeries& w_eff) {
  if (w.times.size() != w_eff.times.size())
    throw ConfigError("relative_error: time grids differ in length");
  if (w.w.size() != w.times.size() || w_eff.w.size() != w_eff.times.size())
    throw ConfigError("relative_error: both series need a roughness column");
  std::vector<std::optional<double>> out;
  out.reserve(w.times.size());
  for (std::size_t i = 0; i < w.times.size(); ++i) {
    const double ta = w.times[i];
    const double tb = w_eff.times[i];
    if (std::abs(ta - tb) > 1e-9 * std::max(1.0, std::abs(ta)))
      throw ConfigError("relative_error: time grids differ");
    if (w_eff.w[i] == 0.0) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(std::abs(w.w[i] - w_eff.w[i]) / w_eff.w[i]);
    }
  }
  return out;
}

}  // namespace qrough
