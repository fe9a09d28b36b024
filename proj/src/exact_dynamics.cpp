#include "qrough/exact_dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "qrough/config_io.hpp"
#include "qrough/errors.hpp"

namespace qrough {

namespace {

constexpr cplx kI{0.0, 1.0};

/// Rate terms shared by the dense reference and the packed kernel.
struct Rates {
  bool dephasing = true;
  bool fermion = true;
  double gamma = 0.0;
  double gamma_in = 0.0;
  double gamma_out = 0.0;

  explicit Rates(const RhsKind& kind) : fermion(kind.statistics == Statistics::Fermion) {
    if (const auto* dep = std::get_if<Dephasing>(&kind.dissipator)) {
      gamma = dep->gamma;
    } else {
      const auto& io = std::get<InOut>(kind.dissipator);
      dephasing = false;
      gamma_in = io.gamma_in;
      gamma_out = io.gamma_out;
    }
  }

  double d_rate(int m, int n) const {
    if (dephasing) return m == n ? 0.0 : -gamma;
    return fermion ? -(gamma_in + gamma_out) : gamma_in - gamma_out;
  }
  double d_source(int m, int n) const { return (!dephasing && m == n) ? gamma_in : 0.0; }

  double f_rate(int m, int n, int p, int q) const {
    if (dephasing) return gamma * four_point_rate(m, n, p, q);
    return fermion ? -2.0 * (gamma_in + gamma_out) : 2.0 * (gamma_in - gamma_out);
  }

  /// Gain-induced coupling of F to D; `d(a, b)` returns D_ab.
  template <typename DGet>
  auto f_source(int m, int n, int p, int q, const DGet& d) const {
    using V = decltype(d(0, 0));
    if (dephasing || gamma_in == 0.0) return V{};
    V s{};
    if (fermion) {
      if (m == q) s += d(n, p);
      if (n == p) s += d(m, q);
      if (n == q) s -= d(m, p);
      if (m == p) s -= d(n, q);
    } else {
      if (m == q) s += d(n, p);
      if (n == q) s += d(m, p);
      if (n == p) s += d(m, q);
      if (m == p) s += d(n, q);
    }
    return gamma_in * s;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Dense reference equations.

std::vector<cplx> rhs_D(const CorrelationState& st, const RhsKind& kind) {
  const Rates rates(kind);
  const int L = st.L;
  const auto get = [&](int m, int n) -> cplx {
    if (m < 0 || m >= L || n < 0 || n >= L) return {};
    return st.D(m, n);
  };
  std::vector<cplx> out(st.d.size());
  for (int m = 0; m < L; ++m) {
    for (int n = 0; n < L; ++n) {
      const cplx hop = get(m, n + 1) + get(m, n - 1) - get(m + 1, n) - get(m - 1, n);
      out[static_cast<std::size_t>(m) * L + n] =
          kI * hop + rates.d_rate(m, n) * st.D(m, n) + rates.d_source(m, n);
    }
  }
  return out;
}

std::vector<cplx> rhs_F(const CorrelationState& st, const RhsKind& kind) {
  if (!st.has_four_point()) throw ConfigError("rhs_F needs the four-point tensor");
  const Rates rates(kind);
  const int L = st.L;
  const auto in = [L](int i) { return i >= 0 && i < L; };
  const auto get = [&](int m, int n, int p, int q) -> cplx {
    if (!in(m) || !in(n) || !in(p) || !in(q)) return {};
    return st.F(m, n, p, q);
  };
  const auto dget = [&](int a, int b) { return st.D(a, b); };
  std::vector<cplx> out(st.f.size());
  for (int m = 0; m < L; ++m)
    for (int n = 0; n < L; ++n)
      for (int p = 0; p < L; ++p)
        for (int q = 0; q < L; ++q) {
          const cplx hop = get(m, n, p + 1, q) + get(m, n, p - 1, q) + get(m, n, p, q + 1) +
                           get(m, n, p, q - 1) - get(m + 1, n, p, q) - get(m - 1, n, p, q) -
                           get(m, n + 1, p, q) - get(m, n - 1, p, q);
          out[st.f_index(m, n, p, q)] = kI * hop + rates.f_rate(m, n, p, q) * st.F(m, n, p, q) +
                                        rates.f_source(m, n, p, q, dget);
        }
  return out;
}

CorrelationState step(const CorrelationState& state, const RhsKind& kind, double dt) {
  if (!(dt > 0.0)) throw ConfigError("step: dt must be positive");
  const bool fp = state.has_four_point();
  const auto deriv = [&](const CorrelationState& s) {
    std::vector<cplx> kd = rhs_D(s, kind);
    std::vector<cplx> kf = fp ? rhs_F(s, kind) : std::vector<cplx>{};
    return std::pair{std::move(kd), std::move(kf)};
  };
  const auto shifted = [&](const std::pair<std::vector<cplx>, std::vector<cplx>>& k, double h) {
    CorrelationState s = state;
    for (std::size_t i = 0; i < s.d.size(); ++i) s.d[i] += h * k.first[i];
    for (std::size_t i = 0; i < s.f.size(); ++i) s.f[i] += h * k.second[i];
    return s;
  };
  const auto k1 = deriv(state);
  const auto k2 = deriv(shifted(k1, dt / 2));
  const auto k3 = deriv(shifted(k2, dt / 2));
  const auto k4 = deriv(shifted(k3, dt));
  CorrelationState out = state;
  for (std::size_t i = 0; i < out.d.size(); ++i)
    out.d[i] += dt / 6.0 * (k1.first[i] + 2.0 * k2.first[i] + 2.0 * k3.first[i] + k4.first[i]);
  for (std::size_t i = 0; i < out.f.size(); ++i)
    out.f[i] +=
        dt / 6.0 * (k1.second[i] + 2.0 * k2.second[i] + 2.0 * k3.second[i] + k4.second[i]);
  out.t = state.t + dt;
  return out;
}


// ---------------------------------------------------------------------------
// Packed fused-stage integrator in the real gauge.

std::size_t CorrelationEvolver::estimate_bytes(int L, Statistics statistics, bool four_point,
                                               std::size_t tracked, bool diagnostics) {
  const auto l = static_cast<std::size_t>(L);
  std::size_t P = 0;
  if (four_point) P = statistics == Statistics::Fermion ? l * (l - 1) / 2 : l * (l + 1) / 2;
  const std::size_t extra = diagnostics ? l * l + tracked : 0;
  const std::size_t total = l * l + P * P + extra;
  const std::size_t scratch = std::max(l * l, P) + extra;
  // Four state-sized RK4 buffers, the derivative scratch and the stencil tables.
  return (4 * total + scratch) * sizeof(double) +
         P * 4 * (sizeof(double) + sizeof(std::uint32_t));
}

CorrelationEvolver::CorrelationEvolver(const RhsKind& kind, int L, bool four_point, double dt,
                                       std::optional<DiagnosticsRequest> diagnostics)
    : kind_(kind), L_(L), four_point_(four_point), dt_(dt), diagnostics_(std::move(diagnostics)) {
  if (L < 1) throw ConfigError("the chain needs at least one site");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (diagnostics_) {
    if (!std::holds_alternative<Dephasing>(kind.dissipator))
      throw ConfigError("diagnostics require the dephasing dissipator");
    if (!four_point_) throw ConfigError("diagnostics require the four-point tensor");
    for (const auto& e : diagnostics_->tracked)
      for (int i : e)
        if (i < 0 || i >= L_) throw ConfigError("tracked index outside the chain");
  }
  const auto l = static_cast<std::size_t>(L);
  std::size_t P = 0;
  if (four_point_) {
    pairs_.emplace(L_, kind_.statistics);
    P = pairs_->size();
    col_index_.assign(4 * P, 0);
    col_weight_.assign(4 * P, 0.0);
    for (std::size_t c = 0; c < P; ++c) {
      const auto nb = pairs_->neighbors(c);
      for (std::size_t j = 0; j < 4; ++j) {
        col_index_[4 * c + j] = j < nb.size() ? nb[j].index : static_cast<std::uint32_t>(c);
        col_weight_[4 * c + j] = j < nb.size() ? nb[j].weight : 0.0;
      }
    }
  }
  const std::size_t extra = diagnostics_ ? l * l + diagnostics_->tracked.size() : 0;
  g_offset_ = l * l;
  diag_offset_ = g_offset_ + P * P;
  total_ = diag_offset_ + extra;
  y_.assign(total_, 0.0);
  acc_.assign(total_, 0.0);
  buf_a_.assign(total_, 0.0);
  buf_b_.assign(total_, 0.0);
  k_.assign(std::max(l * l, P) + extra, 0.0);
}

namespace {

/// Real part of z / i^k, with the discarded imaginary part reported through `resid`.
double ungauge(cplx z, int k, double& resid) {
  const cplx g = z * std::conj(i_pow(k));
  resid = std::max(resid, std::abs(g.imag()));
  return g.real();
}

}  // namespace

CorrelationEvolver::CorrelationEvolver(const RhsKind& kind, const CorrelationState& initial,
                                       double dt, std::optional<DiagnosticsRequest> diagnostics)
    : CorrelationEvolver(kind, initial.L, initial.has_four_point(), dt, std::move(diagnostics)) {
  if (initial.statistics != kind.statistics)
    throw ConfigError("state statistics do not match the equations");
  t_ = initial.t;
  double resid = 0.0;
  double scale = 1.0;
  for (int m = 0; m < L_; ++m)
    for (int n = 0; n < L_; ++n) {
      const cplx v = initial.D(m, n);
      scale = std::max(scale, std::abs(v));
      y_[static_cast<std::size_t>(m) * L_ + n] = ungauge(v, n - m, resid);
    }
  if (four_point_) {
    const std::size_t P = pairs_->size();
    for (std::size_t r = 0; r < P; ++r) {
      const int m = pairs_->first(r);
      const int n = pairs_->second(r);
      for (std::size_t c = 0; c < P; ++c) {
        const int p = pairs_->first(c);
        const int q = pairs_->second(c);
        const cplx v = initial.F(m, n, p, q);
        scale = std::max(scale, std::abs(v));
        y_[g_offset_ + r * P + c] = ungauge(v, p + q - m - n, resid);
      }
    }
  }
  if (resid > 1e-12 * scale)
    throw ConfigError("state is not of the real-gauge form reachable from Fock states");
}

CorrelationEvolver CorrelationEvolver::from_fock(const RhsKind& kind,
                                                 std::span<const int> occupations, double dt,
                                                 bool four_point,
                                                 std::optional<DiagnosticsRequest> diagnostics) {
  const int L = static_cast<int>(occupations.size());
  CorrelationEvolver ev(kind, L, four_point, dt, std::move(diagnostics));
  const FockDiagonals fd = fock_diagonals(occupations, kind.statistics);
  for (int m = 0; m < L; ++m) ev.y_[static_cast<std::size_t>(m) * L + m] = fd.d[m];
  if (four_point) {
    // A Fock state only populates F_mnmn and F_mnnm: the diagonal of the packed matrix.
    const std::size_t P = ev.pairs_->size();
    for (std::size_t r = 0; r < P; ++r) {
      const int m = ev.pairs_->first(r);
      const int n = ev.pairs_->second(r);
      ev.y_[ev.g_offset_ + r * P + r] = fd.f[static_cast<std::size_t>(m) * L + n];
    }
  }
  return ev;
}

double CorrelationEvolver::packed(const double* base, int m, int n, int p, int q) const {
  const auto [r, s1] = pairs_->canonical(m, n);
  const auto [c, s2] = pairs_->canonical(p, q);
  if (s1 == 0 || s2 == 0) return 0.0;
  return s1 * s2 * base[g_offset_ + r * pairs_->size() + c];
}

cplx CorrelationEvolver::F(int m, int n, int p, int q) const {
  if (!four_point_) throw ConfigError("evolver does not carry the four-point tensor");
  return i_pow(p + q - m - n) * packed(y_.data(), m, n, p, q);
}

double CorrelationEvolver::F_mnmn(int m, int n) const {
  if (!four_point_) throw ConfigError("evolver does not carry the four-point tensor");
  const auto [r, s] = pairs_->canonical(m, n);
  if (s == 0) return 0.0;
  return y_[g_offset_ + r * pairs_->size() + r];
}

cplx CorrelationEvolver::G(int m, int n) const {
  if (!diagnostics_) throw ConfigError("evolver was built without diagnostics");
  return i_pow(n - m) * y_[diag_offset_ + static_cast<std::size_t>(m) * L_ + n];
}

cplx CorrelationEvolver::I(std::size_t k) const {
  if (!diagnostics_) throw ConfigError("evolver was built without diagnostics");
  const auto [m, n, p, q] = diagnostics_->tracked.at(k);
  return i_pow(p + q - m - n) * y_[diag_offset_ + static_cast<std::size_t>(L_) * L_ + k];
}

std::vector<double> CorrelationEvolver::diagonal() const {
  std::vector<double> out(static_cast<std::size_t>(L_));
  for (int m = 0; m < L_; ++m) out[m] = y_[static_cast<std::size_t>(m) * L_ + m];
  return out;
}

CorrelationState CorrelationEvolver::to_dense() const {
  CorrelationState st(L_, kind_.statistics, four_point_);
  st.t = t_;
  for (int m = 0; m < L_; ++m)
    for (int n = 0; n < L_; ++n) st.D(m, n) = D(m, n);
  if (four_point_) {
    for (int m = 0; m < L_; ++m)
      for (int n = 0; n < L_; ++n)
        for (int p = 0; p < L_; ++p)
          for (int q = 0; q < L_; ++q) st.F(m, n, p, q) = F(m, n, p, q);
  }
  return st;
}

bool CorrelationEvolver::all_finite() const {
  double acc = 0.0;
  for (double v : y_) acc += v * 0.0;  // NaN and inf poison the sum
  return acc == 0.0;
}

double CorrelationEvolver::roughness(double nu) const {
  const int half = L_ / 2;
  double sd = 0.0;
  double sf = 0.0;
  for (int m = 0; m < half; ++m) {
    sd += y_[static_cast<std::size_t>(m) * L_ + m];
    for (int n = 0; n < half; ++n) sf += F_mnmn(m, n);
  }
  return std::sqrt(clamp_roughness(roughness_squared(kind_.statistics, L_, nu, sd, sf)));
}

double CorrelationEvolver::total_number() const {
  double s = 0.0;
  for (int m = 0; m < L_; ++m) s += y_[static_cast<std::size_t>(m) * L_ + m];
  return s;
}

double CorrelationEvolver::total_number_sq() const {
  const double s = exchange_sign(kind_.statistics);
  double out = total_number();
  for (int m = 0; m < L_; ++m)
    for (int n = 0; n < L_; ++n) out += m == n ? F_mnmn(m, m) : s * F_mnmn(m, n);  // F_mnnm
  return out;
}

void CorrelationEvolver::derivative_D(const double* in, double* out) const {
  const Rates rates(kind_);
  const int L = L_;
  for (int m = 0; m < L; ++m) {
    for (int n = 0; n < L; ++n) {
      const std::size_t i = static_cast<std::size_t>(m) * L + n;
      double hop = 0.0;
      if (n > 0) hop += in[i - 1];
      if (n + 1 < L) hop -= in[i + 1];
      if (m > 0) hop += in[i - L];
      if (m + 1 < L) hop -= in[i + L];
      out[i] = hop + rates.d_rate(m, n) * in[i] + rates.d_source(m, n);
    }
  }
}

namespace {

/// One packed row: out[c] = sum of column hops - sum of row hops + rate(c) * row[c].
template <typename RateFn>
void hop_row(const double* row, const double* const rp[4], const double rw[4],
             const std::uint32_t* ci, const double* cw, std::size_t P, RateFn rate_of,
             double* out) {
  for (std::size_t c = 0; c < P; ++c) {
    const std::uint32_t* idx = ci + 4 * c;
    const double* w = cw + 4 * c;
    const double hop = w[0] * row[idx[0]] + w[1] * row[idx[1]] + w[2] * row[idx[2]] +
                       w[3] * row[idx[3]] + rw[0] * rp[0][c] + rw[1] * rp[1][c] +
                       rw[2] * rp[2][c] + rw[3] * rp[3][c];
    out[c] = hop + rate_of(c) * row[c];
  }
}

}  // namespace

void CorrelationEvolver::derivative_row(const double* in, std::size_t r, double* out) const {
  const Rates rates(kind_);
  const std::size_t P = pairs_->size();
  const double* G = in + g_offset_;
  const double* row = G + r * P;
  const int m = pairs_->first(r);
  const int n = pairs_->second(r);

  // Creation-index hops read the rows of neighbouring pairs; pad to four.
  const double* rp[4];
  double rw[4];
  const auto nb = pairs_->neighbors(r);
  for (std::size_t j = 0; j < 4; ++j) {
    rp[j] = j < nb.size() ? G + std::size_t{nb[j].index} * P : row;
    rw[j] = j < nb.size() ? nb[j].weight : 0.0;
  }

  const std::int32_t* pf = pairs_->firsts().data();
  const std::int32_t* ps = pairs_->seconds().data();

  if (rates.dephasing) {
    const double g = rates.gamma;
    const int mn = (m == n);
    hop_row(row, rp, rw, col_index_.data(), col_weight_.data(), P,
            [=](std::size_t c) {
              const int p = pf[c];
              const int q = ps[c];
              return g * ((m == q) + (m == p) + (n == q) + (n == p) - mn - (p == q) - 2);
            },
            out);
    return;
  }

  const double rate = rates.f_rate(m, n, 0, 0);
  hop_row(row, rp, rw, col_index_.data(), col_weight_.data(), P,
          [=](std::size_t) { return rate; }, out);
  if (rates.gamma_in == 0.0) return;
  // Gain couples F to D only where the two pairs share a site.
  const int L = L_;
  const auto dget = [in, L](int a, int b) { return in[static_cast<std::size_t>(a) * L + b]; };
  for (std::uint32_t c : pairs_->pairs_containing(m))
    out[c] += rates.f_source(m, n, pf[c], ps[c], dget);
  if (n != m) {
    for (std::uint32_t c : pairs_->pairs_containing(n))
      if (pf[c] != m && ps[c] != m) out[c] += rates.f_source(m, n, pf[c], ps[c], dget);
  }
}

void CorrelationEvolver::derivative_diagnostics(const double* in, double t, double* out) const {
  const double g = std::get<Dephasing>(kind_.dissipator).gamma;
  const int L = L_;
  const std::size_t l2 = static_cast<std::size_t>(L) * L;
  const double* gd = in + diag_offset_;
  const double decay_diag = std::exp(-g * t);  // lambda_mm + 1 = 1; off-diagonal factor is 1
  for (int m = 0; m < L; ++m) {
    for (int n = 0; n < L; ++n) {
      const std::size_t i = static_cast<std::size_t>(m) * L + n;
      out[i] = -g * gd[i] + (m == n ? decay_diag : 1.0) * in[i];
    }
  }
  const auto& tracked = diagnostics_->tracked;
  for (std::size_t k = 0; k < tracked.size(); ++k) {
    const auto [m, n, p, q] = tracked[k];
    const double lam = four_point_rate(m, n, p, q);
    out[l2 + k] = -g * gd[l2 + k] + std::exp(-g * (lam + 1.0) * t) * packed(in, m, n, p, q);
  }
}

void CorrelationEvolver::stage(int s, const double* in, double* next, double t, double h) {
  const double h2 = h / 2.0;
  const double h3 = h / 3.0;
  const double h6 = h / 6.0;
  const auto update = [&](std::size_t off, std::size_t len, const double* k) {
    double* y = y_.data() + off;
    double* acc = acc_.data() + off;
    double* nx = next ? next + off : nullptr;
    switch (s) {
      case 0:
        for (std::size_t i = 0; i < len; ++i) {
          acc[i] = y[i] + h6 * k[i];
          nx[i] = y[i] + h2 * k[i];
        }
        break;
      case 1:
        for (std::size_t i = 0; i < len; ++i) {
          acc[i] += h3 * k[i];
          nx[i] = y[i] + h2 * k[i];
        }
        break;
      case 2:
        for (std::size_t i = 0; i < len; ++i) {
          acc[i] += h3 * k[i];
          nx[i] = y[i] + h * k[i];
        }
        break;
      default:
        for (std::size_t i = 0; i < len; ++i) y[i] = acc[i] + h6 * k[i];
        break;
    }
  };

  const auto l2 = static_cast<std::size_t>(L_) * L_;
  derivative_D(in, k_.data());
  update(0, l2, k_.data());
  if (four_point_) {
    const std::size_t P = pairs_->size();
    for (std::size_t r = 0; r < P; ++r) {
      derivative_row(in, r, k_.data());
      update(g_offset_ + r * P, P, k_.data());
    }
  }
  if (diagnostics_) {
    derivative_diagnostics(in, t, k_.data());
    update(diag_offset_, total_ - diag_offset_, k_.data());
  }
}

void CorrelationEvolver::step(double h) {
  if (!(h > 0.0)) throw ConfigError("step size must be positive");
  stage(0, y_.data(), buf_a_.data(), t_, h);
  stage(1, buf_a_.data(), buf_b_.data(), t_ + h / 2, h);
  stage(2, buf_b_.data(), buf_a_.data(), t_ + h / 2, h);
  stage(3, buf_a_.data(), nullptr, t_ + h, h);
  t_ += h;
}

void CorrelationEvolver::advance_to(double t) {
  const double eps = 1e-12 * std::max(1.0, std::abs(t));
  while (t - t_ > eps) {
    const double remaining = t - t_;
    if (remaining <= dt_ * (1.0 + 1e-9)) {
      step(remaining);
      t_ = t;
    } else {
      step(dt_);
    }
  }
}

// ---------------------------------------------------------------------------
// Drivers.

namespace {

void check_memory(const SystemConfig& config, bool four_point, const EvolveOptions& options,
                  std::size_t tracked = 0, bool diagnostics = false) {
  const std::size_t bytes = CorrelationEvolver::estimate_bytes(
      config.L, config.statistics, four_point, tracked, diagnostics);
  if (bytes > options.mem_cap_bytes) {
    std::ostringstream msg;
    msg << "integrator state for L=" << config.L << " needs " << bytes
        << " bytes, above the memory cap of " << options.mem_cap_bytes
        << " bytes; raise the cap or request only n_tot/p_tra so that evolve_D_only applies";
    throw ResourceError(msg.str());
  }
}

void check_finite(const CorrelationEvolver& ev) {
  if (!ev.all_finite()) {
    std::ostringstream msg;
    msg << "non-finite correlations at t=" << ev.time() << " with dt=" << ev.dt()
        << "; reduce dt";
    throw NumericalError(msg.str());
  }
}

ObservableSeries run(const SystemConfig& config, const ObservableRequest& request,
                     const EvolveOptions& options, bool four_point) {
  require_valid(config);
  check_memory(config, four_point, options);
  const double nu = filling(config);
  const auto occ = occupation_pattern(config.initial_state, config.L);
  const std::vector<double> initial(occ.begin(), occ.end());
  auto ev = CorrelationEvolver::from_fock(rhs_kind(config), occ, resolved_dt(config), four_point);

  ObservableSeries series;
  series.metadata = run_metadata(four_point ? "exact" : "exact_d_only", config);
  for (double t : config.sample_times) {
    ev.advance_to(t);
    check_finite(ev);
    series.times.push_back(t);
    if (request.w) series.w.push_back(ev.roughness(nu));
    if (request.n_tot) series.n_tot.push_back(ev.total_number());
    if (request.n_tot_sq) series.n_tot_sq.push_back(ev.total_number_sq());
    if (request.p_tra) series.p_tra.push_back(transfer_at(ev.diagonal(), initial));
    if (options.on_sample) options.on_sample(ev);
  }
  return series;
}

}  // namespace

ObservableSeries evolve(const SystemConfig& config, const ObservableRequest& request,
                        const EvolveOptions& options) {
  return run(config, request, options, request.needs_four_point());
}

ObservableSeries evolve_D_only(const SystemConfig& config, const ObservableRequest& request,
                               const EvolveOptions& options) {
  if (request.needs_four_point())
    throw ConfigError("evolve_D_only cannot produce w or <N^2>; use evolve");
  return run(config, request, options, false);
}

std::vector<DiagnosticsSample> evolve_diagnostics(const SystemConfig& config,
                                                  const DiagnosticsRequest& request,
                                                  const EvolveOptions& options) {
  require_valid(config);
  if (!std::holds_alternative<Dephasing>(config.dissipator))
    throw ConfigError("diagnostics are defined for the dephasing dissipator only");
  check_memory(config, true, options, request.tracked.size(), true);
  const auto occ = occupation_pattern(config.initial_state, config.L);
  auto ev = CorrelationEvolver::from_fock(rhs_kind(config), occ, resolved_dt(config), true,
                                          request);
  const int L = config.L;
  std::vector<DiagnosticsSample> out;
  for (double t : config.sample_times) {
    ev.advance_to(t);
    check_finite(ev);
    DiagnosticsSample s;
    s.t = t;
    s.D.resize(static_cast<std::size_t>(L) * L);
    s.G.resize(s.D.size());
    for (int m = 0; m < L; ++m)
      for (int n = 0; n < L; ++n) {
        s.D[static_cast<std::size_t>(m) * L + n] = ev.D(m, n);
        s.G[static_cast<std::size_t>(m) * L + n] = ev.G(m, n);
      }
    for (std::size_t k = 0; k < request.tracked.size(); ++k) {
      const auto [m, n, p, q] = request.tracked[k];
      s.F.push_back(ev.F(m, n, p, q));
      s.I.push_back(ev.I(k));
    }
    if (options.on_sample) options.on_sample(ev);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots.

namespace {

constexpr char kMagic[7] = {'L', 'R', 'O', 'U', 'G', 'H', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("truncated snapshot");
  return v;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const CorrelationState& state,
                    const Dissipator& dissipator) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(state.L));
  put<std::uint8_t>(out, state.statistics == Statistics::Fermion ? 0 : 1);
  double a = 0.0;
  double b = 0.0;
  std::uint8_t kind = 0;
  if (const auto* dep = std::get_if<Dephasing>(&dissipator)) {
    a = dep->gamma;
  } else {
    const auto& io = std::get<InOut>(dissipator);
    kind = 1;
    a = io.gamma_in;
    b = io.gamma_out;
  }
  put<std::uint8_t>(out, kind);
  put<double>(out, a);
  put<double>(out, b);
  put<double>(out, state.t);
  const std::size_t l = static_cast<std::size_t>(state.L);
  if (state.d.size() != l * l || state.f.size() != l * l * l * l)
    throw ConfigError("snapshot needs a state with D and F");
  out.write(reinterpret_cast<const char*>(state.d.data()),
            static_cast<std::streamsize>(state.d.size() * sizeof(cplx)));
  out.write(reinterpret_cast<const char*>(state.f.data()),
            static_cast<std::streamsize>(state.f.size() * sizeof(cplx)));
  if (!out) throw ConfigError("failed writing " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("not a snapshot file: " + path.string());
  const auto L = get<std::uint32_t>(in);
  const auto stats = get<std::uint8_t>(in);
  const auto kind = get<std::uint8_t>(in);
  const double a = get<double>(in);
  const double b = get<double>(in);
  const double t = get<double>(in);
  if (L == 0 || L > 4096 || stats > 1 || kind > 1) throw ConfigError("corrupt snapshot header");
  Snapshot snap;
  snap.state = CorrelationState(static_cast<int>(L), stats == 0 ? Statistics::Fermion
                                                                : Statistics::Boson);
  snap.state.t = t;
  snap.dissipator = kind == 0 ? Dissipator{Dephasing{a}} : Dissipator{InOut{a, b}};
  in.read(reinterpret_cast<char*>(snap.state.d.data()),
          static_cast<std::streamsize>(snap.state.d.size() * sizeof(cplx)));
  in.read(reinterpret_cast<char*>(snap.state.f.data()),
          static_cast<std::streamsize>(snap.state.f.size() * sizeof(cplx)));
  if (!in) throw ConfigError("truncated snapshot");
  return snap;
}

}  // namespace qrough
