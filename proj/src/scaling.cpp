#include "qrough/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "qrough/errors.hpp"

namespace qrough {

namespace {

struct Ols {
  double slope = 0.0;
  double intercept = 0.0;
};

Ols ols(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("power-law fit needs distinct abscissae");
  const double b = sxy / sxx;
  return {b, my - b * mx};
}

struct LogCurve {
  std::vector<double> lt;
  std::vector<double> lw;
};

LogCurve to_log(const Curve& c) {
  LogCurve out;
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    if (!(c.t[i] > 0.0) || !(c.w[i] > 0.0)) continue;
    out.lt.push_back(std::log(c.t[i]));
    out.lw.push_back(std::log(c.w[i]));
  }
  if (out.lt.size() < 2) throw ConfigError("curve needs at least two positive samples");
  for (std::size_t i = 1; i < out.lt.size(); ++i)
    if (!(out.lt[i] > out.lt[i - 1])) throw ConfigError("curve times must be increasing");
  return out;
}

double interp(const LogCurve& c, double x) {
  if (x <= c.lt.front()) return c.lw.front();
  if (x >= c.lt.back()) return c.lw.back();
  const auto it = std::upper_bound(c.lt.begin(), c.lt.end(), x);
  const auto j = static_cast<std::size_t>(it - c.lt.begin());
  const double f = (x - c.lt[j - 1]) / (c.lt[j] - c.lt[j - 1]);
  return c.lw[j - 1] + f * (c.lw[j] - c.lw[j - 1]);
}

constexpr int kGrid = 200;

std::vector<double> log_grid(double lo, double hi) {
  std::vector<double> g(kGrid);
  for (int k = 0; k < kGrid; ++k) g[k] = lo + (hi - lo) * k / (kGrid - 1);
  return g;
}

PowerFit fit_pairs(std::span<const std::pair<double, double>> pts, std::uint64_t seed,
                   const char* what) {
  if (pts.size() < 3) {
    std::ostringstream msg;
    msg << what << " needs at least 3 system sizes, got " << pts.size();
    throw ConfigError(msg.str());
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [a, b] : pts) {
    x.push_back(a);
    y.push_back(b);
  }
  return fit_power_law(x, y, seed, 3);
}

}  // namespace

PowerFit fit_power_law(std::span<const double> x, std::span<const double> y, std::uint64_t seed,
                       std::size_t min_points) {
  if (x.size() != y.size()) throw ConfigError("power-law fit: length mismatch");
  if (x.size() < std::max<std::size_t>(min_points, 2))
    throw ConfigError("power-law fit: too few points");
  std::vector<double> lx(x.size());
  std::vector<double> ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ConfigError("power-law fit: nonpositive value");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const Ols fit = ols(lx, ly);
  std::vector<double> resid(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) resid[i] = ly[i] - (fit.intercept + fit.slope * lx[i]);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, lx.size() - 1);
  std::vector<double> yb(lx.size());
  double s1 = 0.0;
  double s2 = 0.0;
  for (int k = 0; k < kBootstrapResamples; ++k) {
    for (std::size_t i = 0; i < lx.size(); ++i)
      yb[i] = fit.intercept + fit.slope * lx[i] + resid[pick(rng)];
    const double b = ols(lx, yb).slope;
    s1 += b;
    s2 += b * b;
  }
  const double n = kBootstrapResamples;
  const double var = std::max(0.0, s2 / n - (s1 / n) * (s1 / n));
  return {fit.slope, 3.0 * std::sqrt(var), fit.intercept, lx.size()};
}

PowerFit fit_beta(const ObservableSeries& series, Window window, std::uint64_t seed) {
  if (!(window.t_min > 0.0) || !(window.t_max > window.t_min))
    throw ConfigError("beta window must satisfy 0 < t_min < t_max");
  if (series.w.size() != series.times.size()) throw ConfigError("series has no roughness column");
  std::vector<double> t;
  std::vector<double> w;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    if (series.times[i] < window.t_min || series.times[i] > window.t_max) continue;
    if (!(series.w[i] > 0.0)) {
      std::ostringstream msg;
      msg << "nonpositive w at t=" << series.times[i] << " inside the beta window";
      throw ConfigError(msg.str());
    }
    t.push_back(series.times[i]);
    w.push_back(series.w[i]);
  }
  if (t.empty()) throw ConfigError("beta window contains no samples");
  if (t.size() < 10) {
    std::ostringstream msg;
    msg << "beta window [" << window.t_min << ", " << window.t_max << "] holds " << t.size()
        << " samples; at least 10 are required";
    throw ConfigError(msg.str());
  }
  return fit_power_law(t, w, seed, 10);
}

PlateauCheck plateau_check(const ObservableSeries& series, double tolerance) {
  const std::size_t n = series.times.size();
  if (series.w.size() != n || n < 5) throw ConfigError("series too short for a plateau test");
  const std::size_t tail = std::max<std::size_t>(3, n / 5);
  const std::size_t start = n - tail;
  double mt = 0.0;
  double mw = 0.0;
  for (std::size_t i = start; i < n; ++i) {
    mt += series.times[i];
    mw += series.w[i];
  }
  mt /= static_cast<double>(tail);
  mw /= static_cast<double>(tail);
  double stt = 0.0;
  double stw = 0.0;
  for (std::size_t i = start; i < n; ++i) {
    stt += (series.times[i] - mt) * (series.times[i] - mt);
    stw += (series.times[i] - mt) * (series.w[i] - mw);
  }
  PlateauCheck out;
  out.w_sat = mw;
  const double slope = stt > 0.0 ? stw / stt : 0.0;
  const double span = series.times[n - 1] - series.times[start];
  out.relative_change = mw > 0.0 ? std::abs(slope * span) / mw : INFINITY;
  out.saturated = out.relative_change < tolerance;
  return out;
}

double saturation_value(const ObservableSeries& series) { return plateau_check(series).w_sat; }

double saturation_time(const ObservableSeries& series, double fraction,
                       double plateau_tolerance) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("fraction must lie in (0, 1)");
  const PlateauCheck p = plateau_check(series, plateau_tolerance);
  if (!p.saturated) {
    std::ostringstream msg;
    msg << "not saturated: w changes by " << p.relative_change * 100.0
        << "% over the final 20% of samples; extend t_final";
    throw NumericalError(msg.str());
  }
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    if (series.times[i] > 0.0 && series.w[i] >= fraction * p.w_sat) return series.times[i];
  }
  throw NumericalError("threshold never reached");
}

PowerFit fit_alpha(std::span<const std::pair<double, double>> saturations, std::uint64_t seed) {
  return fit_pairs(saturations, seed, "fit_alpha");
}

PowerFit fit_z(std::span<const std::pair<double, double>> saturation_times, std::uint64_t seed) {
  return fit_pairs(saturation_times, seed, "fit_z");
}

Curve curve_from_series(const ObservableSeries& series, double L, double t_min) {
  Curve c;
  c.L = L;
  for (std::size_t i = 0; i < series.times.size() && i < series.w.size(); ++i) {
    if (series.times[i] > 0.0 && series.times[i] >= t_min && series.w[i] > 0.0) {
      c.t.push_back(series.times[i]);
      c.w.push_back(series.w[i]);
    }
  }
  return c;
}

double log_interp(const Curve& curve, double log_t) { return interp(to_log(curve), log_t); }

double collapse_cost(std::span<const Curve> curves) {
  if (curves.size() < 2) throw ConfigError("collapse needs at least two curves");
  std::vector<LogCurve> logs;
  for (const auto& c : curves) logs.push_back(to_log(c));
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < logs.size(); ++i)
    for (std::size_t j = i + 1; j < logs.size(); ++j) {
      const double lo = std::max(logs[i].lt.front(), logs[j].lt.front());
      const double hi = std::min(logs[i].lt.back(), logs[j].lt.back());
      if (!(hi > lo)) throw ConfigError("rescaled curves do not overlap in time");
      double s = 0.0;
      for (double g : log_grid(lo, hi)) {
        const double d = interp(logs[i], g) - interp(logs[j], g);
        s += d * d;
      }
      total += s / kGrid;
      ++pairs;
    }
  return total / pairs;
}

CollapseResult collapse(std::span<const Curve> curves, double alpha, double z, double L_ref) {
  if (!(L_ref > 0.0)) throw ConfigError("L_ref must be positive");
  CollapseResult out;
  for (const auto& c : curves) {
    Curve r = c;
    const double s = c.L / L_ref;
    const double ft = std::pow(s, -z);
    const double fw = std::pow(s, -alpha);
    for (auto& t : r.t) t *= ft;
    for (auto& w : r.w) w *= fw;
    out.curves.push_back(std::move(r));
  }
  out.cost = collapse_cost(out.curves);
  return out;
}

namespace {

struct AffineProblem {
  LogCurve ref;
  LogCurve cand;
  std::vector<double> grid;
  std::vector<double> ref_vals;
  double ld1_lo = 0.0;
  double ld1_hi = 0.0;

  AffineProblem(const Curve& reference, const Curve& candidate, Window window)
      : ref(to_log(reference)), cand(to_log(candidate)) {
    if (!(window.t_min > 0.0) || !(window.t_max > window.t_min))
      throw ConfigError("comparison window must satisfy 0 < t_min < t_max");
    const double lo = std::max(std::log(window.t_min), ref.lt.front());
    const double hi = std::min(std::log(window.t_max), ref.lt.back());
    if (!(hi > lo)) throw ConfigError("comparison window outside the reference curve");
    grid = log_grid(lo, hi);
    for (double g : grid) ref_vals.push_back(interp(ref, g));
    ld1_lo = cand.lt.front() - lo;
    ld1_hi = cand.lt.back() - hi;
    if (!(ld1_hi >= ld1_lo)) throw ConfigError("candidate curve cannot cover the window");
  }

  /// Returns (cost, log d2) for a given log d1.
  std::pair<double, double> eval(double ld1) const {
    double mean = 0.0;
    std::vector<double> d(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      d[k] = interp(cand, grid[k] + ld1) - ref_vals[k];
      mean += d[k];
    }
    mean /= static_cast<double>(d.size());
    double s = 0.0;
    for (double v : d) s += (v - mean) * (v - mean);
    return {s / static_cast<double>(d.size()), mean};
  }
};

}  // namespace

double affine_rms(const Curve& reference, const Curve& candidate, Window window, double d1,
                  double d2) {
  const AffineProblem prob(reference, candidate, window);
  double s = 0.0;
  for (std::size_t k = 0; k < prob.grid.size(); ++k) {
    const double d =
        interp(prob.cand, prob.grid[k] + std::log(d1)) - std::log(d2) - prob.ref_vals[k];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(prob.grid.size()));
}

AffineFit fit_affine(const Curve& reference, const Curve& candidate, Window window) {
  const AffineProblem prob(reference, candidate, window);
  constexpr int kScan = 400;
  double best = INFINITY;
  int best_k = 0;
  const auto at = [&](int k) {
    return prob.ld1_lo + (prob.ld1_hi - prob.ld1_lo) * k / static_cast<double>(kScan);
  };
  for (int k = 0; k <= kScan; ++k) {
    const double c = prob.eval(at(k)).first;
    if (c < best) {
      best = c;
      best_k = k;
    }
  }
  // Golden-section refinement inside the bracketing scan cells.
  double a = at(std::max(0, best_k - 1));
  double b = at(std::min(kScan, best_k + 1));
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = prob.eval(c).first;
  double fd = prob.eval(d).first;
  for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = prob.eval(c).first;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = prob.eval(d).first;
    }
  }
  double ld1 = 0.5 * (a + b);
  auto [cost, ld2] = prob.eval(ld1);
  if (best < cost) {
    ld1 = at(best_k);
    std::tie(cost, ld2) = prob.eval(ld1);
  }
  return {std::exp(ld1), std::exp(ld2), std::sqrt(cost)};
}

double scaling_regime_start(double gamma) {
  return gamma > 0.0 ? std::max(2.0 / gamma, 1.0) : 1.0;
}

Window default_beta_window(double gamma, double t_star) {
  return {scaling_regime_start(gamma), 0.5 * t_star};
}

FvFit fit_family(std::span<const ObservableSeries> series, std::span<const double> L_values,
                 double gamma, int L_ref, std::uint64_t seed, double fraction,
                 double plateau_tolerance) {
  if (series.size() != L_values.size()) throw ConfigError("one size per series is required");
  if (series.size() < 3) throw ConfigError("a family fit needs at least 3 system sizes");
  FvFit fit;
  fit.saturation_fraction = fraction;
  fit.plateau_tolerance = plateau_tolerance;
  fit.L_ref = L_ref;
  fit.L_values.assign(L_values.begin(), L_values.end());

  std::vector<std::pair<double, double>> sat;
  std::vector<std::pair<double, double>> tstar;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ws = saturation_value(series[i]);
    const double ts = saturation_time(series[i], fraction, plateau_tolerance);
    fit.w_sat.push_back(ws);
    fit.t_star.push_back(ts);
    sat.emplace_back(L_values[i], ws);
    tstar.emplace_back(L_values[i], ts);
    if (L_values[i] > L_values[largest]) largest = i;
  }
  const PowerFit a = fit_alpha(sat, seed);
  const PowerFit zf = fit_z(tstar, seed);
  fit.alpha = a.exponent;
  fit.alpha_err = a.err;
  fit.z = zf.exponent;
  fit.z_err = zf.err;
  for (double frac : {0.8, 0.9, 0.95}) {
    std::vector<std::pair<double, double>> ts;
    for (std::size_t i = 0; i < series.size(); ++i)
      ts.emplace_back(L_values[i], saturation_time(series[i], frac, plateau_tolerance));
    fit.z_by_fraction[frac] = fit_z(ts, seed).exponent;
  }

  fit.beta_L = L_values[largest];
  fit.beta_window = default_beta_window(gamma, fit.t_star[largest]);
  const PowerFit b = fit_beta(series[largest], fit.beta_window, seed);
  fit.beta = b.exponent;
  fit.beta_err = b.err;
  fit.fv_consistency = std::abs(fit.z - fit.alpha / fit.beta);

  fit.collapse_t_min = scaling_regime_start(gamma);
  std::vector<Curve> curves;
  for (std::size_t i = 0; i < series.size(); ++i)
    curves.push_back(curve_from_series(series[i], L_values[i], fit.collapse_t_min));
  fit.collapse_cost = collapse(curves, fit.alpha, fit.z, L_ref).cost;
  fit.baseline_cost = collapse(curves, 0.0, 0.0, L_ref).cost;
  return fit;
}

nlohmann::json FvFit::to_json() const {
  nlohmann::json zs = nlohmann::json::object();
  for (const auto& [f, z] : z_by_fraction) zs[std::to_string(f).substr(0, 4)] = z;
  return {{"alpha", alpha},
          {"beta", beta},
          {"z", z},
          {"errors", {{"alpha", alpha_err}, {"beta", beta_err}, {"z", z_err}}},
          {"windows",
           {{"beta", {beta_window.t_min, beta_window.t_max}},
            {"beta_L", beta_L},
            {"saturation_fraction", saturation_fraction},
            {"plateau", "final 20% of samples"},
            {"plateau_tolerance", plateau_tolerance}}},
          {"L_values", L_values},
          {"L_ref", L_ref},
          {"w_sat", w_sat},
          {"t_star", t_star},
          {"z_by_fraction", zs},
          {"fv_consistency", fv_consistency},
          {"collapse_t_min", collapse_t_min},
          {"collapse_cost", collapse_cost},
          {"baseline_cost", baseline_cost}};
}

}  // namespace qrough
