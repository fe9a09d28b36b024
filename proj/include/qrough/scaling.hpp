#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qrough/observables.hpp"

namespace qrough {

inline constexpr std::uint64_t kDefaultSeed = 0x5eed;
inline constexpr int kBootstrapResamples = 1000;
inline constexpr double kPlateauTolerance = 0.05;

struct Window {
  double t_min = 0.0;
  double t_max = 0.0;
};

/// Log-log least-squares slope with a 3-sigma residual-bootstrap half-width.
struct PowerFit {
  double exponent = 0.0;
  double err = 0.0;
  double intercept = 0.0;  // natural-log intercept
  std::size_t points = 0;
};

/// Fits log y = a + b log x. Needs at least `min_points` positive pairs.
PowerFit fit_power_law(std::span<const double> x, std::span<const double> y,
                       std::uint64_t seed = kDefaultSeed, std::size_t min_points = 2);

/// Growth exponent over the window; needs >= 10 samples there, all with w > 0.
PowerFit fit_beta(const ObservableSeries& series, Window window,
                  std::uint64_t seed = kDefaultSeed);

/// Late-window flatness: least-squares slope over the final 20% of samples,
/// relative change slope * span / w_sat must stay below the tolerance.
struct PlateauCheck {
  double w_sat = 0.0;
  double relative_change = 0.0;
  bool saturated = false;
};
PlateauCheck plateau_check(const ObservableSeries& series,
                           double tolerance = kPlateauTolerance);

/// Mean of w over the final 20% of samples.
double saturation_value(const ObservableSeries& series);

/// First sample time with w >= fraction * w_sat; NumericalError if no plateau.
double saturation_time(const ObservableSeries& series, double fraction = 0.9,
                       double plateau_tolerance = kPlateauTolerance);

/// alpha from (L, w_sat) pairs; needs >= 3 sizes.
PowerFit fit_alpha(std::span<const std::pair<double, double>> saturations,
                   std::uint64_t seed = kDefaultSeed);
/// z from (L, t*) pairs; needs >= 3 sizes.
PowerFit fit_z(std::span<const std::pair<double, double>> saturation_times,
               std::uint64_t seed = kDefaultSeed);

/// Positive-time samples of one roughness curve.
struct Curve {
  double L = 0.0;
  std::vector<double> t;
  std::vector<double> w;
};

/// Samples with t > 0, t >= t_min and w > 0.
Curve curve_from_series(const ObservableSeries& series, double L, double t_min = 0.0);

/// Interpolated log w at log t (linear in log-log); curve times must be increasing.
double log_interp(const Curve& curve, double log_t);

/// Mean squared log-deviation over all curve pairs, each pair compared on a
/// 200-point log-time grid spanning its overlap. ConfigError if a pair does not overlap.
double collapse_cost(std::span<const Curve> curves);

struct CollapseResult {
  std::vector<Curve> curves;
  double cost = 0.0;
};

/// Rescales t by (L/L_ref)^-z and w by (L/L_ref)^-alpha, then scores the overlap.
CollapseResult collapse(std::span<const Curve> curves, double alpha, double z, double L_ref);

/// Two-constant rescaling t -> t / d1, w -> w / d2 of a candidate curve onto a reference.
struct AffineFit {
  double d1 = 1.0;
  double d2 = 1.0;
  double rms = 0.0;  // RMS log-deviation over the window
};

/// Least-squares (d1, d2) over the reference window (log space). For each d1 the
/// optimal log d2 is the mean offset; d1 is found by a grid plus golden-section search
/// restricted to rescalings whose support covers the whole window.
AffineFit fit_affine(const Curve& reference, const Curve& candidate, Window window);

/// RMS log-deviation of a rescaled candidate against the reference over the window.
double affine_rms(const Curve& reference, const Curve& candidate, Window window, double d1,
                  double d2);

/// Family-Vicsek exponents of one family of curves.
struct FvFit {
  double alpha = 0.0, beta = 0.0, z = 0.0;
  double alpha_err = 0.0, beta_err = 0.0, z_err = 0.0;
  Window beta_window;
  double beta_L = 0.0;  // size whose curve gives beta
  double saturation_fraction = 0.9;
  double plateau_tolerance = kPlateauTolerance;
  std::vector<double> L_values;
  std::vector<double> w_sat;
  std::vector<double> t_star;
  int L_ref = 32;
  std::map<double, double> z_by_fraction;  // fractions 0.8, 0.9, 0.95
  double fv_consistency = 0.0;             // |z - alpha / beta|
  double collapse_t_min = 0.0;             // curves enter the collapse from here on
  double collapse_cost = 0.0;
  double baseline_cost = 0.0;              // alpha = z = 0

  nlohmann::json to_json() const;
};

/// Start of the scaling regime: max(2/gamma, 1) for gamma > 0, 1 for gamma = 0.
double scaling_regime_start(double gamma);

/// Default growth window: [scaling_regime_start(gamma), 0.5 t*].
Window default_beta_window(double gamma, double t_star);

/// Fits alpha and z across sizes and beta on the largest size. The collapse scores use
/// samples with t >= scaling_regime_start(gamma).
FvFit fit_family(std::span<const ObservableSeries> series, std::span<const double> L_values,
                 double gamma, int L_ref = 32, std::uint64_t seed = kDefaultSeed,
                 double fraction = 0.9, double plateau_tolerance = kPlateauTolerance);

}  // namespace qrough
