#pragma once

#include <span>
#include <vector>

namespace qrough {

struct EwParams {
  double L_prime = 64.0;
  /// Series truncation tolerance, relative to the current value; must lie in (0, 1e-3].
  double tol = 1e-12;
};

/// Throws ConfigError unless L_prime > 0 and tol is in (0, 1e-3].
void validate(const EwParams& params);

/// Below this value of x = 8 pi^2 t / L'^2 the resummed form
/// w^2 = sqrt(t / 2pi) - t / L' is used (exact up to O(exp(-pi^2 / x))).
inline constexpr double kEwSmallX = 1e-3;

/// Edwards-Wilkinson roughness w_EW(L', t) of the periodic continuum interface.
double ew_roughness(const EwParams& params, double t);

std::vector<double> ew_curve(const EwParams& params, std::span<const double> times);

}  // namespace qrough
