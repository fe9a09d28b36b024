#include "qrough/ew.hpp"

#include <cmath>
#include <numbers>

#include "qrough/errors.hpp"

namespace qrough {

void validate(const EwParams& params) {
  if (!(params.L_prime > 0.0) || !std::isfinite(params.L_prime))
    throw ConfigError("L_prime must be positive");
  if (!(params.tol > 0.0 && params.tol <= 1e-3)) throw ConfigError("tol must lie in (0, 1e-3]");
}

double ew_roughness(const EwParams& params, double t) {
  validate(params);
  if (!(t >= 0.0)) throw ConfigError("t must be nonnegative");
  if (t == 0.0) return 0.0;
  constexpr double pi = std::numbers::pi;
  const double Lp = params.L_prime;
  const double x = 8.0 * pi * pi * t / (Lp * Lp);
  if (x < kEwSmallX) return std::sqrt(std::sqrt(t / (2.0 * pi)) - t / Lp);

  const double pref = Lp / (4.0 * pi * pi);
  const double sat = Lp / 24.0;
  double sum = 0.0;
  for (long n = 1;; ++n) {
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    sum += std::exp(-x * nn) / nn;
    // Remaining terms: ratio of successive terms is below exp(-x (2n + 3)).
    const double next = static_cast<double>(n + 1) * static_cast<double>(n + 1);
    const double tail = std::exp(-x * next) / next / (1.0 - std::exp(-x * (2.0 * n + 3.0)));
    const double current = sat - pref * sum;
    if (pref * tail < params.tol * current) break;
  }
  return std::sqrt(std::max(0.0, sat - pref * sum));
}

std::vector<double> ew_curve(const EwParams& params, std::span<const double> times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(ew_roughness(params, t));
  return out;
}

}  // namespace qrough
