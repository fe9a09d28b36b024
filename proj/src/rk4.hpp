#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace qrough::detail {

/// Classical RK4 for a real vector; rhs(const double* y, double* out).
class RealRk4 {
 public:
  explicit RealRk4(std::size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

  template <typename Rhs>
  void step(std::vector<double>& y, double h, Rhs&& rhs) {
    const std::size_t n = y.size();
    rhs(y.data(), k1_.data());
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
    rhs(tmp_.data(), k2_.data());
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
    rhs(tmp_.data(), k3_.data());
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
    rhs(tmp_.data(), k4_.data());
    for (std::size_t i = 0; i < n; ++i)
      y[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

  /// Steps of dt, the last one shortened so that t lands on target.
  template <typename Rhs>
  void advance(std::vector<double>& y, double& t, double target, double dt, Rhs&& rhs) {
    const double eps = 1e-12 * std::max(1.0, std::abs(target));
    while (target - t > eps) {
      const double remaining = target - t;
      if (remaining <= dt * (1.0 + 1e-9)) {
        step(y, remaining, rhs);
        t = target;
      } else {
        step(y, dt, rhs);
        t += dt;
      }
    }
  }

 private:
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

}  // namespace qrough::detail
