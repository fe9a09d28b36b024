#include "qrough/pair_space.hpp"

#include <map>

#include "qrough/errors.hpp"

namespace qrough {

PairSpace::PairSpace(int L, Statistics statistics) : L_(L), statistics_(statistics) {
  if (L < 1) throw ConfigError("PairSpace needs at least one site");
  const bool fermion = statistics == Statistics::Fermion;
  lookup_.assign(static_cast<std::size_t>(L) * L, -1);
  for (int m = 0; m < L; ++m) {
    for (int n = fermion ? m + 1 : m; n < L; ++n) {
      lookup_[static_cast<std::size_t>(m) * L + n] = static_cast<std::int32_t>(first_.size());
      first_.push_back(m);
      second_.push_back(n);
    }
  }

  containing_.assign(static_cast<std::size_t>(L), {});
  offsets_.reserve(size() + 1);
  offsets_.push_back(0);
  for (std::size_t r = 0; r < size(); ++r) {
    const int m = first_[r];
    const int n = second_[r];
    containing_[m].push_back(static_cast<std::uint32_t>(r));
    if (n != m) containing_[n].push_back(static_cast<std::uint32_t>(r));

    std::map<std::size_t, double> acc;
    const auto add = [&](int a, int b, double dir) {
      if (a < 0 || a >= L || b < 0 || b >= L) return;
      const auto [idx, sign] = canonical(a, b);
      if (sign != 0) acc[idx] += dir * sign;
    };
    add(m + 1, n, -1.0);
    add(m - 1, n, 1.0);
    add(m, n + 1, -1.0);
    add(m, n - 1, 1.0);
    for (const auto& [idx, w] : acc) {
      if (w != 0.0) neighbors_.push_back({static_cast<std::uint32_t>(idx), w});
    }
    offsets_.push_back(neighbors_.size());
  }
}

std::pair<std::size_t, int> PairSpace::canonical(int m, int n) const {
  if (m == n && statistics_ == Statistics::Fermion) return {0, 0};
  int sign = 1;
  if (m > n) {
    std::swap(m, n);
    if (statistics_ == Statistics::Fermion) sign = -1;
  }
  const auto idx = lookup_[static_cast<std::size_t>(m) * L_ + n];
  return {static_cast<std::size_t>(idx), sign};
}

}  // namespace qrough
