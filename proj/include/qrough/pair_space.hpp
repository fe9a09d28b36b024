#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qrough/model.hpp"

namespace qrough {

/// Canonically ordered site pairs (m < n for fermions, m <= n for bosons).
///
/// The four-point tensor is stored as a P x P matrix G[r][c] over canonical pairs
/// r = (m, n), c = (p, q); every other entry of F follows from exchange symmetry.
///
/// Entries are kept in the real gauge F_mnpq = i^(p+q-m-n) g_mnpq, in which hopping
/// of a single index j -> j -+ 1 enters with weight +-1. `neighbors()` lists those
/// weights (times the reordering sign, accumulated, e.g. 2 for bosonic (m, m)).
class PairSpace {
 public:
  struct Neighbor {
    std::uint32_t index;
    double weight;
  };

  PairSpace(int L, Statistics statistics);

  int sites() const { return L_; }
  Statistics statistics() const { return statistics_; }
  std::size_t size() const { return first_.size(); }

  int first(std::size_t r) const { return first_[r]; }
  int second(std::size_t r) const { return second_[r]; }
  std::span<const std::int32_t> firsts() const { return first_; }
  std::span<const std::int32_t> seconds() const { return second_; }

  /// Pair index of (m, n) and the sign of the reordering; sign 0 marks a
  /// vanishing fermionic pair (m == n).
  std::pair<std::size_t, int> canonical(int m, int n) const;

  std::span<const Neighbor> neighbors(std::size_t r) const {
    return {neighbors_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  /// Pairs that contain the given site.
  std::span<const std::uint32_t> pairs_containing(int site) const {
    return containing_[static_cast<std::size_t>(site)];
  }

 private:
  int L_;
  Statistics statistics_;
  std::vector<std::int32_t> first_, second_;
  std::vector<std::int32_t> lookup_;  // L x L, -1 if forbidden
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> neighbors_;
  std::vector<std::vector<std::uint32_t>> containing_;
};

}  // namespace qrough
