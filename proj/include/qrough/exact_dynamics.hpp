#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qrough/model.hpp"
#include "qrough/observables.hpp"
#include "qrough/pair_space.hpp"

namespace qrough {

/// Selects one of the four closed equation sets (statistics x dissipator).
struct RhsKind {
  Statistics statistics = Statistics::Fermion;
  Dissipator dissipator = Dephasing{0.0};
};

inline RhsKind rhs_kind(const SystemConfig& c) { return {c.statistics, c.dissipator}; }

/// Dephasing rate structure of F: d_mq + d_mp + d_nq + d_np - d_mn - d_pq - 2.
///
/// The -d_mn - d_pq terms only matter for bosons; fermionic entries with
/// m == n or p == q vanish identically.
inline int four_point_rate(int m, int n, int p, int q) {
  return (m == q) + (m == p) + (n == q) + (n == p) - (m == n) - (p == q) - 2;
}

/// Time derivative of D on the dense state. Indices outside the chain contribute zero.
std::vector<cplx> rhs_D(const CorrelationState& state, const RhsKind& kind);

/// Time derivative of the dense four-point tensor.
std::vector<cplx> rhs_F(const CorrelationState& state, const RhsKind& kind);

/// One classical RK4 step of the coupled (D, F) system on the dense representation.
CorrelationState step(const CorrelationState& state, const RhsKind& kind, double dt);

/// Tracked entries of the assumption-check integrals.
///
/// G_mn = e^{-gt} int_0^t e^{-g lambda_mn T} D_mn dT is integrated for every (m, n);
/// I_mnpq is integrated for each listed (m, n, p, q) (0-based indices).
struct DiagnosticsRequest {
  std::vector<std::array<int, 4>> tracked;
};

/// i^k for integer k.
inline cplx i_pow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0:
      return {1.0, 0.0};
    case 1:
      return {0.0, 1.0};
    case 2:
      return {-1.0, 0.0};
    default:
      return {0.0, -1.0};
  }
}

/// Fixed-step RK4 integrator of the exact correlation equations.
///
/// States reachable from Fock states satisfy D_mn = i^(n-m) d_mn and
/// F_mnpq = i^(p+q-m-n) g_mnpq with real d, g, and the equations stay real in these
/// variables. The evolver integrates (d, g) in double precision, with g held in the
/// packed pair representation (see PairSpace). Stages are fused with the row-wise
/// derivative evaluation, so four state-sized buffers suffice.
class CorrelationEvolver {
 public:
  /// Throws ConfigError if `initial` is not of the real-gauge form above.
  CorrelationEvolver(const RhsKind& kind, const CorrelationState& initial, double dt,
                     std::optional<DiagnosticsRequest> diagnostics = std::nullopt);

  /// Starts from the Fock state with the given occupations without forming the
  /// dense four-point tensor.
  static CorrelationEvolver from_fock(const RhsKind& kind, std::span<const int> occupations,
                                      double dt, bool four_point,
                                      std::optional<DiagnosticsRequest> diagnostics = std::nullopt);

  /// Bytes held by an evolver for this problem size.
  static std::size_t estimate_bytes(int L, Statistics statistics, bool four_point,
                                    std::size_t tracked = 0, bool diagnostics = false);

  int sites() const { return L_; }
  double time() const { return t_; }
  double dt() const { return dt_; }
  bool has_four_point() const { return four_point_; }
  const RhsKind& kind() const { return kind_; }

  /// One RK4 step of size h.
  void step(double h);
  /// Steps of size dt, shortening the last one to land on t exactly.
  void advance_to(double t);

  cplx D(int m, int n) const { return i_pow(n - m) * y_[static_cast<std::size_t>(m) * L_ + n]; }
  cplx F(int m, int n, int p, int q) const;
  /// Diagonal slice F_mnmn read directly from the packed storage.
  double F_mnmn(int m, int n) const;
  cplx G(int m, int n) const;
  cplx I(std::size_t k) const;
  const DiagnosticsRequest* diagnostics() const { return diagnostics_ ? &*diagnostics_ : nullptr; }

  std::vector<double> diagonal() const;
  CorrelationState to_dense() const;

  /// True when every stored value is finite.
  bool all_finite() const;

  double roughness(double nu) const;
  double total_number() const;
  double total_number_sq() const;

 private:
  CorrelationEvolver(const RhsKind& kind, int L, bool four_point, double dt,
                     std::optional<DiagnosticsRequest> diagnostics);

  void derivative_D(const double* in, double* out) const;
  void derivative_row(const double* in, std::size_t r, double* out) const;
  void derivative_diagnostics(const double* in, double t, double* out) const;
  void stage(int s, const double* in, double* next, double t, double h);
  double packed(const double* base, int m, int n, int p, int q) const;

  RhsKind kind_;
  int L_;
  bool four_point_;
  double dt_;
  double t_ = 0.0;
  std::optional<PairSpace> pairs_;
  std::optional<DiagnosticsRequest> diagnostics_;
  std::size_t g_offset_ = 0;
  std::size_t diag_offset_ = 0;
  std::size_t total_ = 0;
  std::vector<double> y_, acc_, buf_a_, buf_b_, k_;
  // Annihilation-side hops of every column pair, padded to four entries.
  std::vector<std::uint32_t> col_index_;
  std::vector<double> col_weight_;
};

/// Optional hooks and guards for evolve().
struct EvolveOptions {
  /// Refuse to allocate more than this many bytes for the integrator state.
  std::size_t mem_cap_bytes = std::size_t{2} << 30;
  /// Called at every sample time after observables are recorded.
  std::function<void(const CorrelationEvolver&)> on_sample;
};

/// Integrates the config from its Fock initial state and samples the requested
/// observables at config.sample_times. Throws NumericalError on non-finite values
/// and ResourceError when the memory cap would be exceeded.
ObservableSeries evolve(const SystemConfig& config, const ObservableRequest& request = {},
                        const EvolveOptions& options = {});

/// D-only integration (O(L^2) per step); rejects requests for w or <N^2>.
ObservableSeries evolve_D_only(const SystemConfig& config, const ObservableRequest& request = {
                                   false, true, false, true},
                               const EvolveOptions& options = {});

struct DiagnosticsSample {
  double t = 0.0;
  std::vector<cplx> D;        // L x L
  std::vector<cplx> G;        // L x L
  std::vector<cplx> F;        // tracked entries
  std::vector<cplx> I;        // tracked entries
};

/// Co-integrates G and the tracked I entries with (D, F); dephasing only.
std::vector<DiagnosticsSample> evolve_diagnostics(const SystemConfig& config,
                                                  const DiagnosticsRequest& request,
                                                  const EvolveOptions& options = {});

/// Binary checkpoint: "LROUGH1", u32 L, u8 statistics, u8 dissipator kind, three f64
/// (rate_a, rate_b, t), then D and F as little-endian (re, im) f64 pairs, row-major.
void write_snapshot(const std::filesystem::path& path, const CorrelationState& state,
                    const Dissipator& dissipator);
struct Snapshot {
  CorrelationState state;
  Dissipator dissipator;
};
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace qrough
