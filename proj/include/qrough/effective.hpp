#pragma once

#include <optional>
#include <vector>

#include "qrough/model.hpp"
#include "qrough/observables.hpp"

namespace qrough {

/// Real diagonal fields of the effective diffusion equations.
struct EffectiveState {
  int L = 0;
  double t = 0.0;
  std::vector<double> d;  // ~ D_mm
  std::vector<double> f;  // ~ F_mnmn, L x L row-major
};

struct EffectiveDerivative {
  std::vector<double> d;
  std::vector<double> f;
};

/// (2/gamma) times the zero-flux discrete Laplacian of d (1D) and f (2D),
/// applied at every site including the |m - n| <= 2 band.
EffectiveDerivative effective_rhs(const EffectiveState& state, double gamma);

/// Diagonals of the Fock initial state of the config.
EffectiveState initial_effective_state(const SystemConfig& config);

/// w_eff from the roughness formula with F_mnmn -> f_mn and D_mm -> d_m.
double effective_roughness(const EffectiveState& state, Statistics statistics, double nu);

/// RK4 integration of (d, f); records w_eff (column "w_eff") and n_tot.
/// Requires the dephasing dissipator with gamma > 0.
ObservableSeries evolve_effective(const SystemConfig& config);

/// Same observable via the adjoint route: only the half-chain sums enter w_eff, so
/// v(t) = exp(tA) chi_left is integrated (O(L) per step) and
/// sum_left d = v.d0, sum_left f = v^T f0 v. Used for large L.
ObservableSeries evolve_effective_adjoint(const SystemConfig& config);

/// Pointwise |w - w_eff| / w_eff on a common time grid; entries with w_eff = 0 are empty.
std::vector<std::optional<double>> relative_error(const ObservableSeries& w,
                                                  const ObservableSeries& w_eff);

}  // namespace qrough
