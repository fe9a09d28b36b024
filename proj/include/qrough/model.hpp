#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qrough {

using cplx = std::complex<double>;

enum class Statistics { Fermion, Boson };
enum class InitialState { Staggered, DomainWall, Uniform };

/// Jump operators sqrt(gamma) n_j on every site.
struct Dephasing {
  double gamma = 0.0;
};

/// Gain sqrt(gamma_in) a_j^dagger and loss sqrt(gamma_out) a_j on every site.
struct InOut {
  double gamma_in = 0.0;
  double gamma_out = 0.0;
};

using Dissipator = std::variant<Dephasing, InOut>;

/// Largest rate appearing in the dissipator.
double max_rate(const Dissipator& dissipator);

/// Default integrator step: min(0.05, 0.05 / max(1, largest rate)).
double default_dt(const Dissipator& dissipator);

std::string to_string(Statistics s);
std::string to_string(InitialState s);

/// Exchange sign s of the four-point tensor: -1 for fermions, +1 for bosons.
inline int exchange_sign(Statistics s) { return s == Statistics::Fermion ? -1 : 1; }

struct SystemConfig {
  int L = 16;
  Statistics statistics = Statistics::Fermion;
  Dissipator dissipator = Dephasing{1.0};
  InitialState initial_state = InitialState::Staggered;
  /// Experimental override of the filling; by default it follows the initial state.
  std::optional<double> nu_override;
  /// Integrator step; nullopt selects default_dt().
  std::optional<double> dt;
  double t_final = 1.0;
  std::vector<double> sample_times;
};

/// Filling factor at t = 0 (Staggered and DomainWall: 1/2, Uniform: 1).
double filling(const SystemConfig& config);

/// Step actually used by the integrators for this config.
double resolved_dt(const SystemConfig& config);

/// Site occupations (0-based index i is site i + 1) of a Fock initial state.
std::vector<int> occupation_pattern(InitialState state, int L);

/// Human-readable invariant violations; empty iff the config is valid.
std::vector<std::string> validate_config(const SystemConfig& config);

/// Throws ConfigError listing every violation.
void require_valid(const SystemConfig& config);

/// Dense two-point matrix D (L x L) and four-point tensor F (L^4, may be empty).
///
/// Internal indices are 0-based; site j of the chain is index j - 1.
/// D(m, n) = <a_m^dag a_n>, F(m, n, p, q) = <a_m^dag a_n^dag a_p a_q>.
struct CorrelationState {
  int L = 0;
  Statistics statistics = Statistics::Fermion;
  double t = 0.0;
  std::vector<cplx> d;
  std::vector<cplx> f;

  CorrelationState() = default;
  CorrelationState(int size, Statistics stats, bool with_four_point = true);

  bool has_four_point() const { return !f.empty(); }

  cplx& D(int m, int n) { return d[static_cast<std::size_t>(m) * L + n]; }
  const cplx& D(int m, int n) const { return d[static_cast<std::size_t>(m) * L + n]; }

  std::size_t f_index(int m, int n, int p, int q) const {
    const auto l = static_cast<std::size_t>(L);
    return ((static_cast<std::size_t>(m) * l + n) * l + p) * l + q;
  }
  cplx& F(int m, int n, int p, int q) { return f[f_index(m, n, p, q)]; }
  const cplx& F(int m, int n, int p, int q) const { return f[f_index(m, n, p, q)]; }
};

/// Correlations of the Fock product state with the given occupations.
///
/// Any L >= 1 is accepted; bosonic occupations may exceed one.
CorrelationState fock_correlations(std::span<const int> occupations, Statistics statistics,
                                   bool with_four_point = true);

/// Diagonals d_m = D_mm and f_mn = F_mnmn of a Fock state without the full tensor.
struct FockDiagonals {
  std::vector<double> d;
  std::vector<double> f;  // L x L row-major
};
FockDiagonals fock_diagonals(std::span<const int> occupations, Statistics statistics);

/// State at t = 0 for a config; rejects odd L and negative rates.
CorrelationState build_initial_correlations(const SystemConfig& config);

/// Symmetry residuals of a state, used by tests and drift checks.
struct SymmetryResiduals {
  double d_hermiticity = 0.0;   // max |D_mn - conj(D_nm)|
  double f_exchange = 0.0;      // max |F_mnpq - s F_nmpq|, |F_mnpq - s F_mnqp|
  double f_hermiticity = 0.0;   // max |F_mnpq - conj(F_qpnm)|
  double fermion_pauli = 0.0;   // max |F_mmpq|, |F_mnpp| (fermions only)
};
SymmetryResiduals symmetry_residuals(const CorrelationState& state);

}  // namespace qrough
