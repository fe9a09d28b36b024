#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "qrough/exact_dynamics.hpp"
#include "qrough/model.hpp"

namespace qrough::oracle {

using SparseC = Eigen::SparseMatrix<cplx>;

/// Occupation-number basis of a chain, optionally restricted to N particles.
class FockBasis {
 public:
  /// n_max is forced to 1 for fermions.
  FockBasis(int L, Statistics statistics, int n_max = 1, std::optional<int> sector = std::nullopt);

  int sites() const { return L_; }
  Statistics statistics() const { return statistics_; }
  int n_max() const { return n_max_; }
  std::optional<int> sector() const { return sector_; }
  std::size_t dimension() const { return states_.size(); }

  std::span<const int> occupation(std::size_t i) const {
    return {states_[i].data(), states_[i].size()};
  }
  std::optional<std::size_t> index(std::span<const int> occupations) const;

 private:
  std::size_t key(std::span<const int> occ) const;

  int L_;
  Statistics statistics_;
  int n_max_;
  std::optional<int> sector_;
  std::vector<std::vector<int>> states_;
  std::unordered_map<std::size_t, std::size_t> lookup_;
};

/// One ladder operator: a_site (dagger = false) or a_site^dagger.
struct Ladder {
  int site;
  bool dagger;
};

/// Matrix of the product ops[0] ops[1] ... ops[k-1] in the basis. Fermions carry
/// Jordan-Wigner strings; results leaving the basis (truncation or sector) are dropped.
SparseC operator_matrix(const FockBasis& basis, std::span<const Ladder> ops);

/// H = -sum_j (a_{j+1}^dag a_j + h.c.) with open boundaries.
SparseC hamiltonian(const FockBasis& basis);

/// sqrt(gamma) n_j, or sqrt(gamma_in) a_j^dag and sqrt(gamma_out) a_j.
std::vector<SparseC> jump_operators(const FockBasis& basis, const Dissipator& dissipator);

/// Largest superoperator dimension (dim^2) build_lindbladian accepts.
inline constexpr std::size_t kMaxSuperDim = 1'000'000;

/// Column-stacked generator: vec(L[rho]) = S vec(rho).
SparseC build_lindbladian(const Dissipator& dissipator, const FockBasis& basis);

struct DensityMatrix {
  Eigen::MatrixXcd rho;
  double t = 0.0;
};

/// |occ><occ|.
DensityMatrix pure_state(const FockBasis& basis, std::span<const int> occupations);

/// Fixed-step RK4 on vec(rho) with the same step sequence as CorrelationEvolver
/// (steps of dt, the last one shortened onto each grid time). No trace renormalisation.
std::vector<DensityMatrix> evolve_rho(const DensityMatrix& rho0, const SparseC& generator,
                                      std::span<const double> t_grid, double dt);

/// D_mn = tr(rho a_m^dag a_n), F_mnpq = tr(rho a_m^dag a_n^dag a_p a_q).
CorrelationState correlations_from_rho(const DensityMatrix& rho, const FockBasis& basis);

/// Var(h_{L/2}) with h_{L/2} = sum_{k < L/2} n_k, read off the Fock diagonal of rho.
double height_variance(const DensityMatrix& rho, const FockBasis& basis);

struct OracleCheckSpec {
  RhsKind kind;
  std::vector<int> occupations;
  /// Boson cutoff (ignored for fermions).
  int n_max = 4;
  double t_final = 5.0;
  std::optional<double> dt;
  std::vector<double> check_times;  // empty: every 0.5 up to t_final
  double tolerance = 1e-6;
  /// Negative control: flips the exchange sign of the F term in w^2.
  bool corrupt_roughness_sign = false;
};

struct OracleCheckReport {
  double max_dev_D = 0.0;
  double max_dev_F = 0.0;
  double max_dev_w2 = 0.0;
  double max_trace_drift = 0.0;
  double tolerance = 1e-6;
  std::size_t hilbert_dim = 0;
  bool pass = false;

  nlohmann::json to_json() const;
};

/// Runs the correlation integrator and the density-matrix oracle side by side.
OracleCheckReport oracle_check(const OracleCheckSpec& spec);

}  // namespace qrough::oracle
