#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrough/model.hpp"

namespace qrough {

/// Sampled observables of one run. A column that was not requested is empty.
struct ObservableSeries {
  std::vector<double> times;
  std::vector<double> w;
  std::vector<double> n_tot;
  std::vector<double> n_tot_sq;
  std::vector<double> p_tra;
  /// Engine and resolved config of the run (a JSON object; null when unknown).
  nlohmann::json metadata;
  /// Column header used for w ("w" or "w_eff").
  std::string w_label = "w";

  std::size_t size() const { return times.size(); }
};

/// Which observables evolve() should record.
struct ObservableRequest {
  bool w = true;
  bool n_tot = true;
  bool n_tot_sq = true;
  bool p_tra = true;

  bool needs_four_point() const { return w || n_tot_sq; }
};

/// w^2 from the half-chain sums, with the fermion (-) / boson (+) sign on the F term.
double roughness_squared(Statistics statistics, int L, double nu, double sum_left_d,
                         double sum_left_f);

/// Clamps roundoff-negative w^2 to zero; values below -1e-9 are logged.
double clamp_roughness(double w2);

/// Surface roughness w(L, t) = w_{L/2}(t).
double roughness(const CorrelationState& state, double nu);
double total_number(const CorrelationState& state);
double total_number_sq(const CorrelationState& state);

/// Net left-to-right transfer for each diagonal snapshot relative to `initial`.
std::vector<double> transfer(std::span<const std::vector<double>> diagonals,
                             std::span<const double> initial);
double transfer_at(std::span<const double> diagonal, std::span<const double> initial);

/// CSV with a `#` metadata block holding the resolved config, then
/// `t,w,n_tot,n_tot_sq,p_tra` (missing observables are empty fields).
void write_series_csv(std::ostream& out, const ObservableSeries& series);
void write_series_csv(const std::filesystem::path& path, const ObservableSeries& series);
ObservableSeries read_series_csv(std::istream& in);
ObservableSeries read_series_csv(const std::filesystem::path& path);

/// Formats a double so that it round-trips exactly.
std::string format_double(double v);

}  // namespace qrough
