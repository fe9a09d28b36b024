#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrough/config_io.hpp"
#include "qrough/exact_dynamics.hpp"
#include "qrough/model.hpp"
#include "qrough/observables.hpp"
#include "qrough/scaling.hpp"

namespace qrough {

enum class Engine { Exact, DOnly, Effective, EffectiveAdjoint };

std::string to_string(Engine engine);

/// One simulation of a recipe; its output file is `<name>.csv`.
struct RunSpec {
  std::string name;
  SystemConfig config;
  Engine engine = Engine::Exact;
  ObservableRequest request;
};

/// Diagnostics run: tracked D, G entries around site m and F, I entries (m + k, n, m, n).
/// Sites m and n are 1-based.
struct DiagnosticsSpec {
  std::string name;
  SystemConfig config;
  int m = 0;
  int n = 0;
};

struct Recipe {
  std::string name;
  bool full_scale = false;
  std::vector<RunSpec> runs;
  std::vector<DiagnosticsSpec> diagnostics;
};

/// fig2a, fig2b, fig2c, fig3a, fig3b, fig4, figS1, figS2, figS5, figS6, tableI.
const std::vector<std::string>& recipe_names();

/// Desk-scale recipe (full_scale selects the larger sizes).
Recipe make_recipe(const std::string& name, bool full_scale = false);

/// Grid shared by all recipes: 80 log points from t = 0.05 plus 100 linear points.
inline constexpr SampleSpec kRecipeSamples{80, 100, 0.05};
/// Dephasing step for gamma > 0 (checked against dt = 0.05 to 2e-5 relative in w).
inline constexpr double kDephasingDt = 0.2;
/// Step for gamma = 0 and the in/out runs.
inline constexpr double kBallisticDt = 0.05;
inline constexpr double kInOutDt = 0.1;
/// Plateau tolerance for gamma = 0: finite-size revivals keep w oscillating by 10-20%.
inline constexpr double kBallisticPlateauTolerance = 0.25;

/// Run length for Family-Vicsek runs: 0.15 gamma L^2 (about 15 t*) for gamma > 0, 2L at gamma = 0.
double fv_t_final(int L, double gamma);

/// Standard configs used by the recipes.
SystemConfig dephasing_config(Statistics statistics, InitialState state, int L, double gamma);
SystemConfig inout_config(Statistics statistics, int L, double gamma_in, double gamma_out,
                          double t_final = 60.0);

/// File stem derived from the physics of a run, so recipes share outputs.
std::string run_name(const SystemConfig& config, Engine engine);

/// Runs one spec in-process.
ObservableSeries run_series(const RunSpec& spec, const EvolveOptions& options = {});

/// Reuses `<dir>/<name>.csv` when its metadata matches the spec exactly; otherwise
/// runs the spec and writes the file.
ObservableSeries run_cached(const RunSpec& spec, const std::filesystem::path& dir,
                            const EvolveOptions& options = {});

/// Diagnostics CSV: t followed by the absolute values of the tracked entries.
void run_diagnostics_cached(const DiagnosticsSpec& spec, const std::filesystem::path& dir,
                            const EvolveOptions& options = {});

struct DiagnosticsTable {
  nlohmann::json metadata;
  std::vector<std::string> columns;  // without "t"
  std::vector<double> t;
  std::vector<std::vector<double>> values;  // one row per time
};
DiagnosticsTable read_diagnostics_csv(const std::filesystem::path& path);

/// Runs every simulation of the recipe into `dir`, `jobs` at a time.
void run_recipe(const Recipe& recipe, const std::filesystem::path& dir,
                const EvolveOptions& options = {}, int jobs = 1);

/// Fit report of a recipe from the CSVs in `dir`; ConfigError names missing inputs.
/// tableI reports the families whose runs are present and lists the others as missing.
nlohmann::json analyze_recipe(const Recipe& recipe, const std::filesystem::path& dir,
                              std::uint64_t seed = kDefaultSeed);

/// Collapsed curves of the recipe's Family-Vicsek families at the fitted exponents.
struct CollapseOutput {
  std::string family;
  CollapseResult fitted;
  CollapseResult baseline;
  double alpha = 0.0;
  double z = 0.0;
};
std::vector<CollapseOutput> collapse_recipe(const Recipe& recipe,
                                            const std::filesystem::path& dir,
                                            std::uint64_t seed = kDefaultSeed);

/// Writes a JSON document with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace qrough
