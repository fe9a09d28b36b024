#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qrough/config_io.hpp"
#include "qrough/errors.hpp"
#include "qrough/ew.hpp"
#include "qrough/exact_dynamics.hpp"
#include "qrough/log.hpp"
#include "qrough/observables.hpp"
#include "qrough/oracle.hpp"
#include "qrough/recipes.hpp"
#include "qrough/scaling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qrough;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitResource = 4;

struct Manifest {
  std::string config;
  std::string out;
  std::string recipe;
  std::uint64_t seed = kDefaultSeed;
  int jobs = 1;
  std::size_t mem_cap = std::size_t{2} << 30;
  bool full_scale = false;
};

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

/// Splits the CLI-only keys off a config object; the rest must be a SystemConfig.
json take(json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) return nullptr;
  json v = j.at(key);
  j.erase(key);
  return v;
}

EvolveOptions evolve_options(const Manifest& m) {
  EvolveOptions o;
  o.mem_cap_bytes = m.mem_cap;
  return o;
}

Recipe recipe_of(const Manifest& m) { return make_recipe(m.recipe, m.full_scale); }

void need_one_source(const Manifest& m) {
  if (m.config.empty() == m.recipe.empty())
    throw ConfigError("give exactly one of --config and --recipe");
}

void report_written(const fs::path& p) { std::cout << p.string() << '\n'; }

int cmd_simulate(const Manifest& m) {
  need_one_source(m);
  const fs::path out(m.out);
  if (!m.recipe.empty()) {
    const Recipe r = recipe_of(m);
    run_recipe(r, out, evolve_options(m), m.jobs);
    for (const auto& run : r.runs) report_written(out / (run.name + ".csv"));
    for (const auto& d : r.diagnostics) report_written(out / (d.name + ".csv"));
    return kExitOk;
  }
  json j = load_json(m.config);
  const json observables = take(j, "observables");
  const json engine_name = take(j, "engine");
  RunSpec spec;
  spec.config = config_from_json(j);
  if (!observables.is_null()) {
    spec.request = {false, false, false, false};
    for (const auto& o : observables) {
      const auto name = o.get<std::string>();
      if (name == "w") spec.request.w = true;
      else if (name == "n_tot") spec.request.n_tot = true;
      else if (name == "n_tot_sq") spec.request.n_tot_sq = true;
      else if (name == "p_tra") spec.request.p_tra = true;
      else throw ConfigError("unknown observable '" + name + "' (w, n_tot, n_tot_sq, p_tra)");
    }
  }
  const std::string engine = engine_name.is_null() ? "exact" : engine_name.get<std::string>();
  if (engine == "exact") {
    spec.engine = spec.request.needs_four_point() ? Engine::Exact : Engine::DOnly;
  } else if (engine == "effective") {
    spec.engine = Engine::Effective;
  } else if (engine == "effective_adjoint") {
    spec.engine = Engine::EffectiveAdjoint;
  } else {
    throw ConfigError("unknown engine '" + engine + "' (exact, effective, effective_adjoint)");
  }
  spec.name = run_name(spec.config, spec.engine);
  const ObservableSeries s = run_series(spec, evolve_options(m));
  const fs::path path = out / (spec.name + ".csv");
  write_series_csv(path, s);
  report_written(path);
  return kExitOk;
}

struct AnalysisInputs {
  std::vector<std::string> files;
  std::vector<ObservableSeries> series;
  std::vector<double> L;
  double gamma = 0.0;
  int L_ref = 32;
  double fraction = 0.9;
  double plateau_tolerance = kPlateauTolerance;
  std::optional<double> alpha;
  std::optional<double> z;
};

/// {"inputs": [csv, ...], "gamma": g, "L_ref": 32, "saturation_fraction": 0.9,
///  "plateau_tolerance": 0.05, "alpha": a, "z": z}; inputs are relative to the file.
AnalysisInputs load_analysis(const fs::path& path) {
  const json j = load_json(path);
  require_keys(j,
               {"inputs", "gamma", "L_ref", "saturation_fraction", "plateau_tolerance", "alpha",
                "z"},
               "analysis config");
  AnalysisInputs a;
  a.files = value_or<std::vector<std::string>>(j, "inputs", {});
  if (a.files.empty()) throw ConfigError("analysis config needs a non-empty 'inputs' list");
  a.gamma = value_or(j, "gamma", 0.0);
  a.L_ref = value_or(j, "L_ref", 32);
  a.fraction = value_or(j, "saturation_fraction", 0.9);
  a.plateau_tolerance = value_or(j, "plateau_tolerance", kPlateauTolerance);
  if (j.contains("alpha")) a.alpha = value_or(j, "alpha", 0.0);
  if (j.contains("z")) a.z = value_or(j, "z", 0.0);
  for (const auto& f : a.files) {
    const fs::path p = fs::path(f).is_absolute() ? fs::path(f) : path.parent_path() / f;
    if (!fs::exists(p)) throw ConfigError("missing input " + p.string());
    ObservableSeries s = read_series_csv(p);
    if (!s.metadata.contains("config")) throw ConfigError(p.string() + " has no config metadata");
    a.L.push_back(s.metadata.at("config").at("L").get<double>());
    a.series.push_back(std::move(s));
  }
  return a;
}

int cmd_analyze(const Manifest& m) {
  need_one_source(m);
  const fs::path out(m.out);
  if (!m.recipe.empty()) {
    const json rep = analyze_recipe(recipe_of(m), out, m.seed);
    const fs::path path = out / (m.recipe + "_report.json");
    write_json(path, rep);
    report_written(path);
    return kExitOk;
  }
  const AnalysisInputs a = load_analysis(m.config);
  const FvFit fit = fit_family(a.series, a.L, a.gamma, a.L_ref, m.seed, a.fraction,
                               a.plateau_tolerance);
  json rep = fit.to_json();
  rep["inputs"] = a.files;
  rep["gamma"] = a.gamma;
  rep["seed"] = m.seed;
  const fs::path path = out / "fit_report.json";
  write_json(path, rep);
  report_written(path);
  return kExitOk;
}

void write_collapsed(std::ostream& os, const std::string& family, const CollapseResult& r,
                     const std::string& kind) {
  for (const auto& c : r.curves)
    for (std::size_t i = 0; i < c.t.size(); ++i)
      os << family << ',' << kind << ',' << format_double(c.L) << ',' << format_double(c.t[i])
         << ',' << format_double(c.w[i]) << '\n';
}

int cmd_collapse(const Manifest& m) {
  need_one_source(m);
  const fs::path out(m.out);
  std::vector<CollapseOutput> results;
  json meta;
  std::string stem;
  if (!m.recipe.empty()) {
    results = collapse_recipe(recipe_of(m), out, m.seed);
    meta = {{"recipe", m.recipe}, {"full_scale", m.full_scale}, {"seed", m.seed}};
    stem = m.recipe + "_collapse";
  } else {
    const AnalysisInputs a = load_analysis(m.config);
    std::vector<Curve> curves;
    for (std::size_t i = 0; i < a.series.size(); ++i)
      curves.push_back(curve_from_series(a.series[i], a.L[i], scaling_regime_start(a.gamma)));
    CollapseOutput c;
    c.family = "inputs";
    if (a.alpha && a.z) {
      c.alpha = *a.alpha;
      c.z = *a.z;
    } else {
      const FvFit fit = fit_family(a.series, a.L, a.gamma, a.L_ref, m.seed, a.fraction,
                                   a.plateau_tolerance);
      c.alpha = a.alpha.value_or(fit.alpha);
      c.z = a.z.value_or(fit.z);
    }
    c.fitted = collapse(curves, c.alpha, c.z, a.L_ref);
    c.baseline = collapse(curves, 0.0, 0.0, a.L_ref);
    results.push_back(std::move(c));
    meta = {{"inputs", a.files}, {"L_ref", a.L_ref}, {"seed", m.seed}};
    stem = "collapse";
  }
  json rep = meta;
  rep["families"] = json::array();
  const fs::path csv = out / (stem + ".csv");
  fs::create_directories(out);
  std::ofstream os(csv, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + csv.string());
  os << "# qrough collapsed curves\n# metadata: " << meta.dump() << '\n'
     << "family,scaling,L,t_scaled,w_scaled\n";
  for (const auto& c : results) {
    write_collapsed(os, c.family, c.fitted, "fitted");
    write_collapsed(os, c.family, c.baseline, "baseline");
    rep["families"].push_back({{"family", c.family},
                               {"alpha", c.alpha},
                               {"z", c.z},
                               {"collapse_cost", c.fitted.cost},
                               {"baseline_cost", c.baseline.cost}});
  }
  os.close();
  report_written(csv);
  const fs::path js = out / (stem + ".json");
  write_json(js, rep);
  report_written(js);
  return kExitOk;
}

int cmd_ew(const Manifest& m) {
  if (!m.recipe.empty()) throw ConfigError("ew-reference takes --config, not --recipe");
  EwParams p;
  double t_final = 2000.0;
  SampleSpec spec{200, 100, 0.01};
  std::vector<double> times;
  if (!m.config.empty()) {
    const json j = load_json(m.config);
    require_keys(j, {"L_prime", "tol", "t_final", "sample_times", "sample_spec"},
                 "ew-reference config");
    p.L_prime = value_or(j, "L_prime", p.L_prime);
    p.tol = value_or(j, "tol", p.tol);
    t_final = value_or(j, "t_final", t_final);
    if (j.contains("sample_times") && j.contains("sample_spec"))
      throw ConfigError("give either 'sample_times' or 'sample_spec', not both");
    if (j.contains("sample_times")) times = value_or<std::vector<double>>(j, "sample_times", {});
    if (j.contains("sample_spec")) spec = sample_spec_from_json(j.at("sample_spec"));
  }
  validate(p);
  if (times.empty()) {
    if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
    times = expand_sample_spec(spec, t_final);
  }
  for (double t : times)
    if (!(t >= 0.0)) throw ConfigError("sample times must be nonnegative");
  const auto w = ew_curve(p, times);
  const json meta{{"engine", "ew"}, {"L_prime", p.L_prime}, {"tol", p.tol}};
  const fs::path path = fs::path(m.out) / "ew_reference.csv";
  fs::create_directories(m.out);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << "# qrough EW reference\n# metadata: " << meta.dump() << "\nt,w_ew\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    os << format_double(times[i]) << ',' << format_double(w[i]) << '\n';
  os.close();
  report_written(path);
  return kExitOk;
}

/// {"statistics", "dissipator", "occupations" | ("L", "initial_state"), "n_max", "t_final",
///  "dt", "tolerance", "corrupt_roughness_sign"}.
oracle::OracleCheckSpec oracle_spec(const json& j) {
  require_keys(j,
               {"statistics", "dissipator", "occupations", "L", "initial_state", "n_max",
                "t_final", "dt", "tolerance", "corrupt_roughness_sign"},
               "oracle-check config");
  oracle::OracleCheckSpec s;
  if (!j.contains("statistics") || !j.contains("dissipator"))
    throw ConfigError("oracle-check config needs 'statistics' and 'dissipator'");
  s.kind.statistics = parse_statistics(j.at("statistics").get<std::string>());
  s.kind.dissipator = dissipator_from_json(j.at("dissipator"));
  if (j.contains("occupations")) {
    s.occupations = value_or<std::vector<int>>(j, "occupations", {});
  } else if (j.contains("L") && j.contains("initial_state")) {
    s.occupations = occupation_pattern(
        parse_initial_state(j.at("initial_state").get<std::string>()), value_or(j, "L", 0));
  } else {
    throw ConfigError("oracle-check config needs 'occupations' or 'L' with 'initial_state'");
  }
  if (s.occupations.empty()) throw ConfigError("empty occupation list");
  s.n_max = value_or(j, "n_max", s.n_max);
  s.t_final = value_or(j, "t_final", s.t_final);
  if (j.contains("dt")) s.dt = value_or(j, "dt", 0.0);
  s.tolerance = value_or(j, "tolerance", s.tolerance);
  s.corrupt_roughness_sign = value_or(j, "corrupt_roughness_sign", false);
  return s;
}

int cmd_oracle(const Manifest& m) {
  if (m.config.empty()) throw ConfigError("oracle-check needs --config");
  const json j = load_json(m.config);
  const auto spec = oracle_spec(j);
  const auto rep = oracle::oracle_check(spec);
  json out = rep.to_json();
  out["config"] = j;
  const fs::path path = fs::path(m.out) / "oracle_report.json";
  write_json(path, out);
  report_written(path);
  std::cout << (rep.pass ? "PASS" : "FAIL") << " max_dev_D=" << rep.max_dev_D
            << " max_dev_F=" << rep.max_dev_F << " max_dev_w2=" << rep.max_dev_w2 << '\n';
  return rep.pass ? kExitOk : kExitNumerical;
}

int cmd_diagnostics(const Manifest& m) {
  need_one_source(m);
  const fs::path out(m.out);
  std::vector<DiagnosticsSpec> specs;
  if (!m.recipe.empty()) {
    specs = recipe_of(m).diagnostics;
    if (specs.empty()) throw ConfigError("recipe '" + m.recipe + "' has no diagnostics run");
  } else {
    json j = load_json(m.config);
    const json mj = take(j, "m");
    const json nj = take(j, "n");
    DiagnosticsSpec d;
    d.config = config_from_json(j);
    d.m = mj.is_null() ? d.config.L / 2 : mj.get<int>();
    d.n = nj.is_null() ? d.config.L / 2 + d.config.L / 4 : nj.get<int>();
    d.name = "diagnostics_" + run_name(d.config, Engine::Exact) + "_m" + std::to_string(d.m) +
             "_n" + std::to_string(d.n);
    specs.push_back(d);
  }
  for (const auto& d : specs) {
    run_diagnostics_cached(d, out, evolve_options(m));
    report_written(out / (d.name + ".csv"));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surface-roughness dynamics of free lattice particles under Lindblad dissipation"};
  app.require_subcommand(1);
  Manifest m;
  std::string recipe_help = "recipe (";
  for (const auto& n : recipe_names()) recipe_help += n + (n == "tableI" ? ")" : ", ");

  const auto common = [&](CLI::App* sub, bool recipe) {
    sub->add_option("--config", m.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", m.out, "output directory")->required();
    sub->add_option("--seed", m.seed, "bootstrap seed");
    if (recipe) {
      sub->add_option("--recipe", m.recipe, recipe_help);
      sub->add_flag("--full-scale", m.full_scale, "use the larger system sizes");
    }
    sub->add_option("--jobs", m.jobs, "independent runs executed concurrently")
        ->check(CLI::PositiveNumber);
    sub->add_option("--mem-cap", m.mem_cap, "byte cap for the integrator state");
  };
  auto* sim = app.add_subcommand("simulate", "run a config or every run of a recipe");
  common(sim, true);
  auto* ana = app.add_subcommand("analyze", "fit exponents and write a JSON report");
  common(ana, true);
  auto* col = app.add_subcommand("collapse", "Family-Vicsek collapse of a family of runs");
  common(col, true);
  auto* ew = app.add_subcommand("ew-reference", "Edwards-Wilkinson reference curve");
  common(ew, false);
  auto* orc = app.add_subcommand("oracle-check", "compare against the full Lindblad oracle");
  common(orc, false);
  auto* dia = app.add_subcommand("diagnostics", "track D, G, F and I entries");
  common(dia, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(m);
    if (ana->parsed()) return cmd_analyze(m);
    if (col->parsed()) return cmd_collapse(m);
    if (ew->parsed()) return cmd_ew(m);
    if (orc->parsed()) return cmd_oracle(m);
    if (dia->parsed()) return cmd_diagnostics(m);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ResourceError& e) {
    std::cerr << "resource guard: " << e.what() << '\n';
    return kExitResource;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
