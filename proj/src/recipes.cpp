#include "qrough/recipes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "qrough/config_io.hpp"
#include "qrough/effective.hpp"
#include "qrough/errors.hpp"
#include "qrough/ew.hpp"
#include "qrough/log.hpp"

namespace qrough {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Engine engine) {
  switch (engine) {
    case Engine::Exact:
      return "exact";
    case Engine::DOnly:
      return "exact_d_only";
    case Engine::Effective:
      return "effective";
    case Engine::EffectiveAdjoint:
      return "effective_adjoint";
  }
  return "unknown";
}

double fv_t_final(int L, double gamma) {
  if (gamma > 0.0) return 0.15 * gamma * L * L;
  return 2.0 * L;
}

namespace {

/// Explicit-Laplacian stability: (2 / gamma) * 8 * dt stays at 1.6.
double effective_dt(double gamma) { return std::min(kDephasingDt, 0.1 * gamma); }

SystemConfig with_grid(SystemConfig c, double t_final, double dt) {
  c.t_final = t_final;
  c.dt = dt;
  c.sample_times = expand_sample_spec(kRecipeSamples, t_final);
  return c;
}

double gamma_of(const SystemConfig& c) {
  if (const auto* d = std::get_if<Dephasing>(&c.dissipator)) return d->gamma;
  return 0.0;
}

std::string state_tag(InitialState s) {
  switch (s) {
    case InitialState::Staggered:
      return "SS";
    case InitialState::DomainWall:
      return "DWS";
    case InitialState::Uniform:
      return "US";
  }
  return "?";
}

}  // namespace

SystemConfig dephasing_config(Statistics statistics, InitialState state, int L, double gamma) {
  SystemConfig c;
  c.L = L;
  c.statistics = statistics;
  c.initial_state = state;
  c.dissipator = Dephasing{gamma};
  return with_grid(c, fv_t_final(L, gamma), gamma > 0.0 ? kDephasingDt : kBallisticDt);
}

SystemConfig inout_config(Statistics statistics, int L, double gamma_in, double gamma_out,
                          double t_final) {
  SystemConfig c;
  c.L = L;
  c.statistics = statistics;
  c.dissipator = InOut{gamma_in, gamma_out};
  return with_grid(c, t_final, kInOutDt);
}

std::string run_name(const SystemConfig& config, Engine engine) {
  std::ostringstream s;
  s << to_string(config.statistics) << '_' << state_tag(config.initial_state) << '_';
  if (const auto* d = std::get_if<Dephasing>(&config.dissipator)) {
    s << "gamma" << format_double(d->gamma);
  } else {
    const auto& io = std::get<InOut>(config.dissipator);
    s << "in" << format_double(io.gamma_in) << "_out" << format_double(io.gamma_out);
  }
  s << "_L" << config.L;
  switch (engine) {
    case Engine::Exact:
      break;
    case Engine::DOnly:
      s << "_donly";
      break;
    case Engine::Effective:
      s << "_eff";
      break;
    case Engine::EffectiveAdjoint:
      s << "_effadj";
      break;
  }
  return s.str();
}

namespace {

RunSpec spec_of(SystemConfig config, Engine engine = Engine::Exact,
                ObservableRequest request = {}) {
  RunSpec r;
  r.name = run_name(config, engine);
  r.config = std::move(config);
  r.engine = engine;
  r.request = request;
  return r;
}

std::vector<int> fv_sizes(bool full) {
  return full ? std::vector<int>{32, 64, 128} : std::vector<int>{16, 32, 64};
}
int single_size(bool full) { return full ? 128 : 64; }
int transport_size(bool full) { return full ? 4096 : 512; }
constexpr int kLRef = 32;
constexpr double kTransportDt = 0.1;
constexpr double kCrossoverExponent = 0.47;
constexpr double kEffectiveCheckStart = 4.0;
constexpr double kLargeEffectiveSize = 512;

/// One Family-Vicsek family: same physics at several sizes.
struct Family {
  std::string label;
  double gamma = 0.0;
  double plateau_tolerance = kPlateauTolerance;
  std::vector<RunSpec> runs;
};

Family dephasing_family(Statistics st, InitialState state, double gamma, bool full) {
  Family f;
  f.label = to_string(st) + "_" + state_tag(state) + "_gamma" + format_double(gamma);
  f.gamma = gamma;
  if (gamma == 0.0) f.plateau_tolerance = kBallisticPlateauTolerance;
  for (int L : fv_sizes(full)) f.runs.push_back(spec_of(dephasing_config(st, state, L, gamma)));
  return f;
}

Family inout_family(Statistics st, double gin, double gout, bool full) {
  Family f;
  f.label = to_string(st) + "_in" + format_double(gin) + "_out" + format_double(gout);
  for (int L : fv_sizes(full)) f.runs.push_back(spec_of(inout_config(st, L, gin, gout)));
  return f;
}

std::vector<Family> table_families(bool full) {
  return {dephasing_family(Statistics::Fermion, InitialState::Staggered, 1.0, full),
          dephasing_family(Statistics::Fermion, InitialState::DomainWall, 1.0, full),
          dephasing_family(Statistics::Boson, InitialState::Staggered, 2.0, full),
          dephasing_family(Statistics::Boson, InitialState::DomainWall, 2.0, full),
          dephasing_family(Statistics::Boson, InitialState::Uniform, 2.0, full)};
}

std::vector<Family> fv_families(const std::string& name, bool full) {
  if (name == "fig2a")
    return {dephasing_family(Statistics::Fermion, InitialState::Staggered, 1.0, full)};
  if (name == "fig2b")
    return {dephasing_family(Statistics::Boson, InitialState::Staggered, 2.0, full)};
  if (name == "fig2c")
    return {dephasing_family(Statistics::Fermion, InitialState::Staggered, 0.0, full),
            dephasing_family(Statistics::Boson, InitialState::Staggered, 0.0, full)};
  if (name == "tableI") return table_families(full);
  return {};
}

std::vector<Family> inout_families(const std::string& name, bool full) {
  if (name == "fig4")
    return {inout_family(Statistics::Fermion, 0.2, 0.2, full),
            inout_family(Statistics::Boson, 0.2, 0.6, full)};
  if (name == "figS6")
    return {inout_family(Statistics::Fermion, 0.0, 0.2, full),
            inout_family(Statistics::Boson, 0.0, 0.2, full)};
  return {};
}

const std::vector<double>& crossover_gammas() {
  static const std::vector<double> g{1.0, 0.5, 0.25};
  return g;
}
const std::vector<double>& transport_gammas() {
  static const std::vector<double> g{1.0, 0.25, 0.0625, 0.015625};
  return g;
}
const std::vector<double>& effective_gammas() {
  static const std::vector<double> g{0.5, 1.0, 2.0};
  return g;
}

RunSpec crossover_run(double gamma, bool full) {
  return spec_of(
      dephasing_config(Statistics::Fermion, InitialState::Staggered, single_size(full), gamma));
}

RunSpec transport_run(double gamma, bool full) {
  const int L = transport_size(full);
  SystemConfig c;
  c.L = L;
  c.statistics = Statistics::Fermion;
  c.initial_state = InitialState::DomainWall;
  c.dissipator = Dephasing{gamma};
  return spec_of(with_grid(c, 0.25 * L, kTransportDt), Engine::DOnly, {false, true, false, true});
}

/// Light-cone time L / 4: the fastest excitations (group velocity 2) reach the edges.
double transport_edge_time(int L) { return 0.25 * L; }

RunSpec effective_exact_run(Statistics st, double gamma, bool full) {
  return spec_of(dephasing_config(st, InitialState::Staggered, single_size(full), gamma));
}

RunSpec effective_run(Statistics st, double gamma, bool full) {
  SystemConfig c = dephasing_config(st, InitialState::Staggered, single_size(full), gamma);
  c.dt = effective_dt(gamma);
  return spec_of(c, Engine::Effective);
}

/// Large-L effective run for the scaling-function comparison; twice the usual length
/// so that the (d1, d2) rescaling covers the whole reference window.
RunSpec large_effective_run(bool full) {
  const int L = static_cast<int>(kLargeEffectiveSize) * (full ? 2 : 1);
  SystemConfig c;
  c.L = L;
  c.statistics = Statistics::Fermion;
  c.dissipator = Dephasing{1.0};
  return spec_of(with_grid(c, 2.0 * fv_t_final(L, 1.0), effective_dt(1.0)),
                 Engine::EffectiveAdjoint);
}

DiagnosticsSpec diagnostics_spec(bool full) {
  const int L = single_size(full);
  DiagnosticsSpec d;
  const double gamma = 0.25;
  SystemConfig c;
  c.L = L;
  c.statistics = Statistics::Fermion;
  c.dissipator = Dephasing{gamma};
  d.config = with_grid(c, 10.0 / gamma, kDephasingDt);
  d.m = L / 2;
  d.n = L / 2 + (full ? 50 : 20);
  d.name = "diagnostics_" + run_name(d.config, Engine::Exact) + "_m" + std::to_string(d.m) +
           "_n" + std::to_string(d.n);
  return d;
}

void append_unique(std::vector<RunSpec>& runs, const RunSpec& r) {
  for (const auto& x : runs)
    if (x.name == r.name) return;
  runs.push_back(r);
}

}  // namespace

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names{"fig2a", "fig2b", "fig2c", "fig3a",
                                              "fig3b", "fig4",  "figS1", "figS2",
                                              "figS5", "figS6", "tableI"};
  return names;
}

Recipe make_recipe(const std::string& name, bool full_scale) {
  const auto& names = recipe_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string all;
    for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
    throw ConfigError("unknown recipe '" + name + "' (known: " + all + ")");
  }
  Recipe r;
  r.name = name;
  r.full_scale = full_scale;
  for (const auto& f : fv_families(name, full_scale))
    for (const auto& run : f.runs) append_unique(r.runs, run);
  for (const auto& f : inout_families(name, full_scale))
    for (const auto& run : f.runs) append_unique(r.runs, run);
  if (name == "fig3a")
    for (double g : crossover_gammas()) append_unique(r.runs, crossover_run(g, full_scale));
  if (name == "fig3b")
    for (double g : transport_gammas()) append_unique(r.runs, transport_run(g, full_scale));
  if (name == "figS1" || name == "figS2") {
    const Statistics st = name == "figS1" ? Statistics::Fermion : Statistics::Boson;
    for (double g : effective_gammas()) {
      append_unique(r.runs, effective_exact_run(st, g, full_scale));
      append_unique(r.runs, effective_run(st, g, full_scale));
    }
    if (name == "figS1") append_unique(r.runs, large_effective_run(full_scale));
  }
  if (name == "figS5") r.diagnostics.push_back(diagnostics_spec(full_scale));
  return r;
}

ObservableSeries run_series(const RunSpec& spec, const EvolveOptions& options) {
  switch (spec.engine) {
    case Engine::Exact:
      return evolve(spec.config, spec.request, options);
    case Engine::DOnly:
      return evolve_D_only(spec.config, spec.request, options);
    case Engine::Effective:
      return evolve_effective(spec.config);
    case Engine::EffectiveAdjoint:
      return evolve_effective_adjoint(spec.config);
  }
  throw ConfigError("unknown engine");
}

namespace {

bool columns_present(const ObservableSeries& s, const RunSpec& spec) {
  const std::size_t n = s.times.size();
  if (n != spec.config.sample_times.size()) return false;
  if (spec.engine == Engine::Effective || spec.engine == Engine::EffectiveAdjoint)
    return s.w.size() == n;
  const auto& q = spec.request;
  return (!q.w || s.w.size() == n) && (!q.n_tot || s.n_tot.size() == n) &&
         (!q.n_tot_sq || s.n_tot_sq.size() == n) && (!q.p_tra || s.p_tra.size() == n);
}

fs::path csv_path(const fs::path& dir, const std::string& name) { return dir / (name + ".csv"); }

}  // namespace

ObservableSeries run_cached(const RunSpec& spec, const fs::path& dir,
                            const EvolveOptions& options) {
  const fs::path path = csv_path(dir, spec.name);
  const json expected = run_metadata(to_string(spec.engine), spec.config);
  if (fs::exists(path)) {
    try {
      ObservableSeries s = read_series_csv(path);
      if (s.metadata == expected && columns_present(s, spec)) {
        log::debug("reusing " + path.string());
        return s;
      }
    } catch (const ConfigError&) {
    }
    log::info("stale output " + path.string() + "; recomputing");
  }
  log::info("running " + spec.name);
  ObservableSeries s = run_series(spec, options);
  write_series_csv(path, s);
  return read_series_csv(path);
}

namespace {

std::string site_label(std::initializer_list<int> sites) {
  std::string s;
  for (int v : sites) s += "_" + std::to_string(v);
  return s;
}

json diagnostics_metadata(const DiagnosticsSpec& spec) {
  json j = run_metadata("diagnostics", spec.config);
  j["m"] = spec.m;
  j["n"] = spec.n;
  return j;
}

}  // namespace

void run_diagnostics_cached(const DiagnosticsSpec& spec, const fs::path& dir,
                            const EvolveOptions& options) {
  const int L = spec.config.L;
  if (spec.m < 1 || spec.m + 2 > L || spec.n < 1 || spec.n > L)
    throw ConfigError("diagnostic sites need 1 <= m, m + 2 <= L and 1 <= n <= L");
  const fs::path path = csv_path(dir, spec.name);
  const json meta = diagnostics_metadata(spec);
  if (fs::exists(path)) {
    try {
      if (read_diagnostics_csv(path).metadata == meta) return;
    } catch (const ConfigError&) {
    }
  }
  log::info("running " + spec.name);
  const int m = spec.m - 1;
  const int n = spec.n - 1;
  DiagnosticsRequest req;
  for (int k = 0; k < 3; ++k) req.tracked.push_back({m + k, n, m, n});
  const auto samples = evolve_diagnostics(spec.config, req, options);

  const int M = spec.m;
  const int N = spec.n;
  std::vector<std::string> cols{"absD" + site_label({M, M}),
                                "absD" + site_label({M + 1, M}),
                                "absD" + site_label({M + 2, M}),
                                "absG" + site_label({M + 1, M}),
                                "absG" + site_label({M + 2, M}),
                                "absF" + site_label({M, N, M, N}),
                                "absF" + site_label({M + 1, N, M, N}),
                                "absF" + site_label({M + 2, N, M, N}),
                                "absI" + site_label({M + 1, N, M, N}),
                                "absI" + site_label({M + 2, N, M, N})};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# qrough diagnostics\n# metadata: " << meta.dump() << "\nt";
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  const auto at = [L](const std::vector<cplx>& a, int r, int c) {
    return std::abs(a[static_cast<std::size_t>(r) * L + c]);
  };
  for (const auto& s : samples) {
    const double row[] = {at(s.D, m, m),      at(s.D, m + 1, m),  at(s.D, m + 2, m),
                          at(s.G, m + 1, m),  at(s.G, m + 2, m),  std::abs(s.F[0]),
                          std::abs(s.F[1]),   std::abs(s.F[2]),   std::abs(s.I[1]),
                          std::abs(s.I[2])};
    out << format_double(s.t);
    for (double v : row) out << ',' << format_double(v);
    out << '\n';
  }
}

DiagnosticsTable read_diagnostics_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  DiagnosticsTable table;
  std::string line;
  bool header = false;
  const std::string key = "# metadata: ";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind(key, 0) == 0) {
        try {
          table.metadata = json::parse(line.substr(key.size()));
        } catch (const json::exception& e) {
          throw ConfigError(std::string("malformed metadata: ") + e.what());
        }
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      if (cells.empty() || cells[0] != "t") throw ConfigError("unexpected header: " + line);
      table.columns.assign(cells.begin() + 1, cells.end());
      header = true;
      continue;
    }
    if (cells.size() != table.columns.size() + 1)
      throw ConfigError("row with wrong field count: " + line);
    try {
      table.t.push_back(std::stod(cells[0]));
      std::vector<double> row;
      for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(std::stod(cells[i]));
      table.values.push_back(std::move(row));
    } catch (const std::exception&) {
      throw ConfigError("malformed number in " + path.string());
    }
  }
  if (!header) throw ConfigError(path.string() + " has no header row");
  return table;
}

void run_recipe(const Recipe& recipe, const fs::path& dir, const EvolveOptions& options,
                int jobs) {
  if (jobs < 1) throw ConfigError("--jobs must be at least 1");
  fs::create_directories(dir);
  std::vector<std::function<void()>> tasks;
  for (const auto& r : recipe.runs) tasks.push_back([&, r] { run_cached(r, dir, options); });
  for (const auto& d : recipe.diagnostics)
    tasks.push_back([&, d] { run_diagnostics_cached(d, dir, options); });

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        tasks[i]();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::min<int>(jobs, static_cast<int>(tasks.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

ObservableSeries load_run(const RunSpec& spec, const fs::path& dir) {
  const fs::path path = csv_path(dir, spec.name);
  if (!fs::exists(path))
    throw ConfigError("missing input " + path.string() + "; run `simulate` for this recipe first");
  ObservableSeries s = read_series_csv(path);
  if (s.metadata != run_metadata(to_string(spec.engine), spec.config))
    throw ConfigError(path.string() + " was produced by a different config; rerun `simulate`");
  return s;
}

bool run_available(const RunSpec& spec, const fs::path& dir) {
  try {
    load_run(spec, dir);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

json power_fit_json(const PowerFit& f, Window w) {
  return {{"exponent", f.exponent}, {"err", f.err}, {"points", f.points},
          {"window", {w.t_min, w.t_max}}};
}

/// Power-law fit of a column over [t_min, t_max]; null with fewer than 10 positive samples.
json window_fit(std::span<const double> t, std::span<const double> y, Window w,
                std::uint64_t seed) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= w.t_min && t[i] <= w.t_max && t[i] > 0.0 && y[i] > 0.0) {
      xs.push_back(t[i]);
      ys.push_back(y[i]);
    }
  if (xs.size() < 10) return nullptr;
  return power_fit_json(fit_power_law(xs, ys, seed, 10), w);
}

std::vector<std::string> names_of(const std::vector<RunSpec>& runs) {
  std::vector<std::string> out;
  for (const auto& r : runs) out.push_back(r.name + ".csv");
  return out;
}

struct FamilyData {
  std::vector<ObservableSeries> series;
  std::vector<double> L;
};

FamilyData load_family(const Family& f, const fs::path& dir) {
  FamilyData d;
  for (const auto& r : f.runs) {
    d.series.push_back(load_run(r, dir));
    d.L.push_back(r.config.L);
  }
  return d;
}

json family_report(const Family& f, const fs::path& dir, std::uint64_t seed) {
  const FamilyData d = load_family(f, dir);
  const FvFit fit = fit_family(d.series, d.L, f.gamma, kLRef, seed, 0.9, f.plateau_tolerance);
  json j = fit.to_json();
  j["label"] = f.label;
  j["gamma"] = f.gamma;
  j["inputs"] = names_of(f.runs);
  return j;
}

json saturation_report(const Family& f, const fs::path& dir) {
  const FamilyData d = load_family(f, dir);
  json rows = json::array();
  double lo = INFINITY;
  double hi = 0.0;
  for (std::size_t i = 0; i < d.series.size(); ++i) {
    const PlateauCheck p = plateau_check(d.series[i]);
    const double ts = saturation_time(d.series[i]);
    lo = std::min(lo, ts);
    hi = std::max(hi, ts);
    rows.push_back({{"L", d.L[i]},
                    {"w_sat", p.w_sat},
                    {"plateau_relative_change", p.relative_change},
                    {"t_star", ts}});
  }
  return {{"label", f.label},
          {"sizes", rows},
          {"t_star_spread", hi / lo - 1.0},
          {"saturation_fraction", 0.9},
          {"inputs", names_of(f.runs)}};
}

json outflow_report(const Family& f, const fs::path& dir) {
  const FamilyData d = load_family(f, dir);
  json rows = json::array();
  for (std::size_t i = 0; i < d.series.size(); ++i) {
    const auto& s = d.series[i];
    const auto it = std::max_element(s.w.begin(), s.w.end());
    const std::size_t k = static_cast<std::size_t>(it - s.w.begin());
    rows.push_back({{"L", d.L[i]},
                    {"w_max", *it},
                    {"t_max", s.times[k]},
                    {"w_final", s.w.back()},
                    {"t_final", s.times.back()},
                    {"final_over_max", *it > 0.0 ? s.w.back() / *it : 0.0}});
  }
  return {{"label", f.label}, {"sizes", rows}, {"inputs", names_of(f.runs)}};
}

/// Curve restricted to t in [t_lo, t_hi], then rescaled t -> t * st, w -> w * sw.
Curve scaled_window(const ObservableSeries& s, double L, double t_lo, double t_hi, double st,
                    double sw) {
  Curve c;
  c.L = L;
  const Curve all = curve_from_series(s, L);
  for (std::size_t i = 0; i < all.t.size(); ++i)
    if (all.t[i] >= t_lo && all.t[i] <= t_hi) {
      c.t.push_back(all.t[i] * st);
      c.w.push_back(all.w[i] * sw);
    }
  return c;
}

json crossover_report(bool full, const fs::path& dir, std::uint64_t seed) {
  json rows = json::array();
  std::vector<Curve> curves;
  std::vector<std::string> inputs;
  for (double g : crossover_gammas()) {
    const RunSpec r = crossover_run(g, full);
    inputs.push_back(r.name + ".csv");
    const ObservableSeries s = load_run(r, dir);
    const double ts = saturation_time(s);
    const Window w = default_beta_window(g, ts);
    const PowerFit b = fit_beta(s, w, seed);
    rows.push_back({{"gamma", g}, {"t_star", ts}, {"beta", power_fit_json(b, w)}});
    // Late growth window t in [1/gamma, t*/2], shown as (t gamma, w gamma^0.47).
    curves.push_back(scaled_window(s, r.config.L, 1.0 / g, 0.5 * ts, g,
                                   std::pow(g, kCrossoverExponent)));
  }
  const double cost = collapse_cost(curves);
  return {{"L", single_size(full)},
          {"gammas", rows},
          {"collapse",
           {{"abscissa", "t*gamma"},
            {"ordinate", "w*gamma^0.47"},
            {"window", "t in [1/gamma, t_star/2] per curve, compared on the pairwise overlap"},
            {"mean_squared_log_deviation", cost},
            {"rms_log_deviation", std::sqrt(cost)}}},
          {"inputs", inputs}};
}

json transport_report(bool full, const fs::path& dir, std::uint64_t seed) {
  json rows = json::array();
  std::vector<std::string> inputs;
  for (double g : transport_gammas()) {
    const RunSpec r = transport_run(g, full);
    inputs.push_back(r.name + ".csv");
    const ObservableSeries s = load_run(r, dir);
    const double t_edge = transport_edge_time(r.config.L);
    const Window late{2.0 / g, t_edge};
    const Window early{1.0, std::min(1.0 / g, t_edge)};
    rows.push_back({{"gamma", g},
                    {"t_edge", t_edge},
                    {"late_slope", late.t_min < late.t_max
                                       ? window_fit(s.times, s.p_tra, late, seed)
                                       : json(nullptr)},
                    {"early_slope", early.t_max > 2.0 * early.t_min
                                        ? window_fit(s.times, s.p_tra, early, seed)
                                        : json(nullptr)}});
  }
  return {{"L", transport_size(full)},
          {"observable", "p_tra"},
          {"t_edge_rule", "L/4 (ballistic light cone reaches the chain ends)"},
          {"gammas", rows},
          {"inputs", inputs}};
}

json effective_report(Statistics st, bool full, const fs::path& dir, std::uint64_t seed) {
  json rows = json::array();
  std::vector<std::string> inputs;
  for (double g : effective_gammas()) {
    const RunSpec re = effective_exact_run(st, g, full);
    const RunSpec rf = effective_run(st, g, full);
    inputs.push_back(re.name + ".csv");
    inputs.push_back(rf.name + ".csv");
    const ObservableSeries exact = load_run(re, dir);
    const ObservableSeries eff = load_run(rf, dir);
    const auto err = relative_error(exact, eff);
    double max_err = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i)
      if (exact.times[i] >= kEffectiveCheckStart && err[i]) max_err = std::max(max_err, *err[i]);
    const double ts_eff = saturation_time(eff);
    const Window w_eff = default_beta_window(g, ts_eff);
    const double ts = saturation_time(exact);
    const Window w_ex = default_beta_window(g, ts);
    rows.push_back({{"gamma", g},
                    {"max_relative_error_t_ge_4", max_err},
                    {"beta_eff", power_fit_json(fit_beta(eff, w_eff, seed), w_eff)},
                    {"beta_exact", power_fit_json(fit_beta(exact, w_ex, seed), w_ex)}});
  }
  return {{"L", single_size(full)},
          {"statistics", to_string(st)},
          {"gammas", rows},
          {"inputs", inputs}};
}

json scaling_function_report(bool full, const fs::path& dir) {
  const RunSpec re = effective_exact_run(Statistics::Fermion, 1.0, full);
  const RunSpec rl = large_effective_run(full);
  const ObservableSeries exact = load_run(re, dir);
  const ObservableSeries large = load_run(rl, dir);
  const Curve ref = curve_from_series(exact, re.config.L);
  const Curve cand = curve_from_series(large, rl.config.L);
  const Window window{1.0, re.config.t_final};
  const AffineFit eff = fit_affine(ref, cand, window);

  EwParams ew;
  ew.L_prime = re.config.L;
  Curve ewc;
  ewc.L = ew.L_prime;
  for (int i = 0; i <= 800; ++i) ewc.t.push_back(std::pow(10.0, -4.0 + 10.0 * i / 800.0));
  ewc.w = ew_curve(ew, ewc.t);
  const AffineFit ewf = fit_affine(ref, ewc, window);
  const auto fit_json = [](const AffineFit& f) {
    return json{{"d1", f.d1}, {"d2", f.d2}, {"rms_log_deviation", f.rms}};
  };
  return {{"reference", re.name + ".csv"},
          {"window", {window.t_min, window.t_max}},
          {"effective", {{"input", rl.name + ".csv"}, {"fit", fit_json(eff)}}},
          {"ew", {{"L_prime", ew.L_prime}, {"fit", fit_json(ewf)}}}};
}

json diagnostics_report(bool full, const fs::path& dir) {
  const DiagnosticsSpec spec = diagnostics_spec(full);
  const fs::path path = csv_path(dir, spec.name);
  if (!fs::exists(path))
    throw ConfigError("missing input " + path.string() + "; run `simulate` for this recipe first");
  const DiagnosticsTable t = read_diagnostics_csv(path);
  if (t.metadata != diagnostics_metadata(spec))
    throw ConfigError(path.string() + " was produced by a different config; rerun `simulate`");
  const double t_min = 1.0 / gamma_of(spec.config);
  // Columns 0-4: D_mm then off-diagonal D, G; columns 5-9: F_mnmn then F, I.
  double d_ratio = INFINITY;
  double f_ratio = INFINITY;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < t.t.size(); ++i) {
    if (t.t[i] <= t_min) continue;
    ++checked;
    const auto& v = t.values[i];
    const double d_other = *std::max_element(v.begin() + 1, v.begin() + 5);
    const double f_other = *std::max_element(v.begin() + 6, v.end());
    d_ratio = std::min(d_ratio, d_other > 0.0 ? v[0] / d_other : INFINITY);
    f_ratio = std::min(f_ratio, f_other > 0.0 ? v[5] / f_other : INFINITY);
  }
  const auto finite_or_null = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return {{"input", spec.name + ".csv"},
          {"L", spec.config.L},
          {"gamma", gamma_of(spec.config)},
          {"m", spec.m},
          {"n", spec.n},
          {"samples_checked", checked},
          {"min_ratio_D_diagonal_over_others", finite_or_null(d_ratio)},
          {"min_ratio_F_diagonal_over_others", finite_or_null(f_ratio)},
          {"hierarchy_holds", checked > 0 && d_ratio > 1.0 && f_ratio > 1.0}};
}

}  // namespace

json analyze_recipe(const Recipe& recipe, const fs::path& dir, std::uint64_t seed) {
  const std::string& name = recipe.name;
  const bool full = recipe.full_scale;
  json report{{"recipe", name}, {"full_scale", full}, {"seed", seed}};
  if (name == "fig2a" || name == "fig2b" || name == "fig2c") {
    json fams = json::array();
    for (const auto& f : fv_families(name, full)) fams.push_back(family_report(f, dir, seed));
    report["families"] = fams;
  } else if (name == "tableI") {
    json rows = json::array();
    json missing = json::array();
    for (const auto& f : table_families(full)) {
      const bool present = std::all_of(f.runs.begin(), f.runs.end(),
                                       [&](const RunSpec& r) { return run_available(r, dir); });
      if (present) {
        rows.push_back(family_report(f, dir, seed));
      } else {
        missing.push_back(f.label);
      }
    }
    report["families"] = rows;
    report["missing"] = missing;
  } else if (name == "fig3a") {
    report["crossover"] = crossover_report(full, dir, seed);
  } else if (name == "fig3b") {
    report["transport"] = transport_report(full, dir, seed);
  } else if (name == "fig4") {
    json fams = json::array();
    for (const auto& f : inout_families(name, full)) fams.push_back(saturation_report(f, dir));
    report["families"] = fams;
  } else if (name == "figS6") {
    json fams = json::array();
    for (const auto& f : inout_families(name, full)) fams.push_back(outflow_report(f, dir));
    report["families"] = fams;
  } else if (name == "figS1" || name == "figS2") {
    const Statistics st = name == "figS1" ? Statistics::Fermion : Statistics::Boson;
    report["effective"] = effective_report(st, full, dir, seed);
    if (name == "figS1") report["scaling_function"] = scaling_function_report(full, dir);
  } else if (name == "figS5") {
    report["diagnostics"] = diagnostics_report(full, dir);
  }
  return report;
}

std::vector<CollapseOutput> collapse_recipe(const Recipe& recipe, const fs::path& dir,
                                            std::uint64_t seed) {
  std::vector<Family> fams = fv_families(recipe.name, recipe.full_scale);
  if (fams.empty())
    throw ConfigError("recipe '" + recipe.name +
                      "' has no Family-Vicsek family; use fig2a, fig2b, fig2c or tableI");
  std::vector<CollapseOutput> out;
  for (const auto& f : fams) {
    if (recipe.name == "tableI" &&
        !std::all_of(f.runs.begin(), f.runs.end(),
                     [&](const RunSpec& r) { return run_available(r, dir); }))
      continue;
    const FamilyData d = load_family(f, dir);
    const FvFit fit = fit_family(d.series, d.L, f.gamma, kLRef, seed, 0.9, f.plateau_tolerance);
    std::vector<Curve> curves;
    for (std::size_t i = 0; i < d.series.size(); ++i)
      curves.push_back(curve_from_series(d.series[i], d.L[i], scaling_regime_start(f.gamma)));
    CollapseOutput c;
    c.family = f.label;
    c.alpha = fit.alpha;
    c.z = fit.z;
    c.fitted = collapse(curves, fit.alpha, fit.z, kLRef);
    c.baseline = collapse(curves, 0.0, 0.0, kLRef);
    out.push_back(std::move(c));
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace qrough
