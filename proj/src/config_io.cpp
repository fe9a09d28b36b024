#include "qrough/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "qrough/errors.hpp"

namespace qrough {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "' in " + where + ": " + e.what());
  }
}

}  // namespace

Dissipator dissipator_from_json(const json& j) {
  const auto kind = get_required<std::string>(j, "kind", "dissipator");
  if (kind == "dephasing") {
    reject_unknown_keys(j, {"kind", "gamma"}, "dissipator");
    return Dephasing{get_required<double>(j, "gamma", "dissipator")};
  }
  if (kind == "inout" || kind == "in_out") {
    reject_unknown_keys(j, {"kind", "gamma_in", "gamma_out"}, "dissipator");
    return InOut{get_required<double>(j, "gamma_in", "dissipator"),
                 get_required<double>(j, "gamma_out", "dissipator")};
  }
  throw ConfigError("unknown dissipator kind '" + kind + "'");
}

json dissipator_to_json(const Dissipator& d) {
  if (const auto* dep = std::get_if<Dephasing>(&d))
    return {{"kind", "dephasing"}, {"gamma", dep->gamma}};
  const auto& io = std::get<InOut>(d);
  return {{"kind", "inout"}, {"gamma_in", io.gamma_in}, {"gamma_out", io.gamma_out}};
}

SampleSpec sample_spec_from_json(const json& s) {
  reject_unknown_keys(s, {"log_points", "linear_points", "t_min"}, "sample_spec");
  SampleSpec spec;
  if (s.contains("log_points")) spec.log_points = get_required<int>(s, "log_points", "sample_spec");
  if (s.contains("linear_points"))
    spec.linear_points = get_required<int>(s, "linear_points", "sample_spec");
  if (s.contains("t_min")) spec.t_min = get_required<double>(s, "t_min", "sample_spec");
  return spec;
}

std::vector<double> expand_sample_spec(const SampleSpec& spec, double t_final) {
  if (spec.log_points < 0 || spec.linear_points < 0)
    throw ConfigError("sample_spec point counts must be nonnegative");
  std::vector<double> ts{0.0};
  if (spec.log_points > 0) {
    if (!(spec.t_min > 0.0 && spec.t_min < t_final))
      throw ConfigError("sample_spec t_min must lie in (0, t_final)");
    const double a = std::log(spec.t_min);
    const double b = std::log(t_final);
    for (int i = 0; i < spec.log_points; ++i) {
      const double u = spec.log_points == 1 ? 1.0 : static_cast<double>(i) / (spec.log_points - 1);
      ts.push_back(std::exp(a + u * (b - a)));
    }
    ts.back() = t_final;
  }
  for (int i = 1; i <= spec.linear_points; ++i)
    ts.push_back(t_final * static_cast<double>(i) / spec.linear_points);
  std::sort(ts.begin(), ts.end());
  // Merge points that coincide up to roundoff so the grid is strictly increasing.
  std::vector<double> out;
  for (double t : ts) {
    if (out.empty() || t - out.back() > 1e-12 * std::max(1.0, t)) out.push_back(t);
  }
  out.back() = std::min(out.back(), t_final);
  return out;
}

Statistics parse_statistics(const std::string& s) {
  if (s == "fermion" || s == "Fermion") return Statistics::Fermion;
  if (s == "boson" || s == "Boson") return Statistics::Boson;
  throw ConfigError("unknown statistics '" + s + "'");
}

InitialState parse_initial_state(const std::string& s) {
  if (s == "staggered" || s == "SS") return InitialState::Staggered;
  if (s == "domain_wall" || s == "DWS") return InitialState::DomainWall;
  if (s == "uniform" || s == "US") return InitialState::Uniform;
  throw ConfigError("unknown initial_state '" + s + "'");
}

SystemConfig config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"L", "statistics", "dissipator", "initial_state", "nu", "dt", "t_final",
                       "sample_times", "sample_spec"},
                      "config");
  SystemConfig c;
  c.L = get_required<int>(j, "L", "config");
  c.statistics = parse_statistics(get_required<std::string>(j, "statistics", "config"));
  if (!j.contains("dissipator")) throw ConfigError("missing key 'dissipator' in config");
  c.dissipator = dissipator_from_json(j.at("dissipator"));
  c.initial_state = parse_initial_state(get_required<std::string>(j, "initial_state", "config"));
  if (j.contains("nu")) c.nu_override = get_required<double>(j, "nu", "config");
  if (j.contains("dt")) c.dt = get_required<double>(j, "dt", "config");
  c.t_final = get_required<double>(j, "t_final", "config");
  if (j.contains("sample_times") && j.contains("sample_spec"))
    throw ConfigError("give either 'sample_times' or 'sample_spec', not both");
  if (j.contains("sample_times")) {
    c.sample_times = get_required<std::vector<double>>(j, "sample_times", "config");
  } else if (j.contains("sample_spec")) {
    const SampleSpec spec = sample_spec_from_json(j.at("sample_spec"));
    if (c.t_final > 0.0 && std::isfinite(c.t_final)) c.sample_times = expand_sample_spec(spec, c.t_final);
  } else {
    c.sample_times = {0.0, c.t_final};
  }
  return c;
}

json config_to_json(const SystemConfig& c) {
  json j;
  j["L"] = c.L;
  j["statistics"] = to_string(c.statistics);
  j["dissipator"] = dissipator_to_json(c.dissipator);
  j["initial_state"] = to_string(c.initial_state);
  if (c.nu_override) j["nu"] = *c.nu_override;
  j["dt"] = resolved_dt(c);
  j["t_final"] = c.t_final;
  j["sample_times"] = c.sample_times;
  return j;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

SystemConfig load_config(const std::filesystem::path& path) {
  return config_from_json(load_json(path));
}

nlohmann::json run_metadata(const std::string& engine, const SystemConfig& config) {
  return {{"engine", engine}, {"config", config_to_json(config)}};
}

}  // namespace qrough
