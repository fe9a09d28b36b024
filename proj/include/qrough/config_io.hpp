#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrough/model.hpp"

namespace qrough {

/// Sampling grid description accepted in place of an explicit "sample_times" list.
///
/// The grid is the sorted union of {0}, a log-spaced grid of `log_points` points
/// in [t_min, t_final] and a linear grid of `linear_points` points in (0, t_final].
struct SampleSpec {
  int log_points = 0;
  int linear_points = 0;
  double t_min = 0.01;
};

std::vector<double> expand_sample_spec(const SampleSpec& spec, double t_final);

/// {"kind": "dephasing", "gamma": g} or {"kind": "inout", "gamma_in": a, "gamma_out": b}.
Dissipator dissipator_from_json(const nlohmann::json& j);
nlohmann::json dissipator_to_json(const Dissipator& dissipator);

/// {"log_points": n, "linear_points": n, "t_min": t}; missing keys keep their defaults.
SampleSpec sample_spec_from_json(const nlohmann::json& j);

/// Parses a config object. Unknown keys (at any level) raise ConfigError.
SystemConfig config_from_json(const nlohmann::json& j);

/// Fully resolved config (dt and sample times explicit).
nlohmann::json config_to_json(const SystemConfig& config);

/// {"engine": engine, "config": config_to_json(config)}; embedded in every output file.
nlohmann::json run_metadata(const std::string& engine, const SystemConfig& config);

/// Reads a JSON file; ConfigError when missing or malformed.
nlohmann::json load_json(const std::filesystem::path& path);

SystemConfig load_config(const std::filesystem::path& path);

Statistics parse_statistics(const std::string& s);
InitialState parse_initial_state(const std::string& s);

}  // namespace qrough
