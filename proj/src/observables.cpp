#include "qrough/observables.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qrough/errors.hpp"
#include "qrough/log.hpp"

namespace qrough {

double roughness_squared(Statistics statistics, int L, double nu, double sum_left_d,
                         double sum_left_f) {
  const double sign = statistics == Statistics::Fermion ? -1.0 : 1.0;
  const double nl = nu * L;
  const double dev = sum_left_d - nl / 2.0;
  return sign * sum_left_f + (1.0 - nl) * sum_left_d + nl * nl / 4.0 - dev * dev;
}

double clamp_roughness(double w2) {
  if (w2 >= 0.0) return w2;
  if (w2 < -1e-9) {
    std::ostringstream msg;
    msg << "roughness squared " << w2 << " below roundoff tolerance; clamped to 0";
    log::warn(msg.str());
  }
  return 0.0;
}

double roughness(const CorrelationState& state, double nu) {
  if (!state.has_four_point()) throw ConfigError("roughness needs the four-point tensor");
  const int half = state.L / 2;
  double sd = 0.0;
  double sf = 0.0;
  for (int m = 0; m < half; ++m) {
    sd += state.D(m, m).real();
    for (int n = 0; n < half; ++n) sf += state.F(m, n, m, n).real();
  }
  return std::sqrt(clamp_roughness(roughness_squared(state.statistics, state.L, nu, sd, sf)));
}

double total_number(const CorrelationState& state) {
  cplx s{};
  for (int m = 0; m < state.L; ++m) s += state.D(m, m);
  if (std::abs(s.imag()) > 1e-9) {
    std::ostringstream msg;
    msg << "total number has imaginary part " << s.imag();
    log::warn(msg.str());
  }
  return s.real();
}

double total_number_sq(const CorrelationState& state) {
  if (!state.has_four_point()) throw ConfigError("<N^2> needs the four-point tensor");
  double s = 0.0;
  for (int m = 0; m < state.L; ++m) {
    s += state.D(m, m).real();
    for (int n = 0; n < state.L; ++n) s += state.F(m, n, n, m).real();
  }
  return s;
}

double transfer_at(std::span<const double> diagonal, std::span<const double> initial) {
  if (diagonal.size() != initial.size()) throw ConfigError("transfer: diagonal length mismatch");
  const std::size_t half = diagonal.size() / 2;
  double left = 0.0;
  double right = 0.0;
  for (std::size_t m = 0; m < diagonal.size(); ++m) {
    const double delta = diagonal[m] - initial[m];
    (m < half ? left : right) += delta;
  }
  return right - left;
}

std::vector<double> transfer(std::span<const std::vector<double>> diagonals,
                             std::span<const double> initial) {
  std::vector<double> out;
  out.reserve(diagonals.size());
  for (const auto& diag : diagonals) out.push_back(transfer_at(diag, initial));
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void write_cell(std::ostream& out, const std::vector<double>& column, std::size_t i) {
  if (i < column.size()) out << format_double(column[i]);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("malformed number '" + s + "' in CSV");
  return v;
}

}  // namespace

void write_series_csv(std::ostream& out, const ObservableSeries& s) {
  out << "# qrough observable series\n";
  if (!s.metadata.is_null()) out << "# metadata: " << s.metadata.dump() << '\n';
  out << "t," << s.w_label << ",n_tot,n_tot_sq,p_tra\n";
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    out << format_double(s.times[i]) << ',';
    write_cell(out, s.w, i);
    out << ',';
    write_cell(out, s.n_tot, i);
    out << ',';
    write_cell(out, s.n_tot_sq, i);
    out << ',';
    write_cell(out, s.p_tra, i);
    out << '\n';
  }
}

void write_series_csv(const std::filesystem::path& path, const ObservableSeries& series) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_series_csv(out, series);
}

ObservableSeries read_series_csv(std::istream& in) {
  ObservableSeries s;
  std::string line;
  bool have_header = false;
  std::vector<std::vector<double>*> columns;
  std::vector<bool> seen_value;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# metadata: ";
      if (line.rfind(key, 0) == 0) {
        try {
          s.metadata = nlohmann::json::parse(line.substr(key.size()));
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("malformed metadata: ") + e.what());
        }
      }
      continue;
    }
    const auto cells = split(line, ',');
    if (!have_header) {
      if (cells.size() != 5 || cells[0] != "t")
        throw ConfigError("unexpected CSV header: " + line);
      s.w_label = cells[1];
      columns = {&s.times, &s.w, &s.n_tot, &s.n_tot_sq, &s.p_tra};
      seen_value.assign(5, false);
      have_header = true;
      continue;
    }
    if (cells.size() != 5) throw ConfigError("CSV row with wrong field count: " + line);
    for (std::size_t c = 0; c < 5; ++c) {
      if (cells[c].empty()) {
        if (c == 0) throw ConfigError("CSV row without time");
        continue;
      }
      seen_value[c] = true;
      columns[c]->push_back(parse_double(cells[c]));
    }
  }
  if (!have_header) throw ConfigError("CSV has no header row");
  for (std::size_t c = 1; c < 5; ++c) {
    if (!columns[c]->empty() && columns[c]->size() != s.times.size())
      throw ConfigError("CSV column with missing entries");
  }
  return s;
}

ObservableSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_series_csv(in);
}

}  // namespace qrough
