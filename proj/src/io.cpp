#include "envariance/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace envariance {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line, char sep)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text, const char* what)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw IoError(std::string("cannot parse ") + what + " '" + text + "'");
  }
}

std::int64_t parse_count(const std::string& text)
{
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw IoError("cannot parse count '" + text + "'");
  }
}

json metric_summary(double mean, double uncertainty) { return json{{"mean", mean}, {"uncertainty", uncertainty}}; }

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

std::string format_number(double v)
{
  if (!std::isfinite(v)) return "nan";
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.10g", v);
  return buf.data();
}

void write_counts_csv(std::ostream& os, const CountRecord& record)
{
  static const ProjectorSet projectors;
  os << kCountCsvHeader << '\n';
  for (const auto& p : projectors.all()) {
    os << p.setting_label << ',' << p.outcome_label << ',' << record.counts[static_cast<std::size_t>(p.index)] << ','
       << format_number(record.duration_s) << '\n';
  }
}

CountRecord read_counts_csv(std::istream& is)
{
  static const ProjectorSet projectors;
  std::string line;
  if (!std::getline(is, line) || trim(line) != kCountCsvHeader) {
    throw IoError(std::string("count file must start with '") + kCountCsvHeader + "'");
  }
  CountRecord record;
  std::array<bool, kProjectorCount> seen{};
  double duration = -1.0;
  int rows = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != 4) throw IoError("count row needs 4 fields: '" + line + "'");
    const int index = projectors.find(trim(fields[0]), trim(fields[1]));
    if (index < 0) throw IoError("unknown projector '" + fields[0] + "," + fields[1] + "'");
    if (seen[static_cast<std::size_t>(index)]) throw IoError("duplicate projector '" + fields[0] + "," + fields[1] + "'");
    seen[static_cast<std::size_t>(index)] = true;
    const std::int64_t n = parse_count(trim(fields[2]));
    if (n < 0) throw IoError("negative count in row '" + line + "'");
    record.counts[static_cast<std::size_t>(index)] = n;
    const double d = parse_double(trim(fields[3]), "duration_s");
    if (!(d > 0.0)) throw IoError("duration_s must be positive");
    if (duration >= 0.0 && d != duration) throw IoError("duration_s differs between rows");
    duration = d;
    ++rows;
  }
  if (rows != kProjectorCount) {
    throw IoError("count file has " + std::to_string(rows) + " rows, expected " + std::to_string(kProjectorCount));
  }
  record.duration_s = duration;
  record.flux_hz = static_cast<double>(record.total()) / (kSettingCount * duration);
  return record;
}

json matrix_to_json(const Mat4& m)
{
  json rows = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int j = 0; j < 4; ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(row);
  }
  return rows;
}

Mat4 matrix_from_json(const json& j)
{
  if (!j.is_array() || j.size() != 4) throw IoError("matrix JSON must have 4 rows");
  Mat4 m;
  for (int i = 0; i < 4; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.size() != 4) throw IoError("matrix JSON rows must have 4 entries");
    for (int k = 0; k < 4; ++k) {
      const json& e = row[static_cast<std::size_t>(k)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw IoError("matrix JSON entries must be [re, im] pairs");
      }
      m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

void write_report_csv(std::ostream& os, const EnvarianceReport& report)
{
  os << "axis,angle_deg,F_I_III,F_I_II,BC_I_III,BC_I_II,F_I_III_theory,BC_I_III_theory,F_I_II_theory,BC_I_II_theory\n";
  for (const auto& c : report.cells) {
    os << to_string(c.axis) << ',' << format_number(c.angle_deg) << ',' << format_number(c.F_I_III) << ','
       << format_number(c.F_I_II) << ',' << format_number(c.BC_I_III) << ',' << format_number(c.BC_I_II) << ','
       << format_number(c.F_I_III_theory) << ',' << format_number(c.BC_I_III_theory) << ','
       << format_number(c.F_I_II_theory) << ',' << format_number(c.BC_I_II_theory) << '\n';
  }
}

json report_to_json(const EnvarianceReport& report)
{
  json axes = json::array();
  for (const auto& a : report.axes) {
    axes.push_back({
        {"axis", to_string(a.axis)},
        {"F_I_III", metric_summary(a.mean_F, a.F_uncertainty)},
        {"BC_I_III", metric_summary(a.mean_BC, a.BC_uncertainty)},
        {"stability_F", a.stability_F},
        {"stability_BC", a.stability_BC},
        {"deviation_F", a.deviation_F},
        {"deviation_BC", a.deviation_BC},
    });
  }
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({
        {"axis", to_string(c.axis)},
        {"angle_deg", c.angle_deg},
        {"F_I_III", c.F_I_III},
        {"F_I_II", c.F_I_II},
        {"BC_I_III", c.BC_I_III},
        {"BC_I_II", c.BC_I_II},
        {"F_I_III_theory", c.F_I_III_theory},
        {"BC_I_III_theory", c.BC_I_III_theory},
        {"F_I_II_theory", c.F_I_II_theory},
        {"BC_I_II_theory", c.BC_I_II_theory},
        {"F_true_I_III", nan_safe(c.F_true_I_III)},
        {"F_true_I_II", nan_safe(c.F_true_I_II)},
    });
  }
  return json{
      {"overall",
       {
           {"F_I_III", metric_summary(report.mean_F, report.F_uncertainty)},
           {"BC_I_III", metric_summary(report.mean_BC, report.BC_uncertainty)},
           {"stability_F", report.stability_F},
           {"stability_BC", report.stability_BC},
           {"deviation_F", report.deviation_F},
           {"deviation_BC", report.deviation_BC},
       }},
      {"axes", axes},
      {"cells", cells},
  };
}

void write_plot_csv(std::ostream& os, const EnvarianceReport& report, NamedAxis axis, std::string_view metric,
                    std::string_view comparison)
{
  const bool fidelity_metric = metric == "F";
  if (!fidelity_metric && metric != "BC") throw std::invalid_argument("plot metric must be F or BC");
  const bool stage3 = comparison == "I_III";
  if (!stage3 && comparison != "I_II") throw std::invalid_argument("plot comparison must be I_II or I_III");

  double error = 0.0;
  for (const auto& a : report.axes) {
    if (a.axis == axis) error = fidelity_metric ? a.stability_F : a.stability_BC;
  }
  os << "angle_deg,value,error\n";
  for (const auto& c : report.cells) {
    if (c.axis != axis) continue;
    const double v = fidelity_metric ? (stage3 ? c.F_I_III : c.F_I_II) : (stage3 ? c.BC_I_III : c.BC_I_II);
    os << format_number(c.angle_deg) << ',' << format_number(v) << ',' << format_number(error) << '\n';
  }
}

void write_correlations_csv(std::ostream& os, const std::vector<CorrelationSample>& samples)
{
  constexpr double deg = 180.0 / 3.14159265358979323846;
  os << "combo,phi_deg,E,sigma_E\n";
  for (const auto& s : samples) {
    os << '"' << s.combo.label() << "\"," << format_number(s.phi * deg) << ',' << format_number(s.E) << ','
       << format_number(s.sigma_E) << '\n';
  }
}

std::vector<CorrelationSample> read_correlations_csv(std::istream& is)
{
  constexpr double rad = 3.14159265358979323846 / 180.0;
  std::string line;
  if (!std::getline(is, line) || trim(line) != "combo,phi_deg,E,sigma_E") {
    throw IoError("correlation file must start with 'combo,phi_deg,E,sigma_E'");
  }
  std::vector<CorrelationSample> out;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty()) continue;
    // The combo label contains a comma, so it is quoted.
    if (line.front() != '"') throw IoError("correlation row must start with a quoted combo: '" + line + "'");
    const auto close = line.find('"', 1);
    if (close == std::string::npos || close + 1 >= line.size() || line[close + 1] != ',') {
      throw IoError("malformed correlation row '" + line + "'");
    }
    const auto fields = split(line.substr(close + 2), ',');
    if (fields.size() != 3) throw IoError("malformed correlation row '" + line + "'");
    CorrelationSample s;
    try {
      s.combo = parse_combo(line.substr(1, close - 1));
    } catch (const std::invalid_argument& e) {
      throw IoError(e.what());
    }
    s.phi = parse_double(trim(fields[0]), "phi_deg") * rad;
    s.E = parse_double(trim(fields[1]), "E");
    s.sigma_E = parse_double(trim(fields[2]), "sigma_E");
    out.push_back(s);
  }
  return out;
}

json fit_to_json(const SonFitResult& fit)
{
  json combos = json::array();
  for (const auto& f : fit.fits) {
    combos.push_back({{"combo", f.combo.label()}, {"n", f.n}, {"objective", f.objective}, {"samples", f.samples}});
  }
  return json{
      {"n", fit.n},
      {"n_uncertainty", fit.n_uncertainty},
      {"per_combo_n", fit.per_combo_n},
      {"objective", fit.objective},
      {"combos", combos},
  };
}

void write_fit_csv(std::ostream& os, const SonFitResult& fit)
{
  os << "combo,n,objective,samples\n";
  for (const auto& f : fit.fits) {
    os << '"' << f.combo.label() << "\"," << format_number(f.n) << ',' << format_number(f.objective) << ','
       << f.samples << '\n';
  }
  os << "\"mean\"," << format_number(fit.n) << ',' << format_number(fit.objective) << ",\n";
  os << "\"uncertainty\"," << format_number(fit.n_uncertainty) << ",,\n";
}

void write_file(const std::filesystem::path& path, const std::string& contents)
{
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << contents;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path)
{
  if (!std::filesystem::exists(path)) throw MissingData("missing file " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace envariance
