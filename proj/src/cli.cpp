#include "envariance/cli.hpp"

#include "envariance/io.hpp"

#include "CLI11.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <sstream>

namespace envariance::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

template <typename T>
T get_as(const json& value, const std::string& key)
{
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw UsageError("config key '" + key + "' has the wrong type");
  }
}

std::string angle_tag(double angle_deg)
{
  std::array<char, 32> buf{};
  if (angle_deg == std::round(angle_deg)) {
    std::snprintf(buf.data(), buf.size(), "%03d", static_cast<int>(angle_deg));
  } else {
    std::snprintf(buf.data(), buf.size(), "%07.3f", angle_deg);
  }
  return buf.data();
}

std::vector<NamedAxis> parse_axes(const std::vector<std::string>& names)
{
  std::vector<NamedAxis> axes;
  for (const auto& n : names) {
    try {
      axes.push_back(parse_axis(n));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return axes;
}

void check_format(const RunConfig& config)
{
  if (config.format != "csv" && config.format != "json") {
    throw UsageError("format must be csv or json, got '" + config.format + "'");
  }
}

std::string render_json(const json& j) { return j.dump(2) + "\n"; }

template <typename Writer>
std::string render(Writer&& w)
{
  std::ostringstream os;
  w(os);
  return os.str();
}

CountRecord load_counts(const fs::path& dir, NamedAxis axis, double angle_deg, Stage stage)
{
  const fs::path path = dir / "counts" / count_file_name(axis, angle_deg, stage);
  if (!fs::exists(path)) {
    throw MissingData("missing stage " + std::string(to_string(stage)) + " counts for axis " +
                      std::string(to_string(axis)) + " at " + format_number(angle_deg) + " deg: " + path.string());
  }
  std::istringstream in(read_file(path));
  try {
    return read_counts_csv(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

json config_to_json(const RunConfig& c)
{
  return json{
      {"axes", c.axes},
      {"angles_deg", c.angles_deg},
      {"flux_hz", c.flux_hz},
      {"duration_s", c.duration_s},
      {"werner_v", c.werner_v},
      {"drift_sigma", c.drift_sigma},
      {"waveplate_error_sigma", c.waveplate_error_sigma},
      {"analyzer_errors", c.analyzer_errors},
      {"poisson", c.poisson},
      {"seed", c.seed},
      {"mle_max_iter", c.mle_max_iter},
      {"mle_tol", c.mle_tol},
      {"son_grid_size", c.son_grid_size},
      {"son_restarts", c.son_restarts},
      {"son_n_min", c.son_n_min},
      {"son_n_max", c.son_n_max},
      {"format", c.format},
  };
}

} // namespace

ExperimentPlan RunConfig::plan() const
{
  if (format != "csv" && format != "json") throw UsageError("format must be csv or json, not '" + format + "'");
  ExperimentPlan p;
  try {
    p.axes = parse_axes(axes);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  p.angles_deg = angles_deg;
  p.flux_hz = flux_hz;
  p.duration_s = duration_s;
  p.noise.werner_v = werner_v;
  p.noise.drift_sigma = drift_sigma;
  p.noise.waveplate_error_sigma = waveplate_error_sigma;
  p.noise.analyzer_errors = analyzer_errors;
  p.noise.poisson = poisson;
  p.noise.seed = seed;
  p.seed = seed;
  p.mle.max_iter = mle_max_iter;
  p.mle.tol = mle_tol;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (mle_max_iter < 1 || !(mle_tol > 0.0)) throw UsageError("mle_max_iter must be >= 1 and mle_tol > 0");
  return p;
}

SonFitOptions RunConfig::son_options() const
{
  if (son_grid_size < 16 || son_restarts < 1 || !(son_n_min > 0.0) || !(son_n_max > son_n_min)) {
    throw UsageError("invalid son-fit options");
  }
  SonFitOptions o;
  o.grid_size = son_grid_size;
  o.restarts = son_restarts;
  o.n_min = son_n_min;
  o.n_max = son_n_max;
  return o;
}

RunConfig parse_config(const std::string& json_text)
{
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");

  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) throw UsageError("config must be flat; key '" + key + "' holds an object");
    if (key == "axes") c.axes = get_as<std::vector<std::string>>(value, key);
    else if (key == "angles_deg") c.angles_deg = get_as<std::vector<double>>(value, key);
    else if (key == "flux_hz") c.flux_hz = get_as<double>(value, key);
    else if (key == "duration_s") c.duration_s = get_as<double>(value, key);
    else if (key == "werner_v") c.werner_v = get_as<double>(value, key);
    else if (key == "drift_sigma") c.drift_sigma = get_as<double>(value, key);
    else if (key == "waveplate_error_sigma") c.waveplate_error_sigma = get_as<double>(value, key);
    else if (key == "analyzer_errors") c.analyzer_errors = get_as<bool>(value, key);
    else if (key == "poisson") c.poisson = get_as<bool>(value, key);
    else if (key == "seed") {
      if (!value.is_number_unsigned()) throw UsageError("config key 'seed' must be a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    }
    else if (key == "mle_max_iter") c.mle_max_iter = get_as<int>(value, key);
    else if (key == "mle_tol") c.mle_tol = get_as<double>(value, key);
    else if (key == "son_grid_size") c.son_grid_size = get_as<int>(value, key);
    else if (key == "son_restarts") c.son_restarts = get_as<int>(value, key);
    else if (key == "son_n_min") c.son_n_min = get_as<double>(value, key);
    else if (key == "son_n_max") c.son_n_max = get_as<double>(value, key);
    else if (key == "out") c.out = get_as<std::string>(value, key);
    else if (key == "input") c.input = get_as<std::string>(value, key);
    else if (key == "format") c.format = get_as<std::string>(value, key);
    else throw UsageError("unknown config key '" + key + "'");
  }
  check_format(c);
  return c;
}

RunConfig load_config(const fs::path& path)
{
  if (!fs::exists(path)) throw IoError("config file " + path.string() + " does not exist");
  return parse_config(read_file(path));
}

std::string count_file_name(NamedAxis axis, double angle_deg, Stage stage)
{
  return "counts_" + std::string(to_string(axis)) + "_" + angle_tag(angle_deg) + "_" + std::string(to_string(stage)) +
         ".csv";
}

void cmd_simulate(const RunConfig& config)
{
  const ExperimentPlan plan = config.plan();
  const fs::path out = config.out;
  const auto triples = simulate_grid(plan);

  json files = json::array();
  for (const auto& t : triples) {
    for (const StageResult* s : {&t.I, &t.II, &t.III}) {
      const std::string name = count_file_name(t.axis, t.angle_deg, s->stage);
      write_file(out / "counts" / name, render([&](std::ostream& os) { write_counts_csv(os, s->counts); }));
      files.push_back({
          {"file", "counts/" + name},
          {"axis", to_string(t.axis)},
          {"angle_deg", t.angle_deg},
          {"stage", to_string(s->stage)},
          {"wave_plates", {t.setting.alpha, t.setting.beta, t.setting.gamma}},
          {"rho_true", matrix_to_json(s->rho_true->matrix())},
      });
    }
  }
  json manifest{{"seed", plan.seed}, {"config", config_to_json(config)}, {"files", files}};
  write_file(out / "manifest.json", render_json(manifest));
}

EnvarianceReport cmd_analyze(const RunConfig& config)
{
  check_format(config);
  const ExperimentPlan plan = config.plan();
  const fs::path in = config.input_dir();
  const fs::path out = config.out;

  std::vector<StageTriple> triples;
  for (NamedAxis axis : plan.axes) {
    for (double angle : plan.angles_deg) {
      const double theta = angle * kDeg;
      const WavePlateSetting setting = plan_setting(axis, theta);
      const DensityMatrix mixed(0.25 * Mat4::Identity());
      triples.push_back(StageTriple{
          axis,
          angle,
          theta,
          setting,
          stack(setting),
          {Stage::I, load_counts(in, axis, angle, Stage::I), mixed, std::nullopt},
          {Stage::II, load_counts(in, axis, angle, Stage::II), mixed, std::nullopt},
          {Stage::III, load_counts(in, axis, angle, Stage::III), mixed, std::nullopt},
      });
    }
  }
  reconstruct_grid(triples, plan.mle);
  const EnvarianceReport report = assemble_report(triples);

  if (config.format == "json") {
    write_file(out / "report.json", render_json(report_to_json(report)));
  } else {
    write_file(out / "report.csv", render([&](std::ostream& os) { write_report_csv(os, report); }));
  }
  for (NamedAxis axis : plan.axes) {
    for (const char* metric : {"F", "BC"}) {
      for (const char* comparison : {"I_II", "I_III"}) {
        const std::string name =
            "plot_" + std::string(to_string(axis)) + "_" + metric + "_" + comparison + ".csv";
        write_file(out / "plots" / name,
                   render([&](std::ostream& os) { write_plot_csv(os, report, axis, metric, comparison); }));
      }
    }
  }
  return report;
}

SonFitResult cmd_sonfit(const RunConfig& config)
{
  check_format(config);
  const ExperimentPlan plan = config.plan();
  SonFitOptions options = config.son_options();
  const fs::path in = config.input_dir();
  const fs::path out = config.out;

  std::vector<CorrelationSample> samples;
  std::vector<std::string> skipped;
  for (const Combo& combo : standard_combos()) {
    std::vector<CorrelationSample> combo_samples;
    try {
      for (double angle : plan.angles_deg) {
        const CountRecord counts = load_counts(in, combo.axis, angle, Stage::II);
        combo_samples.push_back(extract_correlation(counts, combo, 0.5 * angle * kDeg));
      }
    } catch (const MissingData& e) {
      skipped.push_back(combo.label() + " (" + e.what() + ")");
      continue;
    }
    samples.insert(samples.end(), combo_samples.begin(), combo_samples.end());
  }
  if (samples.empty()) throw MissingData("son-fit: no stage II count files for any correlation combo under " + in.string());
  if (!skipped.empty()) {
    std::cerr << "warning: fitting " << (standard_combos().size() - skipped.size()) << " of "
              << standard_combos().size() << " combos; skipped:\n";
    for (const auto& s : skipped) std::cerr << "  " << s << "\n";
  }

  // Start the state search from the stage-I reconstructions at the first angle.
  static const ProjectorSet projectors;
  Mat4 start = Mat4::Zero();
  int used = 0;
  for (NamedAxis axis : plan.axes) {
    const fs::path path = in / "counts" / count_file_name(axis, plan.angles_deg.front(), Stage::I);
    if (!fs::exists(path)) continue;
    start += mle_reconstruct(load_counts(in, axis, plan.angles_deg.front(), Stage::I), projectors, plan.mle).rho.matrix();
    ++used;
  }
  if (used > 0) options.initial = DensityMatrix::normalized(start / static_cast<double>(used));

  const SonFitResult fit = son_fit(samples, options);

  write_file(out / "correlations.csv", render([&](std::ostream& os) { write_correlations_csv(os, samples); }));
  if (config.format == "json") {
    write_file(out / "fit.json", render_json(fit_to_json(fit)));
  } else {
    write_file(out / "fit.csv", render([&](std::ostream& os) { write_fit_csv(os, fit); }));
  }

  std::ostringstream curves;
  curves << "combo,phi_deg,E_fit,E_qm\n";
  for (const auto& f : fit.fits) {
    const CorrelationCurve curve = solve_son(f.n, options.grid_size);
    for (int k = 0; k <= 180; ++k) {
      const double phi = k * kDeg;
      curves << '"' << f.combo.label() << "\"," << k << ',' << format_number(son_model(curve, f.combo, phi, f.rho))
             << ',' << format_number(e_qm(phi_to_theta(phi))) << '\n';
    }
  }
  write_file(out / "son_curves.csv", curves.str());
  return fit;
}

void cmd_report(const RunConfig& config)
{
  RunConfig c = config;
  c.input = c.out;
  cmd_simulate(c);
  cmd_analyze(c);
  cmd_sonfit(c);
}

int run(int argc, char** argv)
{
  CLI::App app{"Envariance test simulator and analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir, input_dir, format;
  app.add_option("--config", config_path, "Flat JSON run configuration");
  app.add_option("--seed", seed, "Master random seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--input", input_dir, "Directory holding count files (defaults to --out)");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json"}));

  auto* simulate = app.add_subcommand("simulate", "Simulate three-stage count data");
  auto* analyze = app.add_subcommand("analyze", "Reconstruct states and score envariance");
  auto* sonfit = app.add_subcommand("son-fit", "Fit the generalized Born exponent n");
  auto* report = app.add_subcommand("report", "simulate, analyze and son-fit in one run");
  for (auto* sub : {simulate, analyze, sonfit, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.out = out_dir;
    if (!input_dir.empty()) config.input = input_dir;
    if (!format.empty()) config.format = format;

    if (simulate->parsed()) cmd_simulate(config);
    else if (analyze->parsed()) {
      const auto r = cmd_analyze(config);
      std::cout << "F(I,III) = " << format_number(r.mean_F) << " +- " << format_number(r.F_uncertainty)
                << ", BC(I,III) = " << format_number(r.mean_BC) << " +- " << format_number(r.BC_uncertainty) << "\n";
    } else if (sonfit->parsed()) {
      const auto f = cmd_sonfit(config);
      std::cout << "n = " << format_number(f.n) << " +- " << format_number(f.n_uncertainty) << "\n";
    } else {
      cmd_report(config);
    }
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const MissingData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingData;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ConvergenceFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConvergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
}

} // namespace envariance::cli
