#pragma once

#include "envariance/harness.hpp"
#include "envariance/son_theory.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace envariance::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kMissingData = 3, kConvergence = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every key of the flat JSON config file names one of these fields.
struct RunConfig {
  std::vector<std::string> axes{"x", "y", "z", "m"};
  std::vector<double> angles_deg{0, 30, 60, 90, 120, 150, 180, 210, 240, 270, 300, 330, 360};
  double flux_hz = 5400.0;
  double duration_s = 5.0;
  double werner_v = 1.0;
  double drift_sigma = 0.0;
  double waveplate_error_sigma = 0.0;
  bool analyzer_errors = false;
  bool poisson = false;
  std::uint64_t seed = 20190513;
  int mle_max_iter = 5000;
  double mle_tol = 1e-10;
  int son_grid_size = 721;
  int son_restarts = 3;
  double son_n_min = 1.2;
  double son_n_max = 3.0;
  std::string out = "out";
  /// Directory holding count files for analyze and son-fit; `out` when empty.
  std::string input;
  std::string format = "csv";

  ExperimentPlan plan() const;
  SonFitOptions son_options() const;
  std::filesystem::path input_dir() const { return input.empty() ? out : input; }
};

/// Throws UsageError on unknown keys or mistyped values.
RunConfig parse_config(const std::string& json_text);
/// Reads and parses a config file; an unreadable file raises IoError.
RunConfig load_config(const std::filesystem::path& path);

/// "counts_x_030_II.csv"
std::string count_file_name(NamedAxis axis, double angle_deg, Stage stage);

/// Count CSVs under <out>/counts and <out>/manifest.json.
void cmd_simulate(const RunConfig& config);
/// Reads <input>/counts, writes report.{csv|json} and plots/*.csv under <out>.
EnvarianceReport cmd_analyze(const RunConfig& config);
/// Reads stage-II counts, writes correlations.csv, fit.{csv|json} and son_curves.csv under <out>.
SonFitResult cmd_sonfit(const RunConfig& config);
/// simulate, analyze and son-fit in sequence, reading back the files just written.
void cmd_report(const RunConfig& config);

/// Command-line entry point; returns an ExitCode.
int run(int argc, char** argv);

} // namespace envariance::cli
