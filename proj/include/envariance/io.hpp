#pragma once

#include "envariance/harness.hpp"
#include "envariance/son_theory.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace envariance {

/// Unreadable or unwritable files and malformed file contents.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An input the command needs is absent.
struct MissingData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCountCsvHeader = "setting_label,outcome_label,counts,duration_s";

/// 36 rows in projector order under kCountCsvHeader.
void write_counts_csv(std::ostream& os, const CountRecord& record);
/// Rows may come in any order but every projector must appear exactly once.
/// flux_hz is recovered as the mean pairs per setting divided by the duration.
CountRecord read_counts_csv(std::istream& is);

/// Nested rows of [re, im] pairs.
nlohmann::json matrix_to_json(const Mat4& m);
Mat4 matrix_from_json(const nlohmann::json& j);

void write_report_csv(std::ostream& os, const EnvarianceReport& report);
nlohmann::json report_to_json(const EnvarianceReport& report);

/// Columns angle_deg,value,error for one axis, metric ("F" or "BC") and
/// comparison ("I_II" or "I_III"). The error bar is the axis source stability.
void write_plot_csv(std::ostream& os, const EnvarianceReport& report, NamedAxis axis, std::string_view metric,
                    std::string_view comparison);

void write_correlations_csv(std::ostream& os, const std::vector<CorrelationSample>& samples);
std::vector<CorrelationSample> read_correlations_csv(std::istream& is);

nlohmann::json fit_to_json(const SonFitResult& fit);
void write_fit_csv(std::ostream& os, const SonFitResult& fit);

/// Fixed-precision decimal rendering shared by every CSV writer.
std::string format_number(double v);

/// Writes `contents` to `path`, creating parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, const std::string& contents);
/// Throws MissingData when the file does not exist and IoError when it cannot be read.
std::string read_file(const std::filesystem::path& path);

} // namespace envariance
