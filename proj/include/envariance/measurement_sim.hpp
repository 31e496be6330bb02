#pragma once

#include "envariance/quantum_core.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>

namespace envariance {

/// Random stream used by every stochastic operation.
using RandomStream = std::mt19937_64;

enum class Basis { HV = 0, DA = 1, RL = 2 };

std::string_view to_string(Basis b);
/// The two kets of a basis, first outcome first (H, D, R).
std::array<Vec2, 2> basis_kets(Basis b);

inline constexpr int kSettingCount = 9;
inline constexpr int kOutcomesPerSetting = 4;
inline constexpr int kProjectorCount = kSettingCount * kOutcomesPerSetting;

struct Projector {
  int index = 0;             ///< setting * 4 + outcome
  int setting = 0;
  int outcome = 0;           ///< 0: (first, first), 1: (first, second), 2: (second, first), 3: (second, second)
  std::string setting_label; ///< e.g. "HV_DA": system basis, environment basis
  std::string outcome_label; ///< e.g. "HD": system outcome, environment outcome
  Vec4 ket;
  Mat4 matrix;
};

/// The 36 product projectors |a><a| (x) |b><b|, a, b in {H, V, D, A, R, L},
/// grouped into 9 analyzer settings of 4 mutually orthogonal outcomes.
/// Settings are ordered system-basis-major over (HV, DA, RL).
class ProjectorSet {
public:
  ProjectorSet();
  /// Same projectors with the settings reordered: setting k of the result is
  /// setting order[k] of the default set. The static basis helpers below
  /// describe the default order only.
  static ProjectorSet permuted(const std::array<int, kSettingCount>& order);

  const Projector& operator[](int index) const { return projectors_[static_cast<std::size_t>(index)]; }
  const std::array<Projector, kProjectorCount>& all() const { return projectors_; }
  static constexpr int size() { return kProjectorCount; }

  static Basis system_basis(int setting) { return static_cast<Basis>(setting / 3); }
  static Basis environment_basis(int setting) { return static_cast<Basis>(setting % 3); }
  static int setting_index(Basis system, Basis environment)
  {
    return 3 * static_cast<int>(system) + static_cast<int>(environment);
  }
  /// Index of a (setting_label, outcome_label) pair, or -1.
  int find(std::string_view setting_label, std::string_view outcome_label) const;

private:
  std::array<Projector, kProjectorCount> projectors_;
};

ProjectorSet tomography_projectors();

struct CountRecord {
  std::array<std::int64_t, kProjectorCount> counts{};
  double duration_s = 0.0;
  double flux_hz = 0.0;

  std::int64_t total() const;
  std::int64_t setting_total(int setting) const;
};

struct NoiseModel {
  double werner_v = 1.0;
  /// Std (radians) of the random local rotation applied to each photon per stage.
  double drift_sigma = 0.0;
  /// Std (radians) of each wave-plate angle-setting error.
  double waveplate_error_sigma = 0.0;
  /// Also perturb the tomography analyzer plates, drawn per setting and photon.
  bool analyzer_errors = false;
  bool poisson = false;
  std::uint64_t seed = 0;

  static NoiseModel noiseless() { return {}; }
};

/// Tr(projector * rho) clamped to [0, 1]. The projector must be a rank-1
/// orthogonal projector within 1e-10.
double born_probability(const DensityMatrix& rho, const Mat4& projector);

/// All 36 ideal outcome probabilities.
std::array<double, kProjectorCount> born_probabilities(const DensityMatrix& rho,
                                                       const ProjectorSet& projectors);

/// Jones matrix of the QWP-then-HWP analyzer that maps the first ket of
/// `basis` onto H ahead of the polarizing beam splitter. `qwp_error` and
/// `hwp_error` perturb the nominal plate angles.
Mat2 analyzer_unitary(Basis basis, double qwp_error = 0.0, double hwp_error = 0.0);

/// Coincidence counts for every setting, each an independent acquisition of
/// flux_hz * duration_s pairs. Poisson draws when noise.poisson, otherwise the
/// rounded expectation. With noise.analyzer_errors, the analyzer plate angles
/// carry waveplate_error_sigma errors drawn per setting and photon.
CountRecord simulate_counts(const DensityMatrix& rho, double flux_hz, double duration_s,
                            const NoiseModel& noise, RandomStream& rng);

/// Random local rotation of each photon: axis uniform on the sphere, angle
/// ~ Normal(0, noise.drift_sigma). Returns rho unchanged when the sigma is zero.
DensityMatrix drift_state(const DensityMatrix& rho, const NoiseModel& noise, RandomStream& rng);

} // namespace envariance
