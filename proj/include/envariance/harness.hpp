#pragma once

#include "envariance/metrics.hpp"
#include "envariance/polarization_optics.hpp"
#include "envariance/tomography.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace envariance {

/// Drift sigma (radians) giving a std of about 8e-4 in the fidelity between
/// consecutive drifted copies of Werner(0.98267).
inline constexpr double kCalibratedDriftSigma = 0.028;
inline constexpr double kCalibratedWernerV = 0.98267;

struct ExperimentPlan {
  std::vector<NamedAxis> axes{NamedAxis::x, NamedAxis::y, NamedAxis::z, NamedAxis::m};
  std::vector<double> angles_deg{0, 30, 60, 90, 120, 150, 180, 210, 240, 270, 300, 330, 360};
  double flux_hz = 5400.0;
  double duration_s = 5.0;
  NoiseModel noise;
  std::uint64_t seed = 20190513;
  MleOptions mle;

  /// Throws std::invalid_argument for empty lists, angles outside [0, 360] or
  /// non-positive flux/duration.
  void validate() const;

  static ExperimentPlan noiseless();
  /// Werner 0.98267, calibrated drift, 0.2 degree errors on the rotation
  /// plates, Poisson counts.
  static ExperimentPlan calibrated();
};

enum class Stage { I, II, III };
std::string_view to_string(Stage s);

struct StageResult {
  Stage stage;
  CountRecord counts;
  DensityMatrix rho;                     ///< reconstructed
  std::optional<DensityMatrix> rho_true; ///< simulation ground truth, when known
};

struct StageTriple {
  NamedAxis axis;
  double angle_deg = 0.0;
  double theta = 0.0; ///< radians
  WavePlateSetting setting;
  Mat2 unitary; ///< ideal stack unitary for the nominal setting
  StageResult I, II, III;
};

/// Nominal plates for a rotation: Table I for x/y/z, numerical decomposition for m.
WavePlateSetting plan_setting(NamedAxis axis, double theta);

/// Draws one drifted source state per stage, applies the (perturbed) stack to
/// the system photon in stage II and to both photons in stage III, simulates
/// counts and reconstructs each stage.
StageTriple run_three_stages(NamedAxis axis, double theta, const ExperimentPlan& plan, RandomStream& rng);

/// Simulation and ground truth only; rho is left maximally mixed until
/// reconstruct_grid runs.
StageTriple simulate_three_stages(NamedAxis axis, double theta, const ExperimentPlan& plan, RandomStream& rng);

/// (u (x) u) rho_I (u (x) u)^dagger
DensityMatrix theoretical_stage3(const DensityMatrix& rho_I, const Mat2& u);
/// (u (x) I) rho_I (u (x) I)^dagger
DensityMatrix theoretical_stage2(const DensityMatrix& rho_I, const Mat2& u);

/// Sample standard deviation of F(rho_i, rho_{i+1}) over consecutive pairs.
double source_stability(const std::vector<DensityMatrix>& stage1_states);
/// Same statistic for the Bhattacharyya coefficient of consecutive count distributions.
double source_stability_bc(const std::vector<ProbabilityDistribution36>& stage1_distributions);

struct CellReport {
  NamedAxis axis;
  double angle_deg = 0.0;
  double F_I_III = 0.0;
  double F_I_II = 0.0;
  double BC_I_III = 0.0;
  double BC_I_II = 0.0;
  double F_I_III_theory = 0.0;
  double BC_I_III_theory = 0.0;
  double F_I_II_theory = 0.0;
  double BC_I_II_theory = 0.0;
  /// Fidelities of the ground-truth states (NaN when unknown).
  double F_true_I_III = 0.0;
  double F_true_I_II = 0.0;
};

struct AxisSummary {
  NamedAxis axis;
  double mean_F = 0.0;
  double F_uncertainty = 0.0;
  double mean_BC = 0.0;
  double BC_uncertainty = 0.0;
  double stability_F = 0.0;
  double stability_BC = 0.0;
  double deviation_F = 0.0;
  double deviation_BC = 0.0;
};

struct EnvarianceReport {
  std::vector<CellReport> cells;
  std::vector<AxisSummary> axes;
  double mean_F = 0.0;
  double F_uncertainty = 0.0;
  double mean_BC = 0.0;
  double BC_uncertainty = 0.0;
  /// Pooled over consecutive stage-I pairs within each axis run.
  double stability_F = 0.0;
  double stability_BC = 0.0;
  /// Std of F_expt(I,III) - F_theory(I,III) (and the BC analogue) over all cells.
  double deviation_F = 0.0;
  double deviation_BC = 0.0;
};

/// Per-cell random stream seeded from (seed, axis, angle index).
RandomStream cell_stream(std::uint64_t seed, NamedAxis axis, std::size_t angle_index);

/// Simulated stage triples for the full grid, axis-major.
std::vector<StageTriple> simulate_grid(const ExperimentPlan& plan);

/// Reconstructs every stage of every triple in place.
void reconstruct_grid(std::vector<StageTriple>& triples, const MleOptions& mle);

/// Scores reconstructed triples (axis-major, angle order preserved).
EnvarianceReport assemble_report(const std::vector<StageTriple>& triples);

EnvarianceReport run_experiment(const ExperimentPlan& plan);

} // namespace envariance
