#pragma once

#include "envariance/measurement_sim.hpp"
#include "envariance/polarization_optics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace envariance {

/// -cos(2 theta): the singlet correlation for bases 2 theta apart on the Bloch sphere.
double e_qm(double theta);

/// Generalized correlation E(theta, n) = p^n - q^n on a uniform grid over [0, pi/2].
///
/// p and q are the moduli of the equal- and unequal-outcome amplitudes; they
/// satisfy p^n + q^n = 1 and p'^2 + q'^2 = c, with p(0) = 0 and p(pi/2) = 1.
struct CorrelationCurve {
  double n = 2.0;
  double c = 1.0;
  std::vector<double> theta_grid;
  std::vector<double> values;
  std::vector<double> p, q, dp, dq;

  /// Cubic Hermite interpolation of E; theta is clamped to [0, pi/2].
  double at(double theta) const;
  double slope_at(int i) const;
};

/// Shoots on c so that the integrated p meets the symmetric midpoint
/// p(pi/4) = q(pi/4) = 2^(-1/n), then mirrors the solution onto (pi/4, pi/2].
/// Throws ConvergenceFailure when the shooting residual exceeds 1e-8.
CorrelationCurve solve_son(double n, int grid_size);

/// Angle theta between the two analyzer directions (half the Bloch-sphere
/// angle) after rotating one photon's polarization by phi. Uses
/// 2 theta = pi - |pi - 2 phi| on phi reduced modulo pi, so the result lies
/// in [0, pi/2], is pi-periodic and symmetric about phi = pi.
double phi_to_theta(double phi);

/// A (rotation axis, measurement basis) pairing with the axis orthogonal to the basis.
struct Combo {
  NamedAxis axis = NamedAxis::z;
  Basis basis = Basis::DA;

  /// "[Z,(D,A)]" style label.
  std::string label() const;
  bool operator==(const Combo&) const = default;
};

/// [Z,(D,A)], [Z,(R,L)], [Y,(D,A)], [Y,(H,V)], [X,(R,L)], [X,(H,V)]
const std::vector<Combo>& standard_combos();
Combo parse_combo(std::string_view label);

struct CorrelationSample {
  double phi = 0.0; ///< polarization rotation angle, half the Bloch rotation angle
  double E = 0.0;
  double sigma_E = 0.0;
  Combo combo;
};

/// E = (n_same - n_diff) / n_total from the combo's basis-basis setting, with
/// sigma_E = 2 sqrt(n_same n_diff / n_total^3), floored at 1/n_total so that
/// perfectly correlated data keep a finite weight.
CorrelationSample extract_correlation(const CountRecord& counts, const Combo& combo, double phi);

/// Standard quantum-mechanical correlation of rho after rotating the first
/// photon by the Bloch angle 2 phi about the combo axis, both photons analyzed
/// in the combo basis.
double qm_correlation(const Combo& combo, double phi, const Mat4& rho);

/// E(phi, n, |psi->) + E(phi, 2, rho) - E(phi, 2, |psi->).
double son_model(const CorrelationCurve& curve, const Combo& combo, double phi, const Mat4& rho);

/// rho = T T^dagger / Tr(T T^dagger) with T lower triangular: 4 real
/// diagonal entries followed by the real and imaginary parts of the 6
/// sub-diagonal ones.
Mat4 state_from_params(const Eigen::VectorXd& params);
Eigen::VectorXd params_from_state(const DensityMatrix& rho);

struct SonFitOptions {
  double n_min = 1.2;
  double n_max = 3.0;
  int grid_size = 721;
  int restarts = 3;
  int inner_iterations = 4000;
  double n_tolerance = 1e-6;
  std::optional<DensityMatrix> initial;
};

struct ComboFit {
  Combo combo;
  double n = 2.0;
  double objective = 0.0;
  int samples = 0;
  Eigen::VectorXd params;
  Mat4 rho;
};

struct SonFitResult {
  double n = 2.0;
  /// Sample standard deviation of the per-combo n values (0 for one combo).
  double n_uncertainty = 0.0;
  std::vector<double> per_combo_n;
  std::vector<ComboFit> fits;
  /// Sum of the per-combo objectives L.
  double objective = 0.0;
};

/// Fits n and a state per combo by minimizing
/// L = sum_i (son_model(phi_i) - E_i)^2 / sigma_i^2.
/// Needs at least 5 samples for every combo present. Throws ConvergenceFailure
/// when the minimization does not settle.
SonFitResult son_fit(const std::vector<CorrelationSample>& samples, const SonFitOptions& options = {});

} // namespace envariance
