#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>

namespace envariance::optimize {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadOptions {
  int max_iterations = 5000;
  /// Stop once the simplex function spread falls below this value...
  double f_tolerance = 1e-14;
  /// ...and its vertices lie within this distance of the best one.
  double x_tolerance = 1e-10;
  /// Stop immediately once the best value drops to or below this target.
  double f_target = -std::numeric_limits<double>::infinity();
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Downhill simplex with the standard reflection/expansion/contraction/shrink
/// coefficients (1, 2, 1/2, 1/2). `step` sets the initial simplex edge per coordinate.
MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& start,
                           const Eigen::VectorXd& step, const NelderMeadOptions& options = {});

/// Brent's parabolic/golden-section minimizer on [lo, hi].
MinimizeResult brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                              double tolerance = 1e-8, int max_iterations = 200);

/// Brent-Dekker root bracketed by [lo, hi]; throws ConvergenceFailure if
/// f(lo) and f(hi) share a sign or the iteration budget is exhausted.
double brent_root(const std::function<double(double)>& f, double lo, double hi,
                  double tolerance = 1e-14, int max_iterations = 200);

} // namespace envariance::optimize
