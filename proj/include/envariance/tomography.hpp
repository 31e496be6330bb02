#pragma once

#include "envariance/measurement_sim.hpp"

#include <optional>
#include <vector>

namespace envariance {

struct MleOptions {
  int max_iter = 5000;
  /// Trace distance between consecutive iterates that ends the iteration.
  double tol = 1e-10;
  /// Keep the log-likelihood of every iterate in TomographyResult::trace.
  bool record_trace = false;
  /// Starting point; the maximally mixed state when empty.
  std::optional<DensityMatrix> initial;
};

struct TomographyResult {
  DensityMatrix rho;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

/// Sum over projectors of n_j log Tr(Pi_j rho); zero-count terms vanish.
double log_likelihood(const CountRecord& counts, const ProjectorSet& projectors, const Mat4& rho);

/// Unconstrained least-squares fit of a Hermitian unit-trace matrix to the
/// per-setting frequencies. The result need not be positive semidefinite.
Mat4 linear_inversion(const CountRecord& counts, const ProjectorSet& projectors);

/// Iterative R rho R maximum-likelihood reconstruction. Running out of
/// iterations is reported through `converged`, not an exception.
TomographyResult mle_reconstruct(const CountRecord& counts, const ProjectorSet& projectors,
                                 const MleOptions& options = {});

/// Half the trace norm of the difference of two Hermitian matrices.
double trace_distance(const Mat4& a, const Mat4& b);

} // namespace envariance
