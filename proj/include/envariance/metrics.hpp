#pragma once

#include "envariance/measurement_sim.hpp"

#include <algorithm>
#include <array>

namespace envariance {

/// Eigenvalues below this are treated as zero inside fidelity square roots.
/// Without it, round-off eigenvalues of rank-deficient states (~1e-17) turn
/// into ~1e-8 spurious contributions once square-rooted.
inline constexpr double kFidelityEigenFloor = 1e-14;

/// {Tr[(sqrt(rho) sigma sqrt(rho))^(1/2)]}^2 for Hermitian PSD inputs,
/// evaluated as the squared nuclear norm of sqrt(rho) sqrt(sigma).
template <typename DerivedA, typename DerivedB>
double uhlmann_fidelity(const Eigen::MatrixBase<DerivedA>& rho, const Eigen::MatrixBase<DerivedB>& sigma)
{
  using Plain = typename DerivedA::PlainObject;
  const Plain a = psd_sqrt(rho, kFidelityEigenFloor);
  const Plain b = psd_sqrt(sigma, kFidelityEigenFloor);
  const Plain prod = a * b;
  Eigen::JacobiSVD<Plain> svd(prod);
  const double root = svd.singularValues().sum();
  return std::clamp(root * root, 0.0, 1.0);
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// 36 non-negative weights summing to 1 within 1e-9.
class ProbabilityDistribution36 {
public:
  explicit ProbabilityDistribution36(const std::array<double, kProjectorCount>& p);

  double operator[](int i) const { return p_[static_cast<std::size_t>(i)]; }
  const std::array<double, kProjectorCount>& values() const { return p_; }

private:
  std::array<double, kProjectorCount> p_;
};

/// Sum_i sqrt(p_i q_i).
double bhattacharyya(const ProbabilityDistribution36& p, const ProbabilityDistribution36& q);

/// Counts divided by the grand total over all 36 entries.
ProbabilityDistribution36 normalize_counts(const CountRecord& c);

/// The distribution a state would produce with equal pairs per setting:
/// Born probabilities divided by the number of settings.
ProbabilityDistribution36 ideal_distribution(const DensityMatrix& rho, const ProjectorSet& projectors);

} // namespace envariance
