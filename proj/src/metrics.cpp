#include "envariance/metrics.hpp"

#include <cmath>
#include <numeric>

namespace envariance {

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma)
{
  return uhlmann_fidelity(rho.matrix(), sigma.matrix());
}

ProbabilityDistribution36::ProbabilityDistribution36(const std::array<double, kProjectorCount>& p) : p_(p)
{
  double sum = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("ProbabilityDistribution36: entries must be finite and non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("ProbabilityDistribution36: entries must sum to 1");
  }
}

double bhattacharyya(const ProbabilityDistribution36& p, const ProbabilityDistribution36& q)
{
  double bc = 0.0;
  for (int i = 0; i < kProjectorCount; ++i) bc += std::sqrt(p[i] * q[i]);
  return std::clamp(bc, 0.0, 1.0);
}

ProbabilityDistribution36 normalize_counts(const CountRecord& c)
{
  const auto total = c.total();
  if (total <= 0) throw std::invalid_argument("normalize_counts: total count must be positive");
  std::array<double, kProjectorCount> p{};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (c.counts[i] < 0) throw std::invalid_argument("normalize_counts: negative count");
    p[i] = static_cast<double>(c.counts[i]) / static_cast<double>(total);
  }
  return ProbabilityDistribution36(p);
}

ProbabilityDistribution36 ideal_distribution(const DensityMatrix& rho, const ProjectorSet& projectors)
{
  auto p = born_probabilities(rho, projectors);
  // Each setting sums to one up to round-off; renormalize the whole.
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= sum;
  return ProbabilityDistribution36(p);
}

} // namespace envariance
