#include "envariance/tomography.hpp"

#include <cmath>

namespace envariance {

namespace {

constexpr double kProbabilityFloor = 1e-12;

std::array<double, kProjectorCount> setting_frequencies(const CountRecord& counts)
{
  std::array<double, kProjectorCount> f{};
  for (int s = 0; s < kSettingCount; ++s) {
    const auto total = counts.setting_total(s);
    if (total <= 0) {
      throw std::invalid_argument("tomography: every analyzer setting needs a positive count");
    }
    for (int k = 0; k < kOutcomesPerSetting; ++k) {
      const auto j = static_cast<std::size_t>(s * kOutcomesPerSetting + k);
      if (counts.counts[j] < 0) throw std::invalid_argument("tomography: negative count");
      f[j] = static_cast<double>(counts.counts[j]) / static_cast<double>(total);
    }
  }
  return f;
}

Mat2 pauli(int k)
{
  switch (k) {
  case 1: return pauli_x();
  case 2: return pauli_y();
  case 3: return pauli_z();
  default: return Mat2::Identity();
  }
}

} // namespace

double trace_distance(const Mat4& a, const Mat4& b)
{
  const Mat4 d = a - b;
  Eigen::SelfAdjointEigenSolver<Mat4> solver(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double log_likelihood(const CountRecord& counts, const ProjectorSet& projectors, const Mat4& rho)
{
  double sum = 0.0;
  for (const auto& p : projectors.all()) {
    const auto n = counts.counts[static_cast<std::size_t>(p.index)];
    if (n == 0) continue;
    const double prob = std::max(p.ket.dot(rho * p.ket).real(), kProbabilityFloor);
    sum += static_cast<double>(n) * std::log(prob);
  }
  return sum;
}

Mat4 linear_inversion(const CountRecord& counts, const ProjectorSet& projectors)
{
  if (counts.total() <= 0) throw std::invalid_argument("linear_inversion: all counts are zero");
  const auto f = setting_frequencies(counts);

  // rho = (I + sum_{(a,b) != (0,0)} r_ab sigma_a (x) sigma_b) / 4
  std::array<Mat4, 16> basis;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) basis[static_cast<std::size_t>(4 * a + b)] = kron2(pauli(a), pauli(b));
  }
  Eigen::MatrixXd design(kProjectorCount, 15);
  Eigen::VectorXd rhs(kProjectorCount);
  for (const auto& p : projectors.all()) {
    for (int k = 1; k < 16; ++k) {
      design(p.index, k - 1) = 0.25 * p.ket.dot(basis[static_cast<std::size_t>(k)] * p.ket).real();
    }
    rhs(p.index) = f[static_cast<std::size_t>(p.index)] - 0.25;
  }
  const Eigen::VectorXd r = design.colPivHouseholderQr().solve(rhs);
  Mat4 rho = 0.25 * Mat4::Identity();
  for (int k = 1; k < 16; ++k) rho += 0.25 * r(k - 1) * basis[static_cast<std::size_t>(k)];
  return 0.5 * (rho + rho.adjoint());
}

TomographyResult mle_reconstruct(const CountRecord& counts, const ProjectorSet& projectors,
                                 const MleOptions& options)
{
  if (options.max_iter < 1 || !(options.tol > 0.0)) {
    throw std::invalid_argument("mle_reconstruct: need max_iter >= 1 and tol > 0");
  }
  if (counts.total() <= 0) throw std::invalid_argument("mle_reconstruct: all counts are zero");
  const auto f = setting_frequencies(counts);

  Mat4 rho = options.initial ? options.initial->matrix() : Mat4(0.25 * Mat4::Identity());
  TomographyResult result{DensityMatrix(rho), log_likelihood(counts, projectors, rho), 0, false, {}};
  if (options.record_trace) result.trace.push_back(result.log_likelihood);

  for (int it = 1; it <= options.max_iter; ++it) {
    Mat4 r = Mat4::Zero();
    for (const auto& p : projectors.all()) {
      const double fj = f[static_cast<std::size_t>(p.index)];
      if (fj == 0.0) continue;
      const double prob = std::max(p.ket.dot(rho * p.ket).real(), kProbabilityFloor);
      r += (fj / prob) * p.matrix;
    }
    Mat4 next = r * rho * r;
    next = 0.5 * (next + next.adjoint());
    next /= next.trace().real();

    const double step = trace_distance(next, rho);
    rho = next;
    result.iterations = it;
    result.log_likelihood = log_likelihood(counts, projectors, rho);
    if (options.record_trace) result.trace.push_back(result.log_likelihood);
    if (step < options.tol) {
      result.converged = true;
      break;
    }
  }
  result.rho = DensityMatrix(rho);
  return result;
}

} // namespace envariance
