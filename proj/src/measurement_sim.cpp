#include "envariance/measurement_sim.hpp"

#include "envariance/polarization_optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace envariance {

namespace {

using std::numbers::pi;

constexpr char kKetLetters[3][2] = {{'H', 'V'}, {'D', 'A'}, {'R', 'L'}};

struct AnalyzerAngles {
  double qwp;
  double hwp;
};

constexpr AnalyzerAngles nominal_analyzer(Basis b)
{
  switch (b) {
  case Basis::HV: return {0.0, 0.0};
  case Basis::DA: return {pi / 4, pi / 8};
  case Basis::RL: return {pi / 4, 0.0};
  }
  return {0.0, 0.0};
}

std::int64_t draw_count(double mean, bool poisson, RandomStream& rng)
{
  if (!(mean > 0.0)) return 0;
  if (!poisson) return std::llround(mean);
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

} // namespace

std::string_view to_string(Basis b)
{
  switch (b) {
  case Basis::HV: return "HV";
  case Basis::DA: return "DA";
  case Basis::RL: return "RL";
  }
  return "??";
}

std::array<Vec2, 2> basis_kets(Basis b)
{
  switch (b) {
  case Basis::HV: return {ket::H(), ket::V()};
  case Basis::DA: return {ket::D(), ket::A()};
  case Basis::RL: return {ket::R(), ket::L()};
  }
  throw std::invalid_argument("basis_kets: unknown basis");
}

ProjectorSet::ProjectorSet()
{
  for (int setting = 0; setting < kSettingCount; ++setting) {
    const Basis bs = system_basis(setting);
    const Basis be = environment_basis(setting);
    const auto ks = basis_kets(bs);
    const auto ke = basis_kets(be);
    std::string label = std::string(to_string(bs)) + "_" + std::string(to_string(be));
    for (int outcome = 0; outcome < kOutcomesPerSetting; ++outcome) {
      const int a = outcome / 2;
      const int b = outcome % 2;
      Projector& p = projectors_[static_cast<std::size_t>(setting * 4 + outcome)];
      p.index = setting * 4 + outcome;
      p.setting = setting;
      p.outcome = outcome;
      p.setting_label = label;
      p.outcome_label = {kKetLetters[static_cast<int>(bs)][a], kKetLetters[static_cast<int>(be)][b]};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          p.ket(2 * i + j) = ks[a](i) * ke[b](j);
        }
      }
      p.matrix = p.ket * p.ket.adjoint();
    }
  }
}

ProjectorSet ProjectorSet::permuted(const std::array<int, kSettingCount>& order)
{
  std::array<bool, kSettingCount> used{};
  for (int k : order) {
    if (k < 0 || k >= kSettingCount || used[static_cast<std::size_t>(k)]) {
      throw std::invalid_argument("ProjectorSet::permuted: order is not a permutation of the settings");
    }
    used[static_cast<std::size_t>(k)] = true;
  }
  const ProjectorSet base;
  ProjectorSet out;
  for (int k = 0; k < kSettingCount; ++k) {
    for (int o = 0; o < kOutcomesPerSetting; ++o) {
      Projector p = base[order[static_cast<std::size_t>(k)] * kOutcomesPerSetting + o];
      p.setting = k;
      p.index = k * kOutcomesPerSetting + o;
      out.projectors_[static_cast<std::size_t>(p.index)] = p;
    }
  }
  return out;
}

int ProjectorSet::find(std::string_view setting_label, std::string_view outcome_label) const
{
  for (const auto& p : projectors_) {
    if (p.setting_label == setting_label && p.outcome_label == outcome_label) return p.index;
  }
  return -1;
}

ProjectorSet tomography_projectors() { return ProjectorSet(); }

std::int64_t CountRecord::total() const
{
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t CountRecord::setting_total(int setting) const
{
  const auto first = counts.begin() + setting * kOutcomesPerSetting;
  return std::accumulate(first, first + kOutcomesPerSetting, std::int64_t{0});
}

double born_probability(const DensityMatrix& rho, const Mat4& projector)
{
  if (!projector.allFinite() || hermiticity_error(projector) > 1e-10 ||
      (projector * projector - projector).cwiseAbs().maxCoeff() > 1e-10 ||
      std::abs(projector.trace() - Complex(1.0)) > 1e-10) {
    throw std::invalid_argument("born_probability: not a rank-1 projector");
  }
  const double p = (projector * rho.matrix()).trace().real();
  return std::clamp(p, 0.0, 1.0);
}

std::array<double, kProjectorCount> born_probabilities(const DensityMatrix& rho,
                                                       const ProjectorSet& projectors)
{
  std::array<double, kProjectorCount> out{};
  for (const auto& p : projectors.all()) {
    const double v = p.ket.dot(rho.matrix() * p.ket).real();
    out[static_cast<std::size_t>(p.index)] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

Mat2 analyzer_unitary(Basis basis, double qwp_error, double hwp_error)
{
  const AnalyzerAngles a = nominal_analyzer(basis);
  return hwp(a.hwp + hwp_error) * qwp(a.qwp + qwp_error);
}

CountRecord simulate_counts(const DensityMatrix& rho, double flux_hz, double duration_s,
                            const NoiseModel& noise, RandomStream& rng)
{
  if (!(flux_hz > 0.0) || !(duration_s > 0.0)) {
    throw std::invalid_argument("simulate_counts: flux and duration must be positive");
  }
  CountRecord record;
  record.flux_hz = flux_hz;
  record.duration_s = duration_s;
  const double pairs = flux_hz * duration_s;

  static const ProjectorSet projectors;
  const bool plate_errors = noise.analyzer_errors && noise.waveplate_error_sigma > 0.0;
  std::normal_distribution<double> plate_noise(0.0, plate_errors ? noise.waveplate_error_sigma : 1.0);

  for (int setting = 0; setting < kSettingCount; ++setting) {
    std::array<double, kOutcomesPerSetting> probs{};
    if (plate_errors) {
      const double qs = plate_noise(rng), hs = plate_noise(rng);
      const double qe = plate_noise(rng), he = plate_noise(rng);
      const Mat4 a = kron2(analyzer_unitary(ProjectorSet::system_basis(setting), qs, hs),
                           analyzer_unitary(ProjectorSet::environment_basis(setting), qe, he));
      const Mat4 rotated = a * rho.matrix() * a.adjoint();
      for (int k = 0; k < kOutcomesPerSetting; ++k) probs[static_cast<std::size_t>(k)] = rotated(k, k).real();
    } else {
      for (int k = 0; k < kOutcomesPerSetting; ++k) {
        const Vec4& v = projectors[setting * 4 + k].ket;
        probs[static_cast<std::size_t>(k)] = v.dot(rho.matrix() * v).real();
      }
    }
    for (int k = 0; k < kOutcomesPerSetting; ++k) {
      const double p = std::max(probs[static_cast<std::size_t>(k)], 0.0);
      record.counts[static_cast<std::size_t>(setting * 4 + k)] = draw_count(pairs * p, noise.poisson, rng);
    }
  }
  return record;
}

DensityMatrix drift_state(const DensityMatrix& rho, const NoiseModel& noise, RandomStream& rng)
{
  if (!(noise.drift_sigma > 0.0)) return rho;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto random_rotation = [&] {
    Eigen::Vector3d axis;
    do {
      axis = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    } while (axis.norm() < 1e-12);
    return su2_rotation(AxisVector::normalized(axis), noise.drift_sigma * gauss(rng));
  };
  const Mat2 us = random_rotation();
  const Mat2 ue = random_rotation();
  return apply_local(us, ue, rho);
}

} // namespace envariance
