#include "envariance/harness.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace envariance {

namespace {

using std::numbers::pi;

double mean_of(const std::vector<double>& v)
{
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v)
{
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double standard_error(const std::vector<double>& v)
{
  return v.size() < 2 ? 0.0 : sample_std(v) / std::sqrt(static_cast<double>(v.size()));
}

WavePlateSetting perturbed(const WavePlateSetting& s, double sigma, RandomStream& rng)
{
  if (!(sigma > 0.0)) return s;
  std::normal_distribution<double> err(0.0, sigma);
  WavePlateSetting out = s;
  out.alpha += err(rng);
  out.beta += err(rng);
  out.gamma += err(rng);
  return out;
}

StageResult simulate_stage(Stage stage, const Mat2& u_s, const Mat2& u_e, bool perturb_s, bool perturb_e,
                           const WavePlateSetting& setting, const ExperimentPlan& plan, std::uint64_t seed)
{
  RandomStream rng(seed);
  const DensityMatrix source = drift_state(werner(plan.noise.werner_v), plan.noise, rng);
  const double sigma = plan.noise.waveplate_error_sigma;
  const Mat2 s = perturb_s ? stack(perturbed(setting, sigma, rng)) : u_s;
  const Mat2 e = perturb_e ? stack(perturbed(setting, sigma, rng)) : u_e;
  const DensityMatrix truth = apply_local(s, e, source);
  CountRecord counts = simulate_counts(truth, plan.flux_hz, plan.duration_s, plan.noise, rng);
  return {stage, counts, DensityMatrix(0.25 * Mat4::Identity()), truth};
}

} // namespace

void ExperimentPlan::validate() const
{
  if (axes.empty() || angles_deg.empty()) throw std::invalid_argument("ExperimentPlan: empty axis or angle list");
  for (double a : angles_deg) {
    if (!(a >= 0.0 && a <= 360.0)) throw std::invalid_argument("ExperimentPlan: angles must lie in [0, 360]");
  }
  if (!(flux_hz > 0.0) || !(duration_s > 0.0)) {
    throw std::invalid_argument("ExperimentPlan: flux and duration must be positive");
  }
  if (!(noise.werner_v >= 0.0 && noise.werner_v <= 1.0) || noise.drift_sigma < 0.0 ||
      noise.waveplate_error_sigma < 0.0) {
    throw std::invalid_argument("ExperimentPlan: invalid noise model");
  }
}

ExperimentPlan ExperimentPlan::noiseless()
{
  ExperimentPlan plan;
  plan.noise = NoiseModel::noiseless();
  return plan;
}

ExperimentPlan ExperimentPlan::calibrated()
{
  ExperimentPlan plan;
  plan.noise.werner_v = kCalibratedWernerV;
  plan.noise.drift_sigma = kCalibratedDriftSigma;
  plan.noise.waveplate_error_sigma = 0.2 * pi / 180.0;
  plan.noise.poisson = true;
  return plan;
}

std::string_view to_string(Stage s)
{
  switch (s) {
  case Stage::I: return "I";
  case Stage::II: return "II";
  case Stage::III: return "III";
  }
  return "?";
}

WavePlateSetting plan_setting(NamedAxis axis, double theta) { return wave_plate_setting(axis, theta); }

StageTriple simulate_three_stages(NamedAxis axis, double theta, const ExperimentPlan& plan, RandomStream& rng)
{
  const WavePlateSetting setting = plan_setting(axis, theta);
  const Mat2 u = stack(setting);
  const Mat2 id = Mat2::Identity();
  std::uint64_t seeds[3];
  for (auto& s : seeds) s = rng();
  return StageTriple{
      axis,
      theta * 180.0 / pi,
      theta,
      setting,
      u,
      simulate_stage(Stage::I, id, id, false, false, setting, plan, seeds[0]),
      simulate_stage(Stage::II, u, id, true, false, setting, plan, seeds[1]),
      simulate_stage(Stage::III, u, u, true, true, setting, plan, seeds[2]),
  };
}

StageTriple run_three_stages(NamedAxis axis, double theta, const ExperimentPlan& plan, RandomStream& rng)
{
  StageTriple t = simulate_three_stages(axis, theta, plan, rng);
  static const ProjectorSet projectors;
  for (StageResult* s : {&t.I, &t.II, &t.III}) s->rho = mle_reconstruct(s->counts, projectors, plan.mle).rho;
  return t;
}

DensityMatrix theoretical_stage3(const DensityMatrix& rho_I, const Mat2& u) { return apply_local(u, u, rho_I); }

DensityMatrix theoretical_stage2(const DensityMatrix& rho_I, const Mat2& u)
{
  return apply_local(u, Mat2::Identity(), rho_I);
}

double source_stability(const std::vector<DensityMatrix>& stage1_states)
{
  if (stage1_states.size() < 3) throw std::invalid_argument("source_stability: need at least 3 states");
  std::vector<double> f;
  for (std::size_t i = 0; i + 1 < stage1_states.size(); ++i) {
    f.push_back(fidelity(stage1_states[i], stage1_states[i + 1]));
  }
  return sample_std(f);
}

double source_stability_bc(const std::vector<ProbabilityDistribution36>& stage1_distributions)
{
  if (stage1_distributions.size() < 3) throw std::invalid_argument("source_stability_bc: need at least 3 distributions");
  std::vector<double> bc;
  for (std::size_t i = 0; i + 1 < stage1_distributions.size(); ++i) {
    bc.push_back(bhattacharyya(stage1_distributions[i], stage1_distributions[i + 1]));
  }
  return sample_std(bc);
}

RandomStream cell_stream(std::uint64_t seed, NamedAxis axis, std::size_t angle_index)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(axis), static_cast<std::uint32_t>(angle_index)};
  return RandomStream(seq);
}

std::vector<StageTriple> simulate_grid(const ExperimentPlan& plan)
{
  plan.validate();
  std::vector<StageTriple> triples;
  triples.reserve(plan.axes.size() * plan.angles_deg.size());
  for (NamedAxis axis : plan.axes) {
    for (std::size_t k = 0; k < plan.angles_deg.size(); ++k) {
      RandomStream rng = cell_stream(plan.seed, axis, k);
      triples.push_back(simulate_three_stages(axis, plan.angles_deg[k] * pi / 180.0, plan, rng));
      triples.back().angle_deg = plan.angles_deg[k];
    }
  }
  return triples;
}

void reconstruct_grid(std::vector<StageTriple>& triples, const MleOptions& mle)
{
  static const ProjectorSet projectors;
  for (auto& t : triples) {
    for (StageResult* s : {&t.I, &t.II, &t.III}) s->rho = mle_reconstruct(s->counts, projectors, mle).rho;
  }
}

EnvarianceReport assemble_report(const std::vector<StageTriple>& triples)
{
  static const ProjectorSet projectors;
  EnvarianceReport report;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<NamedAxis> axis_order;
  for (const auto& t : triples) {
    if (axis_order.empty() || axis_order.back() != t.axis) axis_order.push_back(t.axis);
  }

  std::vector<double> all_F, all_BC, pooled_F_pairs, pooled_BC_pairs, all_dev_F, all_dev_BC;
  for (NamedAxis axis : axis_order) {
    std::vector<double> F, BC, dev_F, dev_BC, pair_F, pair_BC;
    const StageTriple* previous = nullptr;
    for (const auto& t : triples) {
      if (t.axis != axis) continue;
      const auto p1 = normalize_counts(t.I.counts);
      const auto p2 = normalize_counts(t.II.counts);
      const auto p3 = normalize_counts(t.III.counts);
      const DensityMatrix th3 = theoretical_stage3(t.I.rho, t.unitary);
      const DensityMatrix th2 = theoretical_stage2(t.I.rho, t.unitary);

      CellReport c;
      c.axis = t.axis;
      c.angle_deg = t.angle_deg;
      c.F_I_III = fidelity(t.I.rho, t.III.rho);
      c.F_I_II = fidelity(t.I.rho, t.II.rho);
      c.BC_I_III = bhattacharyya(p1, p3);
      c.BC_I_II = bhattacharyya(p1, p2);
      c.F_I_III_theory = fidelity(t.I.rho, th3);
      c.F_I_II_theory = fidelity(t.I.rho, th2);
      c.BC_I_III_theory = bhattacharyya(p1, ideal_distribution(th3, projectors));
      c.BC_I_II_theory = bhattacharyya(p1, ideal_distribution(th2, projectors));
      const bool truth = t.I.rho_true && t.II.rho_true && t.III.rho_true;
      c.F_true_I_III = truth ? fidelity(*t.I.rho_true, *t.III.rho_true) : nan;
      c.F_true_I_II = truth ? fidelity(*t.I.rho_true, *t.II.rho_true) : nan;
      report.cells.push_back(c);

      F.push_back(c.F_I_III);
      BC.push_back(c.BC_I_III);
      dev_F.push_back(c.F_I_III - c.F_I_III_theory);
      dev_BC.push_back(c.BC_I_III - c.BC_I_III_theory);
      if (previous) {
        pair_F.push_back(fidelity(previous->I.rho, t.I.rho));
        pair_BC.push_back(bhattacharyya(normalize_counts(previous->I.counts), p1));
      }
      previous = &t;
    }

    AxisSummary s;
    s.axis = axis;
    s.mean_F = mean_of(F);
    s.F_uncertainty = standard_error(F);
    s.mean_BC = mean_of(BC);
    s.BC_uncertainty = standard_error(BC);
    s.stability_F = sample_std(pair_F);
    s.stability_BC = sample_std(pair_BC);
    s.deviation_F = sample_std(dev_F);
    s.deviation_BC = sample_std(dev_BC);
    report.axes.push_back(s);

    all_F.insert(all_F.end(), F.begin(), F.end());
    all_BC.insert(all_BC.end(), BC.begin(), BC.end());
    all_dev_F.insert(all_dev_F.end(), dev_F.begin(), dev_F.end());
    all_dev_BC.insert(all_dev_BC.end(), dev_BC.begin(), dev_BC.end());
    pooled_F_pairs.insert(pooled_F_pairs.end(), pair_F.begin(), pair_F.end());
    pooled_BC_pairs.insert(pooled_BC_pairs.end(), pair_BC.begin(), pair_BC.end());
  }

  report.mean_F = mean_of(all_F);
  report.F_uncertainty = standard_error(all_F);
  report.mean_BC = mean_of(all_BC);
  report.BC_uncertainty = standard_error(all_BC);
  report.stability_F = sample_std(pooled_F_pairs);
  report.stability_BC = sample_std(pooled_BC_pairs);
  report.deviation_F = sample_std(all_dev_F);
  report.deviation_BC = sample_std(all_dev_BC);
  return report;
}

EnvarianceReport run_experiment(const ExperimentPlan& plan)
{
  auto triples = simulate_grid(plan);
  reconstruct_grid(triples, plan.mle);
  return assemble_report(triples);
}

} // namespace envariance
