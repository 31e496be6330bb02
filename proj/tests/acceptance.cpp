// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include "envariance/cli.hpp"
#include "envariance/harness.hpp"
#include "envariance/io.hpp"
#include "envariance/metrics.hpp"
#include "envariance/son_theory.hpp"
#include "envariance/tomography.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>

using namespace envariance;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kTrueFidelityTol = 1e-12;
constexpr double kNoiselessFloor = 0.9999;
constexpr double kNoiselessPairs = 1e6;
constexpr double kTableTol = 1e-8;
constexpr double kClosedFormTol = 1e-10;
constexpr double kCos2Tol = 0.02;
constexpr double kBellTol = 1e-10;
constexpr double kPoissonPairsPerSetting = 27000;
constexpr int kPoissonSeeds = 50;
constexpr double kPoissonP5Floor = 0.995;
constexpr double kLikelihoodSlack = 1e-12;
constexpr double kTargetStability = 0.0008;
constexpr double kStabilityFactor = 2.0;
constexpr double kDeviationFactor = 5.0;
constexpr double kSonCurveTol = 1e-6;
constexpr double kSonBoundaryTol = 1e-8;
constexpr double kSonNormTol = 1e-8;
constexpr double kSonSpeedTol = 1e-6;
constexpr double kFitLo = 1.97;
constexpr double kFitHi = 2.03;
constexpr double kFitUncertainty = 0.03;
constexpr int kFitSeeds = 10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body)
{
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && seconds > limit_s) {
    o.pass = false;
    o.detail += fmt("; runtime %.1f s exceeds %.0f s", seconds, limit_s);
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d %s: %s [%s] (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), seconds);
  std::fflush(stdout);
}

CountRecord counts_for(const DensityMatrix& rho, bool poisson, std::uint64_t seed)
{
  NoiseModel noise;
  noise.poisson = poisson;
  RandomStream rng(seed);
  return simulate_counts(rho, kPoissonPairsPerSetting, 1.0, noise, rng);
}

Mat4 random_density(std::mt19937_64& rng)
{
  std::normal_distribution<double> g;
  Mat4 a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = Complex(g(rng), g(rng));
  const Mat4 m = a * a.adjoint();
  return m / m.trace().real();
}

EnvarianceReport noiseless_report;

Outcome singlet_envariance()
{
  ExperimentPlan plan = ExperimentPlan::noiseless();
  plan.duration_s = 5.0;
  plan.flux_hz = kNoiselessPairs / plan.duration_s;
  auto triples = simulate_grid(plan);
  double worst_true = 0.0;
  for (const auto& t : triples) {
    worst_true = std::max(worst_true, std::abs(fidelity(*t.I.rho_true, *t.III.rho_true) - 1.0));
  }
  reconstruct_grid(triples, plan.mle);
  noiseless_report = assemble_report(triples);
  double min_f = 1.0;
  for (const auto& c : noiseless_report.cells) min_f = std::min(min_f, c.F_I_III);
  const bool pass = triples.size() == 52 && worst_true <= kTrueFidelityTol && min_f >= kNoiselessFloor;
  return {pass, fmt("%zu cells, max |F_true(I,III)-1| = %.2e (tol %.0e), min F(I,III) = %.6f (floor %.4f)",
                    triples.size(), worst_true, kTrueFidelityTol, min_f, kNoiselessFloor)};
}

Outcome table_consistency()
{
  int plus = 0, minus = 0, pairs = 0;
  double worst = 0.0;
  for (NamedAxis axis : {NamedAxis::x, NamedAxis::y, NamedAxis::z}) {
    for (int k = 0; k <= 12; ++k) {
      const double t = 30.0 * k * pi / 180;
      const Mat2 s = stack(table1_setting(axis, t));
      const double dp = phase_invariant_distance(s, su2_rotation(axis_vector(axis), t));
      const double dm = phase_invariant_distance(s, su2_rotation(axis_vector(axis), -t));
      plus += dp < kTableTol;
      minus += dm < kTableTol;
      worst = std::max(worst, kTableRotationSign > 0 ? dp : dm);
      ++pairs;
    }
  }
  const bool uniform = (plus == pairs) != (minus == pairs);
  const int sign = plus == pairs ? 1 : -1;
  return {pairs == 39 && uniform && sign == kTableRotationSign && worst < kTableTol,
          fmt("%d pairs, %d match s=+1, %d match s=-1, max distance at s=%+d is %.2e (tol %.0e)", pairs, plus, minus,
              kTableRotationSign, worst, kTableTol)};
}

Outcome fidelity_forms()
{
  double worst = 0.0;
  for (double v : {0.0, 0.5, 0.98267, 1.0}) {
    worst = std::max(worst, std::abs(fidelity(singlet_density(), werner(v)) - (1 + 3 * v) / 4));
  }
  double worst_cos = 0.0;
  for (const auto& c : noiseless_report.cells) {
    worst_cos = std::max(worst_cos, std::abs(c.F_I_II - std::pow(std::cos(c.angle_deg * pi / 360), 2)));
  }
  const bool pass = !noiseless_report.cells.empty() && worst <= kClosedFormTol && worst_cos <= kCos2Tol;
  return {pass, fmt("max Werner error %.2e (tol %.0e), max |F(I,II)-cos^2(theta/2)| %.4f over %zu cells (tol %.2f)",
                    worst, kClosedFormTol, worst_cos, noiseless_report.cells.size(), kCos2Tol)};
}

Outcome bell_overlap()
{
  const ProjectorSet set;
  const double bc = bhattacharyya(ideal_distribution(singlet_density(), set),
                                  ideal_distribution(DensityMatrix::from_pure(psi_plus()), set));
  const double err = std::abs(bc - 7.0 / 9.0);
  return {err <= kBellTol, fmt("BC = %.12f, |BC-7/9| = %.2e (tol %.0e)", bc, err, kBellTol)};
}

Outcome mle_correctness()
{
  const ProjectorSet set;
  std::mt19937_64 gen(20190513);

  bool monotone = true;
  for (int k = 0; k < 10; ++k) {
    MleOptions o;
    o.record_trace = true;
    const auto r = mle_reconstruct(counts_for(DensityMatrix(random_density(gen)), true, 700 + k), set, o);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      if (r.trace[i] < r.trace[i - 1] - kLikelihoodSlack * std::abs(r.trace[i - 1])) monotone = false;
    }
  }

  double min_noiseless = 1.0;
  std::vector<DensityMatrix> truths{singlet_density(), werner(kCalibratedWernerV)};
  for (int k = 0; k < 5; ++k) truths.emplace_back(random_density(gen));
  for (const auto& t : truths) {
    min_noiseless = std::min(min_noiseless, fidelity(mle_reconstruct(counts_for(t, false, 0), set).rho, t));
  }

  const DensityMatrix truth = werner(kCalibratedWernerV);
  std::vector<double> f;
  for (int seed = 1; seed <= kPoissonSeeds; ++seed) {
    f.push_back(fidelity(mle_reconstruct(counts_for(truth, true, static_cast<std::uint64_t>(seed)), set).rho, truth));
  }
  std::sort(f.begin(), f.end());
  // Nearest-rank 5th percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.05 * kPoissonSeeds)) - 1;
  const double p5 = f[rank];

  const bool pass = monotone && min_noiseless >= kNoiselessFloor && p5 >= kPoissonP5Floor;
  return {pass, fmt("likelihood monotone: %s; min noiseless F = %.6f (floor %.4f); Poisson Werner(%.5f) "
                    "5th percentile F over %d seeds = %.5f (floor %.3f), median %.5f",
                    monotone ? "yes" : "no", min_noiseless, kNoiselessFloor, kCalibratedWernerV, kPoissonSeeds, p5,
                    kPoissonP5Floor, f[f.size() / 2])};
}

Outcome table2_regime()
{
  NoiseModel drift;
  drift.drift_sigma = kCalibratedDriftSigma;
  RandomStream rng(31);
  std::vector<DensityMatrix> copies;
  for (int k = 0; k < 2000; ++k) copies.push_back(drift_state(werner(kCalibratedWernerV), drift, rng));
  const double truth_stability = source_stability(copies);

  const auto r = run_experiment(ExperimentPlan::calibrated());
  const double ratio = r.deviation_F / r.stability_F;
  const bool stab_ok =
      truth_stability >= kTargetStability / kStabilityFactor && truth_stability <= kTargetStability * kStabilityFactor;
  const bool f_ok = r.mean_F >= 0.99 && r.mean_F <= 1.0;
  const bool bc_ok = r.mean_BC >= 0.999 && r.mean_BC <= 1.0;
  const bool dev_ok = ratio >= 1.0 / kDeviationFactor && ratio <= kDeviationFactor;
  return {stab_ok && f_ok && bc_ok && dev_ok,
          fmt("source stability std %.5f (target %.4f, x%.0f); F(I,III) = %.5f +- %.5f; BC(I,III) = %.6f +- %.6f; "
              "deviation std %.5f vs reconstructed stability std %.5f, ratio %.2f (within x%.0f)",
              truth_stability, kTargetStability, kStabilityFactor, r.mean_F, r.F_uncertainty, r.mean_BC,
              r.BC_uncertainty, r.deviation_F, r.stability_F, ratio, kDeviationFactor)};
}

Outcome son_solver()
{
  const auto two = solve_son(2.0, 256);
  double curve_err = 0.0;
  for (std::size_t i = 0; i < two.values.size(); ++i) {
    curve_err = std::max(curve_err, std::abs(two.values[i] - e_qm(two.theta_grid[i])));
  }
  double boundary = 0.0, norm = 0.0, speed = 0.0;
  for (double n : {1.0, 1.5, 2.0, 5.0, 10.0}) {
    const auto c = solve_son(n, 721);
    boundary = std::max({boundary, std::abs(c.p.front()), std::abs(c.q.front() - 1.0), std::abs(c.p.back() - 1.0),
                         std::abs(c.q.back()), std::abs(c.values.front() + 1.0), std::abs(c.values.back() - 1.0)});
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      norm = std::max(norm, std::abs(std::pow(c.p[i], n) + std::pow(c.q[i], n) - 1.0));
      speed = std::max(speed, std::abs(c.dp[i] * c.dp[i] + c.dq[i] * c.dq[i] - c.c) / c.c);
    }
  }
  const bool pass = curve_err <= kSonCurveTol && boundary <= kSonBoundaryTol && norm <= kSonNormTol &&
                    speed <= kSonSpeedTol;
  return {pass, fmt("max |E(theta,2)+cos 2theta| = %.2e (tol %.0e); boundary %.2e (tol %.0e); "
                    "max |p^n+q^n-1| = %.2e (tol %.0e); max rel |p'^2+q'^2-c| = %.2e (tol %.0e)",
                    curve_err, kSonCurveTol, boundary, kSonBoundaryTol, norm, kSonNormTol, speed, kSonSpeedTol)};
}

std::vector<CorrelationSample> quantum_samples(std::uint64_t seed)
{
  ExperimentPlan plan = ExperimentPlan::noiseless();
  plan.seed = seed;
  plan.noise.werner_v = 0.98;
  plan.noise.poisson = true;
  std::vector<CorrelationSample> samples;
  for (const auto& c : standard_combos()) {
    for (std::size_t i = 0; i < plan.angles_deg.size(); ++i) {
      RandomStream rng = cell_stream(plan.seed, c.axis, i);
      const double theta = plan.angles_deg[i] * pi / 180;
      const auto t = simulate_three_stages(c.axis, theta, plan, rng);
      samples.push_back(extract_correlation(t.II.counts, c, theta / 2));
    }
  }
  return samples;
}

Outcome fit_recovery()
{
  double lo = 10.0, hi = 0.0, worst_unc = 0.0, sum = 0.0;
  bool pass = true;
  for (int k = 0; k < kFitSeeds; ++k) {
    const auto r = son_fit(quantum_samples(static_cast<std::uint64_t>(k + 1)));
    lo = std::min(lo, r.n);
    hi = std::max(hi, r.n);
    sum += r.n;
    worst_unc = std::max(worst_unc, r.n_uncertainty);
    pass = pass && r.fits.size() == 6 && r.n >= kFitLo && r.n <= kFitHi && r.n_uncertainty <= kFitUncertainty;
  }
  return {pass, fmt("%d data sets: fitted n in [%.4f, %.4f], average %.4f (window [%.2f, %.2f]); "
                    "largest uncertainty %.4f (limit %.2f)",
                    kFitSeeds, lo, hi, sum / kFitSeeds, kFitLo, kFitHi, worst_unc, kFitUncertainty)};
}

Outcome determinism()
{
  const fs::path work = fs::temp_directory_path() / "envariance_acceptance";
  fs::remove_all(work);
  int configs = 0, files = 0;
  std::string mismatch;
  for (const auto& entry : fs::directory_iterator(ENVARIANCE_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++configs;
    const std::string name = entry.path().stem().string();
    for (const char* run : {"a", "b"}) {
      cli::RunConfig c = cli::load_config(entry.path());
      c.out = (work / (name + "_" + run)).string();
      c.input.clear();
      cli::cmd_report(c);
    }
    const fs::path a = work / (name + "_a");
    for (const auto& f : fs::recursive_directory_iterator(a)) {
      if (!f.is_regular_file()) continue;
      ++files;
      const fs::path rel = fs::relative(f.path(), a);
      const fs::path other = work / (name + "_b") / rel;
      if (!fs::exists(other) || read_file(f.path()) != read_file(other)) mismatch = name + "/" + rel.string();
    }
  }
  fs::remove_all(work);
  return {configs > 0 && mismatch.empty(),
          fmt("%d configs, %d files compared byte for byte%s%s", configs, files, mismatch.empty() ? "" : "; differs: ",
              mismatch.c_str())};
}

} // namespace

int main()
{
  criterion(1, "singlet envariance", 60, singlet_envariance);
  criterion(2, "Table I consistency", 0, table_consistency);
  criterion(3, "fidelity closed forms", 0, fidelity_forms);
  criterion(4, "Bell-state Bhattacharyya", 0, bell_overlap);
  criterion(5, "MLE correctness", 120, mle_correctness);
  criterion(6, "Table II regime", 600, table2_regime);
  criterion(7, "son solver", 0, son_solver);
  criterion(8, "fit recovery", 300, fit_recovery);
  criterion(9, "determinism", 0, determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
