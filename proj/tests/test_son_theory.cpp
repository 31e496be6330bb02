#include "doctest.h"
#include "oracles.hpp"

#include "envariance/harness.hpp"
#include "envariance/son_theory.hpp"

#include <numbers>
#include <random>

using namespace envariance;
using std::numbers::pi;

namespace {

std::vector<CorrelationSample> werner_samples(double v, bool poisson, std::uint64_t seed)
{
  ExperimentPlan plan = ExperimentPlan::noiseless();
  plan.seed = seed;
  plan.noise.werner_v = v;
  plan.noise.poisson = poisson;
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

} // namespace

TEST_CASE("e_qm examples")
{
  CHECK(e_qm(0.0) == doctest::Approx(-1.0));
  CHECK(std::abs(e_qm(pi / 4)) < 1e-15);
  CHECK(e_qm(pi / 2) == doctest::Approx(1.0));
}

TEST_CASE("solve_son at n = 2 is the quantum curve")
{
  const auto curve = solve_son(2.0, 256);
  REQUIRE(curve.values.size() == 256);
  double worst = 0.0;
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    worst = std::max(worst, std::abs(curve.values[i] - e_qm(curve.theta_grid[i])));
  }
  CHECK(worst < 1e-6);
  CHECK(curve.c == doctest::Approx(1.0).epsilon(1e-6));
  for (double t : {0.1, 0.5, 1.0, 1.4}) CHECK(std::abs(curve.at(t) - e_qm(t)) < 1e-6);
}

TEST_CASE("son curves satisfy their defining conditions")
{
  for (double n : {1.0, 1.5, 2.0, 5.0, 10.0}) {
    CAPTURE(n);
    const auto curve = solve_son(n, 721);
    CHECK(std::abs(curve.p.front()) < 1e-8);
    CHECK(std::abs(curve.q.front() - 1.0) < 1e-8);
    CHECK(std::abs(curve.p.back() - 1.0) < 1e-8);
    CHECK(std::abs(curve.q.back()) < 1e-8);
    CHECK(std::abs(curve.values.front() + 1.0) < 1e-8);
    CHECK(std::abs(curve.values.back() - 1.0) < 1e-8);

    double norm_err = 0.0, speed_err = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
      norm_err = std::max(norm_err, std::abs(std::pow(curve.p[i], n) + std::pow(curve.q[i], n) - 1.0));
      const double speed = curve.dp[i] * curve.dp[i] + curve.dq[i] * curve.dq[i];
      speed_err = std::max(speed_err, std::abs(speed - curve.c) / curve.c);
      if (i > 0 && curve.values[i] < curve.values[i - 1]) monotone = false;
    }
    CHECK(norm_err < 1e-8);
    CHECK(speed_err < 1e-6);
    CHECK(monotone);
  }
}

TEST_CASE("son curves match the arc-length construction")
{
  for (double n : {1.5, 2.0, 3.0, 5.0}) {
    CAPTURE(n);
    const auto curve = solve_son(n, 721);
    CHECK(curve.c == doctest::Approx(oracle::son_constant(n)).epsilon(1e-6));
    for (double x : {0.1, 0.3, 0.5}) {
      const double theta = oracle::son_theta_at(n, x);
      CHECK(std::abs(curve.at(theta) - (2.0 * std::pow(x, n) - 1.0)) < 1e-5);
    }
  }
}

TEST_CASE("exponent controls the steepness near the middle")
{
  const auto one = solve_son(1.0, 361);
  const auto two = solve_son(2.0, 361);
  const auto ten = solve_son(10.0, 361);
  const int mid = 180;
  CHECK(one.slope_at(mid) < two.slope_at(mid));
  CHECK(two.slope_at(mid) < ten.slope_at(mid));
}

TEST_CASE("solve_son errors")
{
  CHECK_THROWS_AS(solve_son(0.0, 100), std::invalid_argument);
  CHECK_THROWS_AS(solve_son(-1.0, 100), std::invalid_argument);
  CHECK_THROWS_AS(solve_son(2.0, 15), std::invalid_argument);
}

TEST_CASE("phi_to_theta")
{
  CHECK(phi_to_theta(0.0) == 0.0);
  CHECK(phi_to_theta(pi / 4) == doctest::Approx(pi / 4));
  CHECK(phi_to_theta(pi / 2) == doctest::Approx(pi / 2));
  CHECK(phi_to_theta(3 * pi / 4) == doctest::Approx(pi / 4));
  CHECK(phi_to_theta(pi) == doctest::Approx(0.0).epsilon(1e-12));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2 * pi);
  for (int k = 0; k < 100; ++k) {
    const double phi = u(rng);
    const double t = phi_to_theta(phi);
    CHECK(t >= 0.0);
    CHECK(t <= pi / 2);
    CHECK(std::abs(phi_to_theta(2 * pi - phi) - t) < 1e-12);
    CHECK(std::abs(phi_to_theta(phi + 2 * pi) - t) < 1e-12);
    CHECK(std::abs(phi_to_theta(phi + pi) - t) < 1e-12);
  }
}

TEST_CASE("extract_correlation examples")
{
  const Combo zda{NamedAxis::z, Basis::DA};
  const int s = ProjectorSet::setting_index(Basis::DA, Basis::DA);
  CountRecord c;
  c.duration_s = 1.0;
  c.counts[static_cast<std::size_t>(s * 4 + 0)] = 30;
  c.counts[static_cast<std::size_t>(s * 4 + 1)] = 10;
  c.counts[static_cast<std::size_t>(s * 4 + 2)] = 10;
  c.counts[static_cast<std::size_t>(s * 4 + 3)] = 50;
  const auto e = extract_correlation(c, zda, 0.3);
  CHECK(e.E == doctest::Approx(0.6));
  CHECK(e.sigma_E == doctest::Approx(2.0 * std::sqrt(80.0 * 20.0 / 1e6)));
  CHECK(e.phi == 0.3);
  CHECK(e.combo == zda);

  CountRecord perfect;
  perfect.counts[static_cast<std::size_t>(s * 4 + 1)] = 200;
  const auto p = extract_correlation(perfect, zda, 0.0);
  CHECK(p.E == -1.0);
  CHECK(p.sigma_E == doctest::Approx(1.0 / 200));

  CHECK_THROWS_AS(extract_correlation(CountRecord{}, zda, 0.0), std::invalid_argument);
}

TEST_CASE("qm_correlation of the singlet")
{
  for (const auto& combo : standard_combos()) {
    for (double phi : {0.0, 0.3, pi / 4, 1.2}) {
      CHECK(std::abs(qm_correlation(combo, phi, singlet_density().matrix()) - e_qm(phi)) < 1e-12);
    }
  }
  const auto curve = solve_son(2.0, 361);
  CHECK(std::abs(son_model(curve, standard_combos()[0], 0.7, werner(0.9).matrix()) -
                 0.9 * e_qm(0.7)) < 1e-6);
}

TEST_CASE("combo labels")
{
  CHECK(standard_combos().size() == 6);
  CHECK(standard_combos()[0].label() == "[Z,(D,A)]");
  CHECK(standard_combos()[5].label() == "[X,(H,V)]");
  for (const auto& c : standard_combos()) CHECK(parse_combo(c.label()) == c);
  CHECK_THROWS_AS(parse_combo("[Z,(H,V)]"), std::invalid_argument);
}

TEST_CASE("state parameterization round trip")
{
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const DensityMatrix rho(oracle::random_density(rng));
    const Mat4 back = state_from_params(params_from_state(rho));
    const Mat4 expected = 0.999 * rho.matrix() + 0.00025 * Mat4::Identity();
    CHECK((back - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(back.trace().real() - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(state_from_params(Eigen::VectorXd::Zero(15)), std::invalid_argument);
}

TEST_CASE("son_fit input validation")
{
  auto samples = werner_samples(0.98, false, 1);
  std::vector<CorrelationSample> few(samples.begin(), samples.begin() + 4);
  CHECK_THROWS_AS(son_fit(few), std::invalid_argument);
  CHECK_THROWS_AS(son_fit({}), std::invalid_argument);
  samples[0].sigma_E = 0.0;
  CHECK_THROWS_AS(son_fit(samples), std::invalid_argument);
}

TEST_CASE("son_fit on noiseless singlet correlations")
{
  const auto r = son_fit(werner_samples(1.0, false, 1));
  CHECK(r.per_combo_n.size() == 6);
  CHECK(std::abs(r.n - 2.0) < 1e-3);
  CHECK(r.objective < 1e-2);
}

TEST_CASE("son_fit recovers n = 2 from Poisson Werner data")
{
  const auto r = son_fit(werner_samples(0.98, true, 11));
  CHECK(r.fits.size() == 6);
  CHECK(std::abs(r.n - 2.0) <= 0.03);
  CHECK(r.n_uncertainty > 0.0);
  CHECK(r.n_uncertainty <= 0.03);
}

TEST_CASE("son_fit on a subset of combos")
{
  auto samples = werner_samples(0.98, true, 12);
  std::erase_if(samples, [](const CorrelationSample& s) { return s.combo.axis != NamedAxis::z; });
  const auto r = son_fit(samples);
  CHECK(r.fits.size() == 2);
  CHECK(r.fits[0].combo.label() == "[Z,(D,A)]");
  CHECK(std::abs(r.n - 2.0) < 0.05);
}

TEST_CASE("son_fit bias is below its uncertainty")
{
  double sum = 0.0, unc = 0.0;
  const int reps = 5;
  for (int k = 0; k < reps; ++k) {
    const auto r = son_fit(werner_samples(0.98, true, 100 + static_cast<std::uint64_t>(k)));
    sum += r.n;
    unc += r.n_uncertainty;
  }
  CHECK(std::abs(sum / reps - 2.0) < unc / reps);
}
