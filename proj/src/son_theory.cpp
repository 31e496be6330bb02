#include "envariance/son_theory.hpp"

#include "envariance/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace envariance {

namespace {

using std::numbers::pi;

constexpr double kMaxStep = 5e-4;
constexpr double kSeriesStart = 1e-5;

struct AmplitudeOde {
  double n;
  double root_c;

  double q_of(double p) const
  {
    const double pn = std::pow(p, n);
    return pn >= 1.0 ? 0.0 : std::pow(1.0 - pn, 1.0 / n);
  }

  // dp/dtheta from p'^2 + q'^2 = c with q = (1 - p^n)^(1/n)
  double rhs(double p) const
  {
    if (p <= 0.0) return n > 1.0 ? root_c : (n == 1.0 ? root_c / std::sqrt(2.0) : 0.0);
    const double q = q_of(p);
    if (q <= 0.0) return 0.0;
    return root_c / std::sqrt(1.0 + std::pow(p / q, 2.0 * n - 2.0));
  }

  // Leading behaviour near p = 0, where the right-hand side is not smooth for n != 2.
  double series(double theta) const
  {
    if (n > 1.0) {
      const double lead = root_c * theta;
      return lead - std::pow(root_c, 2.0 * n - 1.0) * std::pow(theta, 2.0 * n - 1.0) /
                        (2.0 * (2.0 * n - 1.0));
    }
    if (n == 1.0) return root_c * theta / std::sqrt(2.0);
    return std::pow(n * root_c * theta, 1.0 / n);
  }

  double rk4(double p, double h) const
  {
    const double k1 = rhs(p);
    const double k2 = rhs(p + 0.5 * h * k1);
    const double k3 = rhs(p + 0.5 * h * k2);
    const double k4 = rhs(p + h * k3);
    return std::min(1.0, p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }

  /// p at each (ascending, non-negative) target angle.
  std::vector<double> integrate(const std::vector<double>& targets) const
  {
    std::vector<double> out;
    out.reserve(targets.size());
    double theta = 0.0;
    double p = 0.0;
    for (double target : targets) {
      if (target <= 0.0) {
        out.push_back(0.0);
        continue;
      }
      if (theta == 0.0) {
        const double start = std::min(kSeriesStart, target);
        p = series(start);
        theta = start;
      }
      const double span = target - theta;
      if (span > 0.0) {
        const int steps = std::max(1, static_cast<int>(std::ceil(span / kMaxStep)));
        const double h = span / steps;
        for (int s = 0; s < steps; ++s) p = rk4(p, h);
        theta = target;
      }
      out.push_back(p);
    }
    return out;
  }
};

double hermite(double x0, double x1, double f0, double f1, double d0, double d1, double x)
{
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 +
         (t3 - t2) * h * d1;
}

Mat2 basis_observable(Basis b)
{
  const auto k = basis_kets(b);
  return k[0] * k[0].adjoint() - k[1] * k[1].adjoint();
}

} // namespace

double e_qm(double theta) { return -std::cos(2.0 * theta); }

double CorrelationCurve::slope_at(int i) const
{
  const auto k = static_cast<std::size_t>(i);
  double s = 0.0;
  if (p[k] > 0.0) s += n * std::pow(p[k], n - 1.0) * dp[k];
  else if (n == 1.0) s += dp[k];
  if (q[k] > 0.0) s -= n * std::pow(q[k], n - 1.0) * dq[k];
  else if (n == 1.0) s -= dq[k];
  return s;
}

double CorrelationCurve::at(double theta) const
{
  if (theta_grid.size() < 2) throw std::logic_error("CorrelationCurve: empty grid");
  theta = std::clamp(theta, 0.0, pi / 2);
  const double h = theta_grid[1] - theta_grid[0];
  auto i = static_cast<std::size_t>(std::floor(theta / h));
  i = std::min(i, theta_grid.size() - 2);
  const double x0 = theta_grid[i], x1 = theta_grid[i + 1];
  if (theta == x0) return values[i];
  if (theta == x1) return values[i + 1];
  const double d0 = slope_at(static_cast<int>(i));
  const double d1 = slope_at(static_cast<int>(i + 1));
  if (!std::isfinite(d0) || !std::isfinite(d1)) {
    return values[i] + (values[i + 1] - values[i]) * (theta - x0) / h;
  }
  return std::clamp(hermite(x0, x1, values[i], values[i + 1], d0, d1, theta), -1.0, 1.0);
}

CorrelationCurve solve_son(double n, int grid_size)
{
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("solve_son: n must be positive");
  if (grid_size < 16) throw std::invalid_argument("solve_son: grid_size must be at least 16");

  const double midpoint = std::pow(2.0, -1.0 / n);
  const auto residual = [&](double c) {
    const AmplitudeOde ode{n, std::sqrt(c)};
    return ode.integrate({pi / 4})[0] - midpoint;
  };

  double lo = 0.25, hi = 4.0;
  while (residual(lo) > 0.0 && lo > 1e-8) lo *= 0.25;
  while (residual(hi) < 0.0 && hi < 1e8) hi *= 4.0;
  double c = 0.0;
  try {
    c = optimize::brent_root(residual, lo, hi, 1e-15);
  } catch (const ConvergenceFailure& e) {
    throw ConvergenceFailure(std::string("solve_son: shooting failed: ") + e.what());
  }
  if (!(std::abs(residual(c)) <= 1e-8)) {
    throw ConvergenceFailure("solve_son: midpoint condition not met within 1e-8");
  }

  CorrelationCurve curve;
  curve.n = n;
  curve.c = c;
  const auto size = static_cast<std::size_t>(grid_size);
  const double step = (pi / 2) / (grid_size - 1);
  curve.theta_grid.resize(size);
  for (std::size_t i = 0; i < size; ++i) curve.theta_grid[i] = step * static_cast<double>(i);
  curve.theta_grid.back() = pi / 2;

  // Solve on the lower half, mirror through p(theta) = q(pi/2 - theta).
  const std::size_t lower = (size - 1) / 2;
  std::vector<double> targets(curve.theta_grid.begin(), curve.theta_grid.begin() + static_cast<long>(lower) + 1);
  const AmplitudeOde ode{n, std::sqrt(c)};
  const auto p_lower = ode.integrate(targets);

  curve.p.assign(size, 0.0);
  curve.q.assign(size, 0.0);
  curve.dp.assign(size, 0.0);
  curve.dq.assign(size, 0.0);
  for (std::size_t i = 0; i <= lower; ++i) {
    const double p = p_lower[i];
    const double q = ode.q_of(p);
    const double dp = ode.rhs(p);
    const double dq = p > 0.0 || n >= 1.0 ? -dp * std::pow(p / q, n - 1.0) : -ode.root_c;
    curve.p[i] = p;
    curve.q[i] = q;
    curve.dp[i] = dp;
    curve.dq[i] = dq;
    const std::size_t mirror = size - 1 - i;
    curve.p[mirror] = q;
    curve.q[mirror] = p;
    curve.dp[mirror] = -dq;
    curve.dq[mirror] = -dp;
  }
  curve.p.front() = 0.0;
  curve.q.front() = 1.0;
  curve.p.back() = 1.0;
  curve.q.back() = 0.0;

  curve.values.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    curve.values[i] = std::pow(curve.p[i], n) - std::pow(curve.q[i], n);
  }
  if (std::abs(curve.values.front() + 1.0) > 1e-8 || std::abs(curve.values.back() - 1.0) > 1e-8) {
    throw ConvergenceFailure("solve_son: boundary conditions not met within 1e-8");
  }
  return curve;
}

double phi_to_theta(double phi)
{
  double r = std::fmod(phi, pi);
  if (r < 0.0) r += pi;
  return 0.5 * (pi - std::abs(pi - 2.0 * r));
}

std::string Combo::label() const
{
  std::string axis_name(to_string(axis));
  axis_name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(axis_name[0])));
  const std::string_view b = to_string(basis);
  return "[" + axis_name + ",(" + b[0] + "," + b[1] + ")]";
}

const std::vector<Combo>& standard_combos()
{
  static const std::vector<Combo> combos{
      {NamedAxis::z, Basis::DA}, {NamedAxis::z, Basis::RL}, {NamedAxis::y, Basis::DA},
      {NamedAxis::y, Basis::HV}, {NamedAxis::x, Basis::RL}, {NamedAxis::x, Basis::HV},
  };
  return combos;
}

Combo parse_combo(std::string_view label)
{
  for (const auto& c : standard_combos()) {
    if (c.label() == label) return c;
  }
  throw std::invalid_argument("unknown correlation combo '" + std::string(label) + "'");
}

CorrelationSample extract_correlation(const CountRecord& counts, const Combo& combo, double phi)
{
  const int setting = ProjectorSet::setting_index(combo.basis, combo.basis);
  const auto at = [&](int outcome) {
    return static_cast<double>(counts.counts[static_cast<std::size_t>(setting * kOutcomesPerSetting + outcome)]);
  };
  const double same = at(0) + at(3);
  const double diff = at(1) + at(2);
  const double total = same + diff;
  if (!(total > 0.0)) throw std::invalid_argument("extract_correlation: setting has no counts");
  CorrelationSample s;
  s.phi = phi;
  s.combo = combo;
  s.E = (same - diff) / total;
  s.sigma_E = std::max(2.0 * std::sqrt(same * diff / (total * total * total)), 1.0 / total);
  return s;
}

double qm_correlation(const Combo& combo, double phi, const Mat4& rho)
{
  const Mat2 u = realized_rotation(combo.axis, 2.0 * phi);
  const Mat2 o = basis_observable(combo.basis);
  const Mat4 observable = kron2(u.adjoint() * o * u, o);
  return (observable * rho).trace().real();
}

double son_model(const CorrelationCurve& curve, const Combo& combo, double phi, const Mat4& rho)
{
  static const Mat4 ideal = singlet_density().matrix();
  return curve.at(phi_to_theta(phi)) + qm_correlation(combo, phi, rho) - qm_correlation(combo, phi, ideal);
}

Mat4 state_from_params(const Eigen::VectorXd& params)
{
  if (params.size() != 16) throw std::invalid_argument("state_from_params: expected 16 parameters");
  Mat4 t = Mat4::Zero();
  for (int i = 0; i < 4; ++i) t(i, i) = params(i);
  int k = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      t(i, j) = Complex(params(k), params(k + 1));
      k += 2;
    }
  }
  const Mat4 m = t * t.adjoint();
  const double tr = m.trace().real();
  if (!(tr > 0.0)) return 0.25 * Mat4::Identity();
  return m / tr;
}

Eigen::VectorXd params_from_state(const DensityMatrix& rho)
{
  // A small admixture of I keeps the factorization full rank.
  const Mat4 m = 0.999 * rho.matrix() + 0.001 * 0.25 * Mat4::Identity();
  const Eigen::LLT<Mat4> llt(m);
  const Mat4 t = llt.matrixL();
  Eigen::VectorXd params(16);
  for (int i = 0; i < 4; ++i) params(i) = t(i, i).real();
  int k = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      params(k) = t(i, j).real();
      params(k + 1) = t(i, j).imag();
      k += 2;
    }
  }
  return params;
}

namespace {

struct PreparedSample {
  double theta;
  double E;
  double weight; // 1 / sigma^2
  Mat4 observable;
  double ideal; // E(phi, 2, |psi->)
};

ComboFit fit_one_combo(const Combo& combo, const std::vector<PreparedSample>& data, const SonFitOptions& options,
                       const Eigen::VectorXd& start)
{
  // For fixed n the model is linear in rho; the profile objective over n is
  // minimized with Brent, the state with a restarted simplex.
  std::vector<double> son_part(data.size());
  const auto objective_for_state = [&](const Eigen::VectorXd& params) {
    const Mat4 rho = state_from_params(params);
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double model = son_part[i] + (data[i].observable * rho).trace().real() - data[i].ideal;
      const double r = model - data[i].E;
      sum += data[i].weight * r * r;
    }
    return sum;
  };

  Eigen::VectorXd best_params = start;
  const auto profile = [&](double n) {
    const CorrelationCurve curve = solve_son(n, options.grid_size);
    for (std::size_t i = 0; i < data.size(); ++i) son_part[i] = curve.at(data[i].theta);
    optimize::NelderMeadOptions nm;
    nm.max_iterations = options.inner_iterations;
    nm.f_tolerance = 1e-12;
    nm.x_tolerance = 1e-9;
    Eigen::VectorXd x = start;
    double value = objective_for_state(x);
    for (int r = 0; r < options.restarts; ++r) {
      const auto res = optimize::nelder_mead(objective_for_state, x, Eigen::VectorXd::Constant(16, 0.05), nm);
      if (res.value <= value) {
        x = res.x;
        value = res.value;
      }
    }
    best_params = x;
    return value;
  };

  const auto outer = optimize::brent_minimize(profile, options.n_min, options.n_max, options.n_tolerance);
  if (!outer.converged) throw ConvergenceFailure("son_fit: n search did not converge for " + combo.label());

  ComboFit fit;
  fit.combo = combo;
  fit.n = outer.x(0);
  fit.objective = profile(fit.n);
  fit.params = best_params;
  fit.rho = state_from_params(best_params);
  fit.samples = static_cast<int>(data.size());
  if (!std::isfinite(fit.objective)) throw ConvergenceFailure("son_fit: non-finite objective for " + combo.label());
  return fit;
}

} // namespace

SonFitResult son_fit(const std::vector<CorrelationSample>& samples, const SonFitOptions& options)
{
  static const Mat4 ideal_state = singlet_density().matrix();
  const Eigen::VectorXd start = params_from_state(options.initial ? *options.initial : werner(0.98));

  SonFitResult result;
  for (const Combo& combo : standard_combos()) {
    std::vector<PreparedSample> data;
    for (const auto& s : samples) {
      if (!(s.combo == combo)) continue;
      if (!(s.sigma_E > 0.0) || std::abs(s.E) > 1.0) {
        throw std::invalid_argument("son_fit: samples need |E| <= 1 and sigma_E > 0");
      }
      const Mat2 u = realized_rotation(combo.axis, 2.0 * s.phi);
      const Mat2 o = basis_observable(combo.basis);
      PreparedSample p;
      p.theta = phi_to_theta(s.phi);
      p.E = s.E;
      p.weight = 1.0 / (s.sigma_E * s.sigma_E);
      p.observable = kron2(u.adjoint() * o * u, o);
      p.ideal = (p.observable * ideal_state).trace().real();
      data.push_back(p);
    }
    if (data.empty()) continue;
    if (data.size() < 5) {
      throw std::invalid_argument("son_fit: combo " + combo.label() + " needs at least 5 samples");
    }
    result.fits.push_back(fit_one_combo(combo, data, options, start));
  }
  if (result.fits.empty()) throw std::invalid_argument("son_fit: no samples");

  for (const auto& f : result.fits) {
    result.per_combo_n.push_back(f.n);
    result.objective += f.objective;
  }
  const double count = static_cast<double>(result.per_combo_n.size());
  result.n = std::accumulate(result.per_combo_n.begin(), result.per_combo_n.end(), 0.0) / count;
  if (result.per_combo_n.size() > 1) {
    double ss = 0.0;
    for (double v : result.per_combo_n) ss += (v - result.n) * (v - result.n);
    result.n_uncertainty = std::sqrt(ss / (count - 1.0));
  }
  return result;
}

} // namespace envariance
