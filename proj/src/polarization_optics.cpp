#include "envariance/polarization_optics.hpp"

#include "envariance/optimize.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

namespace envariance {

namespace {

using std::numbers::pi;

double fold_half_turn(double angle)
{
  double r = std::fmod(angle, pi);
  if (r < 0.0) r += pi;
  if (r >= pi) r -= pi;
  return r;
}

Mat2 real_rotation(double angle)
{
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Mat2 retarder(double angle, Complex slow_phase)
{
  Mat2 plate = Mat2::Identity();
  plate(1, 1) = slow_phase;
  return real_rotation(angle) * plate * real_rotation(-angle);
}

} // namespace

WavePlateSetting WavePlateSetting::canonical() const
{
  return {fold_half_turn(alpha), fold_half_turn(beta), fold_half_turn(gamma)};
}

AxisVector axis_vector(NamedAxis axis)
{
  switch (axis) {
  case NamedAxis::x: return AxisVector(1.0, 0.0, 0.0);
  case NamedAxis::y: return AxisVector(0.0, 1.0, 0.0);
  case NamedAxis::z: return AxisVector(0.0, 0.0, 1.0);
  case NamedAxis::m: return AxisVector::normalized(Eigen::Vector3d(1.0, 1.0, 1.0));
  }
  throw std::invalid_argument("axis_vector: unknown axis");
}

std::string_view to_string(NamedAxis axis)
{
  switch (axis) {
  case NamedAxis::x: return "x";
  case NamedAxis::y: return "y";
  case NamedAxis::z: return "z";
  case NamedAxis::m: return "m";
  }
  return "?";
}

NamedAxis parse_axis(std::string_view text)
{
  if (text.size() == 1) {
    switch (std::tolower(static_cast<unsigned char>(text[0]))) {
    case 'x': return NamedAxis::x;
    case 'y': return NamedAxis::y;
    case 'z': return NamedAxis::z;
    case 'm': return NamedAxis::m;
    default: break;
    }
  }
  throw std::invalid_argument("unknown rotation axis '" + std::string(text) + "'");
}

Mat2 qwp(double angle) { return retarder(angle, Complex(0.0, 1.0)); }

Mat2 hwp(double angle) { return retarder(angle, Complex(-1.0, 0.0)); }

Mat2 stack(const WavePlateSetting& s) { return qwp(s.gamma) * hwp(s.beta) * qwp(s.alpha); }

double phase_invariant_distance(const Mat2& u, const Mat2& v)
{
  const Complex overlap = (v.adjoint() * u).trace();
  const double mag = std::abs(overlap);
  const Complex phase = mag > 0.0 ? overlap / mag : Complex(1.0);
  return 0.5 * (u - phase * v).norm();
}

WavePlateSetting table1_setting(NamedAxis axis, double theta)
{
  switch (axis) {
  case NamedAxis::x: return {pi / 2, -theta / 4, pi / 2};
  case NamedAxis::y: return {pi / 2 + theta / 2, theta / 4, pi / 2};
  case NamedAxis::z: return {pi / 4, -pi / 4 - theta / 4, pi / 4};
  case NamedAxis::m: break;
  }
  throw std::invalid_argument("table1_setting: no tabulated settings for axis m; use decompose_rotation");
}

Mat2 realized_rotation(NamedAxis axis, double theta)
{
  return su2_rotation(axis_vector(axis), kTableRotationSign * theta);
}

WavePlateSetting decompose_rotation(const Mat2& target, const DecomposeOptions& options)
{
  if (unitarity_error(target) > 1e-10) {
    throw std::invalid_argument("decompose_rotation: target is not unitary");
  }
  const auto objective = [&](const Eigen::VectorXd& p) {
    const double d = phase_invariant_distance(stack({p(0), p(1), p(2)}), target);
    return d * d;
  };

  optimize::NelderMeadOptions nm;
  nm.max_iterations = options.max_iterations;
  nm.f_target = 1e-28;
  nm.f_tolerance = 1e-32;
  nm.x_tolerance = 1e-14;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> angle(0.0, pi);
  const Eigen::VectorXd step = Eigen::VectorXd::Constant(3, 0.3);

  double best_distance = std::numeric_limits<double>::infinity();
  WavePlateSetting best;
  for (int attempt = 0; attempt < options.restarts; ++attempt) {
    const Eigen::Vector3d start(angle(rng), angle(rng), angle(rng));
    const auto r = optimize::nelder_mead(objective, start, step, nm);
    const WavePlateSetting s{r.x(0), r.x(1), r.x(2)};
    const double d = phase_invariant_distance(stack(s), target);
    if (d < best_distance) {
      best_distance = d;
      best = s;
    }
    if (best_distance <= 1e-3 * options.tolerance) break;
  }
  if (!(best_distance <= options.tolerance)) {
    throw ConvergenceFailure("decompose_rotation: best phase-invariant distance " +
                             std::to_string(best_distance) + " exceeds tolerance");
  }
  return best.canonical();
}

WavePlateSetting wave_plate_setting(NamedAxis axis, double theta, std::uint64_t seed)
{
  if (axis != NamedAxis::m) return table1_setting(axis, theta);
  DecomposeOptions options;
  options.seed = seed;
  return decompose_rotation(realized_rotation(axis, theta), options);
}

} // namespace envariance
