#include "envariance/quantum_core.hpp"

#include <cmath>

namespace envariance {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
const Complex kI{0.0, 1.0};

void check_density(const Mat4& m)
{
  if (!m.allFinite()) {
    throw std::invalid_argument("DensityMatrix: non-finite entry");
  }
  if (hermiticity_error(m) > 1e-10) {
    throw std::invalid_argument("DensityMatrix: not Hermitian");
  }
  if (std::abs(m.trace() - Complex(1.0)) > 1e-10) {
    throw std::invalid_argument("DensityMatrix: trace differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<Mat4> solver(m, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  }
}

} // namespace

AxisVector::AxisVector(double x, double y, double z) : v_(x, y, z)
{
  if (!v_.allFinite() || std::abs(v_.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("AxisVector: axis must have unit norm");
  }
}

AxisVector AxisVector::normalized(const Eigen::Vector3d& v)
{
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("AxisVector: cannot normalize a zero vector");
  }
  const Eigen::Vector3d u = v / n;
  return AxisVector(u.x(), u.y(), u.z());
}

PureState::PureState(Eigen::VectorXcd amplitudes) : amplitudes_(std::move(amplitudes))
{
  if (amplitudes_.size() != 2 && amplitudes_.size() != 4) {
    throw std::invalid_argument("PureState: dimension must be 2 or 4");
  }
  if (!amplitudes_.allFinite() || std::abs(amplitudes_.squaredNorm() - 1.0) > 1e-12) {
    throw std::invalid_argument("PureState: amplitudes are not normalized");
  }
}

DensityMatrix::DensityMatrix(const Mat4& m) : m_(m) { check_density(m_); }

DensityMatrix DensityMatrix::normalized(const Mat4& m)
{
  Mat4 h = 0.5 * (m + m.adjoint());
  const double tr = h.trace().real();
  if (!(tr > 0.0)) {
    throw std::invalid_argument("DensityMatrix: trace must be positive");
  }
  return DensityMatrix(h / tr);
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi)
{
  if (psi.dim() != 4) {
    throw std::invalid_argument("DensityMatrix: two-qubit state required");
  }
  const Vec4 v = psi.amplitudes();
  return normalized(v * v.adjoint());
}

namespace ket {
Vec2 H() { return Vec2(1.0, 0.0); }
Vec2 V() { return Vec2(0.0, 1.0); }
Vec2 D() { return Vec2(kInvSqrt2, kInvSqrt2); }
Vec2 A() { return Vec2(kInvSqrt2, -kInvSqrt2); }
Vec2 R() { return Vec2(kInvSqrt2, kI * kInvSqrt2); }
Vec2 L() { return Vec2(kInvSqrt2, -kI * kInvSqrt2); }
} // namespace ket

Mat2 pauli_x()
{
  Mat2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Mat2 pauli_y()
{
  Mat2 m;
  m << 0.0, -kI, kI, 0.0;
  return m;
}

Mat2 pauli_z()
{
  Mat2 m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

PureState singlet()
{
  Eigen::VectorXcd v(4);
  v << 0.0, kInvSqrt2, -kInvSqrt2, 0.0;
  return PureState(v);
}

PureState psi_plus()
{
  Eigen::VectorXcd v(4);
  v << 0.0, kInvSqrt2, kInvSqrt2, 0.0;
  return PureState(v);
}

DensityMatrix singlet_density() { return DensityMatrix::from_pure(singlet()); }

Mat2 su2_rotation(const AxisVector& axis, double theta)
{
  const Mat2 generator = axis.x() * pauli_x() + axis.y() * pauli_y() + axis.z() * pauli_z();
  return std::cos(0.5 * theta) * Mat2::Identity() - kI * std::sin(0.5 * theta) * generator;
}

Mat2 su2_rotation(const Eigen::Vector3d& axis, double theta)
{
  return su2_rotation(AxisVector(axis), theta);
}

DensityMatrix apply_local(const Mat2& u_s, const Mat2& u_e, const DensityMatrix& rho)
{
  if (unitarity_error(u_s) > 1e-10 || unitarity_error(u_e) > 1e-10) {
    throw std::invalid_argument("apply_local: local operations must be unitary");
  }
  const Mat4 u = kron2(u_s, u_e);
  const Mat4 out = u * rho.matrix() * u.adjoint();
  return DensityMatrix(0.5 * (out + out.adjoint()));
}

DensityMatrix werner(double v)
{
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("werner: visibility must lie in [0, 1]");
  }
  const Vec4 psi = singlet().amplitudes();
  const Mat4 m = v * (psi * psi.adjoint()) + (1.0 - v) * 0.25 * Mat4::Identity();
  return DensityMatrix(m);
}

} // namespace envariance
