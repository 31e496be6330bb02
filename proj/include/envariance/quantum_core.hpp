#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace envariance {

using Complex = std::complex<double>;

template <typename Scalar>
using Matrix2c = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
template <typename Scalar>
using Matrix4c = Eigen::Matrix<std::complex<Scalar>, 4, 4>;

using Mat2 = Matrix2c<double>;
using Mat4 = Matrix4c<double>;
using Vec2 = Eigen::Matrix<Complex, 2, 1>;
using Vec4 = Eigen::Matrix<Complex, 4, 1>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Raised when an iterative solver cannot reach its stated tolerance.
class ConvergenceFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// generic helpers on Eigen expressions

/// Largest entrywise deviation from Hermiticity.
template <typename Derived>
double hermiticity_error(const Eigen::MatrixBase<Derived>& m)
{
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Largest entrywise deviation of m^dagger m from the identity.
template <typename Derived>
double unitarity_error(const Eigen::MatrixBase<Derived>& m)
{
  using Plain = typename Derived::PlainObject;
  const Plain prod = m.adjoint() * m;
  return (prod - Plain::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
  using Scalar = typename DerivedA::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                            a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Two-qubit Kronecker product with a fixed-size result.
inline Mat4 kron2(const Mat2& a, const Mat2& b)
{
  Mat4 out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// domain types

/// Unit vector on the Bloch sphere.
class AxisVector {
public:
  /// Throws std::invalid_argument unless the norm is 1 within 1e-12.
  AxisVector(double x, double y, double z);
  explicit AxisVector(const Eigen::Vector3d& v) : AxisVector(v.x(), v.y(), v.z()) {}

  /// Rescales any non-zero vector onto the sphere.
  static AxisVector normalized(const Eigen::Vector3d& v);

  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  const Eigen::Vector3d& vector() const { return v_; }

private:
  Eigen::Vector3d v_;
};

/// Normalized state vector of one (dim 2) or two (dim 4) polarization qubits.
class PureState {
public:
  explicit PureState(Eigen::VectorXcd amplitudes);

  Eigen::Index dim() const { return amplitudes_.size(); }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  ComplexMatrix projector() const { return amplitudes_ * amplitudes_.adjoint(); }

private:
  Eigen::VectorXcd amplitudes_;
};

/// Two-qubit density matrix in the (HH, HV, VH, VV) basis.
///
/// Construction checks Hermiticity, unit trace and positivity at 1e-10.
class DensityMatrix {
public:
  explicit DensityMatrix(const Mat4& m);

  /// Hermitizes and rescales to unit trace before validating.
  static DensityMatrix normalized(const Mat4& m);
  static DensityMatrix from_pure(const PureState& psi);

  const Mat4& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }

private:
  Mat4 m_;
};

// ---------------------------------------------------------------------------
// single-qubit kets and Pauli matrices

namespace ket {
Vec2 H();
Vec2 V();
Vec2 D();
Vec2 A();
Vec2 R();
Vec2 L();
} // namespace ket

Mat2 pauli_x();
Mat2 pauli_y();
Mat2 pauli_z();

// ---------------------------------------------------------------------------
// states and transformations

/// (|HV> - |VH>)/sqrt(2)
PureState singlet();
/// (|HV> + |VH>)/sqrt(2)
PureState psi_plus();

DensityMatrix singlet_density();

/// exp(-i theta/2 axis.sigma)
Mat2 su2_rotation(const AxisVector& axis, double theta);
/// Validating overload; throws std::invalid_argument for a non-unit axis.
Mat2 su2_rotation(const Eigen::Vector3d& axis, double theta);

/// (u_s (x) u_e) rho (u_s (x) u_e)^dagger. Both factors must be unitary within 1e-10.
DensityMatrix apply_local(const Mat2& u_s, const Mat2& u_e, const DensityMatrix& rho);

/// v |psi-><psi-| + (1 - v) I/4
DensityMatrix werner(double v);

// ---------------------------------------------------------------------------
// Hermitian spectral tools

template <typename Plain>
struct HermitianEigen {
  Eigen::Matrix<double, Plain::RowsAtCompileTime, 1> values; // ascending
  Plain vectors;                                              // columns
};

/// Eigendecomposition of a Hermitian matrix (Hermitian within 1e-8).
template <typename Derived>
HermitianEigen<typename Derived::PlainObject> eig_hermitian(const Eigen::MatrixBase<Derived>& m)
{
  using Plain = typename Derived::PlainObject;
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("eig_hermitian: matrix is not square");
  }
  if (hermiticity_error(m) > 1e-8) {
    throw std::invalid_argument("eig_hermitian: matrix is not Hermitian");
  }
  const Plain sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Plain> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("eig_hermitian: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Principal square root of a Hermitian PSD matrix.
///
/// Eigenvalues in [-1e-8, floor] are set to zero; anything more negative is
/// rejected. The default floor of 0 only clamps negative round-off.
template <typename Derived>
typename Derived::PlainObject psd_sqrt(const Eigen::MatrixBase<Derived>& m, double floor = 0.0)
{
  auto eig = eig_hermitian(m);
  auto roots = eig.values;
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    if (roots(i) < -1e-8) {
      throw std::invalid_argument("psd_sqrt: matrix has a negative eigenvalue");
    }
    roots(i) = roots(i) <= floor ? 0.0 : std::sqrt(roots(i));
  }
  return eig.vectors * roots.template cast<Complex>().asDiagonal() * eig.vectors.adjoint();
}

} // namespace envariance
