#pragma once

#include "envariance/quantum_core.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace envariance {

/// Angles (radians, from horizontal) of the QWP-HWP-QWP stack. The photon
/// passes the alpha plate first.
struct WavePlateSetting {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  /// Same plates with every angle folded into [0, pi).
  WavePlateSetting canonical() const;
};

enum class NamedAxis { x, y, z, m };

AxisVector axis_vector(NamedAxis axis);
std::string_view to_string(NamedAxis axis);
/// Accepts "x", "y", "z", "m" (case-insensitive); throws std::invalid_argument otherwise.
NamedAxis parse_axis(std::string_view text);

Mat2 qwp(double angle);
Mat2 hwp(double angle);
Mat2 stack(const WavePlateSetting& s);

/// Phase-insensitive distance sqrt(1 - |Tr(U^dagger V)|/2) between 2x2 unitaries.
///
/// Evaluated as ||U - e^{i phi} V||_F / 2 at the optimal phase, which equals the
/// expression above for unitaries but keeps full precision near zero.
double phase_invariant_distance(const Mat2& u, const Mat2& v);

/// Sense of the rotation realized by the tabulated settings: stack(table1_setting(a, t))
/// equals su2_rotation(a, kTableRotationSign * t) up to a global phase.
inline constexpr int kTableRotationSign = -1;

/// Tabulated plate angles for rotations about x, y and z. Axis m has no
/// tabulated entry and is rejected with std::invalid_argument.
WavePlateSetting table1_setting(NamedAxis axis, double theta);

/// The SU(2) element the lab stack implements for "rotation by theta about axis".
Mat2 realized_rotation(NamedAxis axis, double theta);

struct DecomposeOptions {
  int restarts = 20;
  int max_iterations = 5000;
  double tolerance = 1e-8;
  std::uint64_t seed = 0x5eed;
};

/// Plate angles whose stack reproduces `target` up to global phase. Throws
/// ConvergenceFailure when no restart reaches the tolerance.
WavePlateSetting decompose_rotation(const Mat2& target, const DecomposeOptions& options = {});

/// Table entry for x/y/z, numerical decomposition of realized_rotation for m.
WavePlateSetting wave_plate_setting(NamedAxis axis, double theta, std::uint64_t seed = 0x5eed);

} // namespace envariance
