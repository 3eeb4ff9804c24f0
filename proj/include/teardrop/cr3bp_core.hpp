#pragma once

// Rotating-frame circular restricted three-body dynamics for the Earth--Moon
// system: equations of motion, their state-space Jacobian, the Jacobi
// integral, and unit conversions between dimensional and nondimensional
// quantities.
//
// Conventions: the frame rotates with the primaries, the origin is the
// barycenter, the larger primary sits at (-mu, 0, 0), the smaller at
// (1-mu, 0, 0).  One length unit (LU) is the primary separation, one time
// unit (TU) makes the mean motion unity, so the frame revolves once per
// 2*pi TU.  States are [x, y, z, u, v, w] with velocities in LU/TU.

#include <Eigen/Dense>

#include <stdexcept>

namespace teardrop {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Physical constants of the Earth--Moon system used throughout.
struct Constants {
  double mass_ratio;        // mu = m2 / (m1 + m2), dimensionless
  double synodic_period_s;  // rotating-frame revolution period, seconds
  double earth_radius_km;
  double moon_radius_km;
  double length_unit_km;    // LU in kilometers
  double time_unit_s;       // TU in seconds
};

inline constexpr Constants kConstants{
    1.21506683e-2,
    2.0 * kPi * 3.75676968e5,  // synodic period = 2*pi TU by construction
    6378.145,
    1737.100,
    3.84405e5,
    3.75676968e5,
};

inline constexpr double kLuPerKm = 1.0 / kConstants.length_unit_km;
inline constexpr double kKmPerLu = kConstants.length_unit_km;
// One LU/TU expressed in meters per second.
inline constexpr double kMpsPerLuTu =
    kConstants.length_unit_km * 1000.0 / kConstants.time_unit_s;

// Distance to either primary below which the dynamics are treated as
// singular (LU).
inline constexpr double kSingularityRadius = 1e-12;

// Thrown when a state comes within kSingularityRadius of either primary.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cartesian rotating-frame state [x, y, z, u, v, w].
struct StateVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;

  Vec6 vec() const {
    Vec6 s;
    s << x, y, z, u, v, w;
    return s;
  }

  static StateVector from(const Vec6& s) {
    return StateVector{s[0], s[1], s[2], s[3], s[4], s[5]};
  }

  Vec3 position() const { return Vec3(x, y, z); }
  Vec3 velocity() const { return Vec3(u, v, w); }
};

// Time derivative of the state under the rotating-frame equations of motion.
// Throws SingularityError within kSingularityRadius of either primary.
StateVector eom_derivative(const StateVector& state);

// Jacobi integral C(state); conserved along trajectories.
double jacobi_constant(const StateVector& state);

// Analytic Jacobian d(state')/d(state) of the equations of motion.
Mat6 eom_jacobian(const StateVector& state);

enum class UnitKind { kLength, kVelocity, kTime };
enum class UnitDirection { kToNondimensional, kToDimensional };

// Converts between dimensional (km, m/s, s) and nondimensional
// (LU, LU/TU, TU) quantities.
double convert_units(double value, UnitKind kind, UnitDirection direction);

namespace detail {

// Raw right-hand sides used by the integrator.  `t` is unused (autonomous
// system) but kept for the standard ODE signature.
//
// 6-dimensional state derivative.
void eom_rhs6(double t, const double* s, double* ds);

// Coupled 42-dimensional system: state plus the 6x6 variational (state
// transition) matrix stored row-major at s[6 + 6*row + col].
void eom_rhs42(double t, const double* s, double* ds);

}  // namespace detail

}  // namespace teardrop
