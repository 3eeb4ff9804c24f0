#include "teardrop/cr3bp_core.hpp"

#include <cmath>

namespace teardrop {

namespace {

constexpr double kMu = kConstants.mass_ratio;

struct Distances {
  double r1;  // distance to the larger primary at (-mu, 0, 0)
  double r2;  // distance to the smaller primary at (1-mu, 0, 0)
};

Distances primary_distances(double x, double y, double z) {
  const double d1 = x + kMu;
  const double d2 = x + kMu - 1.0;
  const double yz = y * y + z * z;
  Distances d{std::sqrt(d1 * d1 + yz), std::sqrt(d2 * d2 + yz)};
  if (d.r1 < kSingularityRadius || d.r2 < kSingularityRadius) {
    throw SingularityError("state within 1e-12 LU of a primary");
  }
  return d;
}

}  // namespace

namespace detail {

void eom_rhs6(double /*t*/, const double* s, double* ds) {
  const double x = s[0], y = s[1], z = s[2];
  const double u = s[3], v = s[4], w = s[5];
  const auto [r1, r2] = primary_distances(x, y, z);
  const double r13 = r1 * r1 * r1;
  const double r23 = r2 * r2 * r2;
  const double c1 = (1.0 - kMu) / r13;
  const double c2 = kMu / r23;
  ds[0] = u;
  ds[1] = v;
  ds[2] = w;
  ds[3] = x + 2.0 * v - c1 * (x + kMu) - c2 * (x + kMu - 1.0);
  ds[4] = y - 2.0 * u - c1 * y - c2 * y;
  ds[5] = -c1 * z - c2 * z;
}

void eom_rhs42(double t, const double* s, double* ds) {
  eom_rhs6(t, s, ds);

  const double x = s[0], y = s[1], z = s[2];
  const auto [r1, r2] = primary_distances(x, y, z);
  const double r13 = r1 * r1 * r1;
  const double r15 = r13 * r1 * r1;
  const double r23 = r2 * r2 * r2;
  const double r25 = r23 * r2 * r2;
  const double c1 = 1.0 - kMu;
  const double c2 = kMu;
  const double d1 = x + kMu;
  const double d2 = x + kMu - 1.0;

  const double uxx =
      1.0 - c1 * (1.0 / r13 - 3.0 * d1 * d1 / r15) - c2 * (1.0 / r23 - 3.0 * d2 * d2 / r25);
  const double uyy =
      1.0 - c1 * (1.0 / r13 - 3.0 * y * y / r15) - c2 * (1.0 / r23 - 3.0 * y * y / r25);
  const double uzz =
      -c1 * (1.0 / r13 - 3.0 * z * z / r15) - c2 * (1.0 / r23 - 3.0 * z * z / r25);
  const double uxy = 3.0 * c1 * d1 * y / r15 + 3.0 * c2 * d2 * y / r25;
  const double uxz = 3.0 * c1 * d1 * z / r15 + 3.0 * c2 * d2 * z / r25;
  const double uyz = 3.0 * c1 * y * z / r15 + 3.0 * c2 * y * z / r25;

  // Phi' = A * Phi with A = [[0, I], [U, W]], W = [[0,2,0],[-2,0,0],[0,0,0]].
  const double* p = s + 6;   // Phi, row-major
  double* dp = ds + 6;
  for (int c = 0; c < 6; ++c) {
    const double p0 = p[0 * 6 + c];
    const double p1 = p[1 * 6 + c];
    const double p2 = p[2 * 6 + c];
    const double p3 = p[3 * 6 + c];
    const double p4 = p[4 * 6 + c];
    const double p5 = p[5 * 6 + c];
    dp[0 * 6 + c] = p3;
    dp[1 * 6 + c] = p4;
    dp[2 * 6 + c] = p5;
    dp[3 * 6 + c] = uxx * p0 + uxy * p1 + uxz * p2 + 2.0 * p4;
    dp[4 * 6 + c] = uxy * p0 + uyy * p1 + uyz * p2 - 2.0 * p3;
    dp[5 * 6 + c] = uxz * p0 + uyz * p1 + uzz * p2;
  }
}

}  // namespace detail

StateVector eom_derivative(const StateVector& state) {
  double s[6] = {state.x, state.y, state.z, state.u, state.v, state.w};
  double ds[6];
  detail::eom_rhs6(0.0, s, ds);
  return StateVector{ds[0], ds[1], ds[2], ds[3], ds[4], ds[5]};
}

double jacobi_constant(const StateVector& state) {
  const auto [r1, r2] = primary_distances(state.x, state.y, state.z);
  const double v2 =
      state.u * state.u + state.v * state.v + state.w * state.w;
  return state.x * state.x + state.y * state.y + 2.0 * (1.0 - kMu) / r1 +
         2.0 * kMu / r2 + kMu * (1.0 - kMu) - v2;
}

Mat6 eom_jacobian(const StateVector& state) {
  double s[42];
  s[0] = state.x;
  s[1] = state.y;
  s[2] = state.z;
  s[3] = state.u;
  s[4] = state.v;
  s[5] = state.w;
  // Identity seed turns the variational block of the derivative into A itself.
  for (int i = 0; i < 36; ++i) s[6 + i] = 0.0;
  for (int i = 0; i < 6; ++i) s[6 + 6 * i + i] = 1.0;
  double ds[42];
  detail::eom_rhs42(0.0, s, ds);
  Mat6 a;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) a(r, c) = ds[6 + 6 * r + c];
  }
  return a;
}

double convert_units(double value, UnitKind kind, UnitDirection direction) {
  double to_dimensional = 1.0;
  switch (kind) {
    case UnitKind::kLength:
      to_dimensional = kConstants.length_unit_km;  // LU -> km
      break;
    case UnitKind::kVelocity:
      to_dimensional = kMpsPerLuTu;  // LU/TU -> m/s
      break;
    case UnitKind::kTime:
      to_dimensional = kConstants.time_unit_s;  // TU -> s
      break;
  }
  return direction == UnitDirection::kToDimensional ? value * to_dimensional
                                                    : value / to_dimensional;
}

}  // namespace teardrop
