#pragma once

// Relative motion about the halo in the rotating frame: the linear model is
// a state-transition-matrix product; the nonlinear model is the difference
// of two independently propagated absolute states.  No separate relative
// dynamics are ever integrated.

#include <utility>

#include "teardrop/cr3bp_core.hpp"
#include "teardrop/periodic_orbit.hpp"
#include "teardrop/propagation.hpp"

namespace teardrop {

// Deputy-minus-chief state offset: positions in LU, velocities in LU/TU.
// Reconstruction of the deputy as chief + offset is exact by definition.
struct RelativeState {
  double dx = 0.0, dy = 0.0, dz = 0.0;
  double du = 0.0, dv = 0.0, dw = 0.0;

  Vec6 vec() const {
    Vec6 s;
    s << dx, dy, dz, du, dv, dw;
    return s;
  }
  static RelativeState from(const Vec6& s) {
    return RelativeState{s(0), s(1), s(2), s(3), s(4), s(5)};
  }
  Vec3 dr() const { return Vec3(dx, dy, dz); }
  Vec3 dv_vec() const { return Vec3(du, dv, dw); }
};

// First-order propagation of an offset: the matrix-vector product with the
// chief-arc state transition matrix.
RelativeState linear_map(const RelativeState& dX0, const Stm& phi);

// Nonlinear offset propagation: chief and deputy are propagated
// independently from t = 0 to dt at the given tolerances and differenced.
// The returned Trajectory holds the sampled offsets (n_samples interior
// points plus both endpoints), with StateVector fields carrying
// (dx,dy,dz,du,dv,dw); the returned RelativeState is its final row.
//
// When closed_reference names a refined periodic orbit and dt lands on its
// period (within 1e-12 TU), the chief's final state is taken as its initial
// state — the orbit's exact closure — so that revisit-epoch offsets are not
// contaminated by the chief's own residual closure error.  Interior samples
// always use the propagated chief.
std::pair<RelativeState, Trajectory> nonlinear_relative(
    const StateVector& chief0, const RelativeState& dX0, double dt,
    const Tolerances& tol = Tolerances{}, int n_samples = 0,
    const PeriodicOrbit* closed_reference = nullptr);

}  // namespace teardrop
