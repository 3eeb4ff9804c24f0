#pragma once

// Design of 1:1 teardrop hovering formations: a deputy placed at a chosen
// revisit offset returns to that offset after exactly one orbit period, with
// one impulse applied per revisit.  The initial relative velocity comes from
// a linear (monodromy-based) guess and is corrected by a damped Newton
// iteration on the nonlinear revisit defect; grids over the revisit
// direction expose the impulse landscape and its minimum.

#include <stdexcept>
#include <utility>
#include <vector>

#include "teardrop/cr3bp_core.hpp"
#include "teardrop/periodic_orbit.hpp"
#include "teardrop/propagation.hpp"
#include "teardrop/relative_motion.hpp"

namespace teardrop {

// Where the deputy must sit relative to the chief at every revisit epoch:
// offset distance rho (kilometres at the interface; converted to LU
// internally) and spherical direction angles (radians).
struct RevisitSpec {
  double rho_km = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double revisit_period = 4.0 * kPi / 9.0;  // TU
};

// Position closure defect after one revisit period (LU).
struct ConstraintResidual {
  Vec3 psi = Vec3::Zero();
  double norm = 0.0;
};

// Per-revisit impulse: velocity to re-apply at each revisit epoch.
struct ImpulseResult {
  Vec3 vec = Vec3::Zero();      // LU/TU
  double magnitude = 0.0;       // LU/TU
  double magnitude_mps = 0.0;   // m/s
};

// A corrected formation design at one revisit specification.
struct TeardropSolution {
  RevisitSpec spec{};
  Vec3 dv0 = Vec3::Zero();            // initial relative velocity (LU/TU)
  ConstraintResidual residual{};
  Vec3 impulse_vec = Vec3::Zero();    // LU/TU
  double impulse_mag = 0.0;           // LU/TU
  double impulse_mag_mps = 0.0;       // m/s
  bool converged = false;
  int iterations = 0;
};

// Impulse landscape over an inclusive (alpha, beta) grid; row-major with
// alpha varying slowest.  Cells that failed to converge keep their
// best-iterate data in `solutions` and are listed in `failures`.
struct SweepResult {
  double rho_km = 0.0;
  std::vector<double> alpha_grid;   // radians, includes both 0 and 2*pi
  std::vector<double> beta_grid;
  std::vector<double> impulse_map;  // m/s, size alpha_grid * beta_grid
  std::vector<TeardropSolution> solutions;     // same ordering
  std::vector<std::pair<int, int>> failures;   // (alpha index, beta index)

  std::size_t index(std::size_t ai, std::size_t bi) const {
    return ai * beta_grid.size() + bi;
  }
};

// Thrown when the revisit corrector's Jacobian degenerates (condition
// number above 1e14).
class CorrectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Revisit offset vector in LU for a distance in km and direction angles:
// rho * (sin a cos b, sin a sin b, cos a).  rho_km must be positive.
Vec3 revisit_position(double rho_km, double alpha, double beta);

// First-order initial relative velocity for a revisit offset, from the
// chief monodromy m: pinv(Phi_rv) * (I - Phi_rr) * dr0, with the
// pseudoinverse truncating singular values below 1e-12 of the largest.
Vec3 linear_velocity_guess(const Vec3& dr0, const Stm& m);

// Nonlinear revisit defect psi = dr(t0 + T) - dr(t0) for a deputy started
// at offset (dr0, dv0), with the chief's revisit state taken from the
// orbit's exact closure.  The orbit must be refined.
ConstraintResidual revisit_residual(const Vec3& dr0, const Vec3& dv0,
                                    const PeriodicOrbit& orbit,
                                    const Tolerances& tol = Tolerances{});

// Correct an initial-velocity guess until the revisit defect norm drops
// below 1e-9 (damped Newton: Levenberg-style steps on the exact
// variational Jacobian with curvature-aware acceleration, then plain
// Newton polish; iterates clamped to guess +- 1.5 LU/TU per component).
// Returns the best iterate with converged = false if 100 iterations or the
// evaluation budget run out; throws CorrectionError if the Jacobian's
// condition number exceeds 1e14.
TeardropSolution correct_teardrop(const RevisitSpec& spec, const Vec3& guess,
                                  const PeriodicOrbit& orbit);

// Per-revisit impulse from the initial relative velocity and the relative
// velocity reached at the revisit epoch: vec = dv0 - dv_T.
ImpulseResult impulse(const Vec3& dv0, const Vec3& dv_T);

// Correct every node of the inclusive grid {0, step, ..., 2*pi} x
// {0, step, ..., 2*pi} at fixed rho.  Both step sizes must divide 2*pi.
// Deterministic: results identical regardless of scheduling; cells run
// concurrently when OpenMP threads are available.
SweepResult sweep_grid(double rho_km, double alpha_step, double beta_step,
                       const PeriodicOrbit& orbit);

namespace detail {
// Single-threaded reference implementation of the same map (kept for
// equivalence testing and benchmarking against the parallel kernel).
SweepResult sweep_grid_serial(double rho_km, double alpha_step,
                              double beta_step, const PeriodicOrbit& orbit);
}  // namespace detail

// Converged grid cell with the smallest impulse magnitude; ties broken by
// first occurrence in row-major order.  Throws std::runtime_error if no
// cell converged.
struct MinImpulseCell {
  double alpha = 0.0;
  double beta = 0.0;
  TeardropSolution solution{};
};
MinImpulseCell min_impulse(const SweepResult& sweep);

}  // namespace teardrop
