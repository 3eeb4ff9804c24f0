#pragma once

#include <string>
#include <vector>

#include "teardrop/teardrop_design.hpp"

namespace teardrop {

// Settings for walking a formation family outward in revisit distance.
struct ContinuationConfig {
  double delta_rho_km = 0.1;  // increment between neighboring members
  int max_steps = 499;        // correction attempts before giving up
  double eps_tol = 1e-9;      // residual norm a member must reach
  // When a step fails to correct, retry it with a halved increment (up to
  // four halvings) instead of terminating. Off by default: the plain rule is
  // to end the family at the first failed step.
  bool retry_halving = false;
};

// Linear prediction of how the initial velocity offset must change when the
// revisit distance grows by delta_rho: A * dv_change = b.
struct PredictorSystem {
  Mat3 A = Mat3::Zero();  // sensitivity of the revisit position to dv0
  Vec3 b = Vec3::Zero();  // required change of the revisit position offset
};

enum class TerminationReason { kTargetReached, kResidualExceeded, kMaxSteps };

std::string to_string(TerminationReason reason);

// Ordered family of converged designs at strictly increasing revisit
// distances, all sharing the seed's (alpha, beta) direction.
struct Family {
  std::vector<TeardropSolution> members;
  ContinuationConfig config;
  TerminationReason termination_reason = TerminationReason::kTargetReached;
};

// Builds the linear system predicting the velocity-offset change for a
// distance increment, from the state transition matrix along the member's
// own (deputy) trajectory over one revisit period — not the chief's
// monodromy matrix.
PredictorSystem predictor_system(const TeardropSolution& member,
                                 double delta_rho_km,
                                 const PeriodicOrbit& orbit);

// Least-squares solution of the predictor system via a rank-revealing QR
// factorization. If A is numerically rank-deficient (smallest singular value
// below 1e-12 of the largest), falls back to the minimum-norm solution and
// sets *rank_deficient when the pointer is given.
Vec3 solve_predictor(const PredictorSystem& sys,
                     bool* rank_deficient = nullptr);

// Continues a converged seed outward by exact decimal increments of
// delta_rho_km until the target distance is reached, a step fails to
// correct, or the step budget runs out. Distances are tracked on an integer
// nanometer-of-a-kilometer lattice so that member labels like "50 km" are
// exact after hundreds of steps.
Family continue_family(const TeardropSolution& seed, double target_rho_km,
                       const ContinuationConfig& config,
                       const PeriodicOrbit& orbit);

}  // namespace teardrop
