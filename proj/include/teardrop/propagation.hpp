#pragma once

// Adaptive high-order propagation of rotating-frame states and of the coupled
// state + state-transition-matrix system.
//
// The integrator is an embedded Dormand--Prince 8(5,3) pair with PI-free
// step control (accept when the combined 5th/3rd-order error estimate is
// below one) and compensated (Neumaier) accumulation of both the state and
// the clock, which keeps round-off growth over a full orbit period near the
// few-ulp level.  Requested epochs are hit exactly by clipping the step, not
// by interpolation.

#include <cstdint>
#include <utility>
#include <vector>

#include "teardrop/cr3bp_core.hpp"

namespace teardrop {

// Integration error control.  The local error estimate of component i is
// weighted by abs_tol + max(|y_i|) * rel_tol; for the coupled 42-dimensional
// system only the six state components enter the error norm, so a propagation
// with and without the variational block follows the same step sequence.
struct Tolerances {
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  double max_step = 0.0;  // largest step in TU; values <= 0 mean unbounded
};

// Thrown on step-size underflow or when the step budget is exhausted.
class PropagationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Cap a user tolerance from above; routines whose result contracts require a
// specific integration quality clamp the caller's setting through this.
inline Tolerances clamped(const Tolerances& t, double cap) {
  return Tolerances{t.abs_tol < cap ? t.abs_tol : cap,
                    t.rel_tol < cap ? t.rel_tol : cap, t.max_step};
}

// One-period closure error of the halo bottoms out (truncation meets
// round-off) near this tolerance; the orbit refiner integrates here.
inline constexpr double kClosureGradeTol = 2e-15;

// Default internal tolerance for mapping work (monodromy, residuals,
// corrections, drift studies) whose contracts live at the 1e-9 level.
inline constexpr double kMappingGradeTol = 1e-14;

}  // namespace detail

// Time-ordered samples of a propagated arc.
struct Trajectory {
  std::vector<double> epochs;        // TU, strictly increasing
  std::vector<StateVector> states;   // one per epoch

  std::size_t size() const { return epochs.size(); }
  const StateVector& front() const { return states.front(); }
  const StateVector& back() const { return states.back(); }
};

// State transition matrix Phi(tf, t0) with its standard 3x3 partitions.
struct Stm {
  Mat6 matrix = Mat6::Identity();

  Mat3 rr() const { return matrix.block<3, 3>(0, 0); }
  Mat3 rv() const { return matrix.block<3, 3>(0, 3); }
  Mat3 vr() const { return matrix.block<3, 3>(3, 0); }
  Mat3 vv() const { return matrix.block<3, 3>(3, 3); }
  double determinant() const { return matrix.determinant(); }
};

// Propagates `state` from t0 to tf (tf >= t0) and returns the arc sampled at
// n_samples interior epochs, evenly spaced, plus both endpoints.  tf == t0
// yields a single-row trajectory.
Trajectory propagate(const StateVector& state, double t0, double tf,
                     const Tolerances& tol = {}, int n_samples = 0);

// Endpoint-only propagation.
StateVector propagate_state(const StateVector& state, double t0, double tf,
                            const Tolerances& tol = {});

// Propagates the coupled 42-dimensional system (state plus variational
// equations seeded with the identity) and returns the final state together
// with Phi(tf, t0).
std::pair<StateVector, Stm> propagate_with_stm(const StateVector& state,
                                               double t0, double tf,
                                               const Tolerances& tol = {});

namespace detail {

// Diagnostics of the most recent propagation on this thread (test support).
struct IntegrationStats {
  std::int64_t rhs_evaluations = 0;
  std::int64_t steps_accepted = 0;
  std::int64_t steps_rejected = 0;
};
IntegrationStats last_integration_stats();

}  // namespace detail

}  // namespace teardrop
