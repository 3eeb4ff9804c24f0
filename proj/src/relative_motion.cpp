#include "teardrop/relative_motion.hpp"

#include <cmath>
#include <stdexcept>

namespace teardrop {

RelativeState linear_map(const RelativeState& dX0, const Stm& phi) {
  return RelativeState::from(phi.matrix * dX0.vec());
}

std::pair<RelativeState, Trajectory> nonlinear_relative(
    const StateVector& chief0, const RelativeState& dX0, double dt,
    const Tolerances& tol, int n_samples,
    const PeriodicOrbit* closed_reference) {
  const Trajectory chief = propagate(chief0, 0.0, dt, tol, n_samples);
  const StateVector deputy0 = StateVector::from(chief0.vec() + dX0.vec());
  const Trajectory deputy = propagate(deputy0, 0.0, dt, tol, n_samples);
  if (chief.size() != deputy.size()) {
    throw std::logic_error(
        "nonlinear_relative: sample epochs of chief and deputy diverged");
  }

  Trajectory rel;
  rel.epochs = chief.epochs;
  rel.states.reserve(chief.size());
  for (std::size_t i = 0; i < chief.size(); ++i) {
    rel.states.push_back(
        StateVector::from(deputy.states[i].vec() - chief.states[i].vec()));
  }

  if (closed_reference != nullptr && closed_reference->refined &&
      std::abs(dt - closed_reference->period) < 1e-12) {
    rel.states.back() =
        StateVector::from(deputy.back().vec() - chief0.vec());
  }
  return {RelativeState::from(rel.back().vec()), rel};
}

}  // namespace teardrop
