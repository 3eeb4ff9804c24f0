#include "teardrop/continuation.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace teardrop {

namespace {

constexpr double kNanoPerKm = 1e9;
constexpr int kMaxHalvings = 4;

const Tolerances kMapTol{detail::kMappingGradeTol, detail::kMappingGradeTol,
                         0.0};

std::int64_t to_lattice(double rho_km) {
  return static_cast<std::int64_t>(std::llround(rho_km * kNanoPerKm));
}

double from_lattice(std::int64_t nano) {
  return static_cast<double>(nano) * 1e-9;
}

}  // namespace

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kTargetReached:
      return "target-reached";
    case TerminationReason::kResidualExceeded:
      return "residual-exceeded";
    case TerminationReason::kMaxSteps:
      return "max-steps";
  }
  return "unknown";
}

PredictorSystem predictor_system(const TeardropSolution& member,
                                 double delta_rho_km,
                                 const PeriodicOrbit& orbit) {
  if (!member.converged) {
    throw std::invalid_argument(
        "predictor_system: member must be a converged solution");
  }
  if (!orbit.refined) {
    throw std::invalid_argument("predictor_system: orbit must be refined");
  }
  const RevisitSpec& spec = member.spec;
  const Vec3 dr0 = revisit_position(spec.rho_km, spec.alpha, spec.beta);

  Vec6 deputy0 = orbit.initial_state.vec();
  deputy0.head<3>() += dr0;
  deputy0.tail<3>() += member.dv0;
  const auto [end_state, stm] = propagate_with_stm(
      StateVector::from(deputy0), 0.0, orbit.period, kMapTol);
  (void)end_state;

  PredictorSystem sys;
  sys.A = stm.rv();
  if (delta_rho_km == 0.0) {
    sys.b = Vec3::Zero();
  } else {
    const Vec3 dr_next =
        revisit_position(spec.rho_km + delta_rho_km, spec.alpha, spec.beta);
    sys.b = (Mat3::Identity() - stm.rr()) * (dr_next - dr0);
  }
  return sys;
}

Vec3 solve_predictor(const PredictorSystem& sys, bool* rank_deficient) {
  if (!sys.A.allFinite() || !sys.b.allFinite()) {
    throw std::invalid_argument("solve_predictor: system must be finite");
  }
  Eigen::JacobiSVD<Mat3> svd(sys.A,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  const bool deficient = s(0) == 0.0 || s(2) < 1e-12 * s(0);
  if (rank_deficient != nullptr) *rank_deficient = deficient;
  if (deficient) {
    // Minimum-norm least-squares solution: drop the null directions.
    Vec3 inv = Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
      if (s(i) >= 1e-12 * s(0) && s(i) > 0.0) inv(i) = 1.0 / s(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() *
           sys.b;
  }
  return sys.A.colPivHouseholderQr().solve(sys.b);
}

Family continue_family(const TeardropSolution& seed, double target_rho_km,
                       const ContinuationConfig& config,
                       const PeriodicOrbit& orbit) {
  if (!seed.converged) {
    throw std::invalid_argument("continue_family: seed must be converged");
  }
  if (!orbit.refined) {
    throw std::invalid_argument("continue_family: orbit must be refined");
  }
  if (!(config.delta_rho_km > 0.0) || config.max_steps < 1 ||
      !(config.eps_tol > 0.0)) {
    throw std::invalid_argument("continue_family: invalid configuration");
  }
  const std::int64_t target = to_lattice(target_rho_km);
  std::int64_t current = to_lattice(seed.spec.rho_km);
  if (target < current) {
    throw std::invalid_argument(
        "continue_family: target distance is below the seed distance");
  }

  Family family;
  family.config = config;
  family.members.push_back(seed);
  family.termination_reason = TerminationReason::kTargetReached;
  if (target == current) return family;

  const double alpha = seed.spec.alpha;
  const double beta = seed.spec.beta;
  std::int64_t step_nano = to_lattice(config.delta_rho_km);

  int steps_taken = 0;
  while (current < target) {
    if (steps_taken >= config.max_steps) {
      family.termination_reason = TerminationReason::kMaxSteps;
      return family;
    }

    const TeardropSolution& prev = family.members.back();
    const std::int64_t next = current + step_nano;
    const double next_km = from_lattice(next);
    const double delta_km = from_lattice(step_nano);

    RevisitSpec spec;
    spec.rho_km = next_km;
    spec.alpha = alpha;
    spec.beta = beta;
    spec.revisit_period = orbit.period;

    TeardropSolution sol;
    bool step_failed = false;
    try {
      const PredictorSystem sys = predictor_system(prev, delta_km, orbit);
      const Vec3 guess = prev.dv0 + solve_predictor(sys);
      sol = correct_teardrop(spec, guess, orbit);
      step_failed = !(sol.residual.norm <= config.eps_tol);
    } catch (const std::exception&) {
      step_failed = true;
    }
    ++steps_taken;

    if (step_failed) {
      if (config.retry_halving) {
        // Retry the same step with a halved increment, up to four times.
        bool recovered = false;
        for (int halvings = 0; halvings < kMaxHalvings; ++halvings) {
          if (step_nano % 2 != 0) break;  // lattice cannot split further
          step_nano /= 2;
          const std::int64_t retry_next = current + step_nano;
          RevisitSpec retry_spec = spec;
          retry_spec.rho_km = from_lattice(retry_next);
          try {
            const PredictorSystem sys =
                predictor_system(prev, from_lattice(step_nano), orbit);
            const Vec3 guess = prev.dv0 + solve_predictor(sys);
            sol = correct_teardrop(retry_spec, guess, orbit);
          } catch (const std::exception&) {
            continue;
          }
          if (sol.residual.norm <= config.eps_tol) {
            recovered = true;
            break;
          }
        }
        if (recovered) {
          current += step_nano;
          family.members.push_back(sol);
          continue;
        }
      }
      family.termination_reason = TerminationReason::kResidualExceeded;
      return family;
    }

    current = next;
    family.members.push_back(sol);
  }

  family.termination_reason = TerminationReason::kTargetReached;
  return family;
}

}  // namespace teardrop
