#include "teardrop/teardrop_design.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace teardrop {

namespace {

constexpr double kResidualConverged = 1e-9;   // contract convergence level
constexpr double kResidualFloor = 1e-10;      // stop refining below this
constexpr double kGuessBoxHalfWidth = 1.5;    // LU/TU, per component
constexpr double kMaxJacobianCondition = 1e14;
constexpr int kMaxIterations = 100;
constexpr int kMainEvalBudget = 298;
constexpr int kTotalEvalBudget = 348;
constexpr int kMaxPolishIterations = 12;

const Tolerances kMapTol{detail::kMappingGradeTol, detail::kMappingGradeTol,
                         0.0};

// Defect, Jacobian, and deputy end state for one candidate initial velocity.
struct DefectEval {
  Vec3 psi;
  Mat3 jac;       // sensitivity of the end position to the initial velocity
  Vec6 deputy_T;  // absolute deputy state at the revisit epoch
};

DefectEval eval_defect(const StateVector& chief0, const Vec3& dr0,
                       const Vec3& dv0, double period) {
  Vec6 d0 = chief0.vec();
  d0.head<3>() += dr0;
  d0.tail<3>() += dv0;
  const auto [sT, stm] =
      propagate_with_stm(StateVector::from(d0), 0.0, period, kMapTol);
  DefectEval e;
  e.deputy_T = sT.vec();
  // Associate as (deputy - chief) - offset so the result matches
  // revisit_residual bit for bit.
  e.psi = e.deputy_T.head<3>() - chief0.position() - dr0;
  e.jac = stm.rv();
  return e;
}

Vec3 eval_defect_only(const StateVector& chief0, const Vec3& dr0,
                      const Vec3& dv0, double period) {
  Vec6 d0 = chief0.vec();
  d0.head<3>() += dr0;
  d0.tail<3>() += dv0;
  const StateVector sT = propagate_state(StateVector::from(d0), 0.0, period,
                                         kMapTol);
  return sT.vec().head<3>() - chief0.position() - dr0;
}

Vec3 clamp_to_box(const Vec3& x, const Vec3& lo, const Vec3& hi) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) out(i) = std::clamp(x(i), lo(i), hi(i));
  return out;
}

double condition_2norm(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m);
  const double smin = svd.singularValues()(2);
  return svd.singularValues()(0) / std::max(smin, 1e-300);
}

}  // namespace

Vec3 revisit_position(double rho_km, double alpha, double beta) {
  if (!(rho_km > 0.0)) {
    throw std::invalid_argument("revisit_position: rho must be positive");
  }
  const double rho_lu = rho_km * kLuPerKm;
  return rho_lu * Vec3(std::sin(alpha) * std::cos(beta),
                       std::sin(alpha) * std::sin(beta), std::cos(alpha));
}

Vec3 linear_velocity_guess(const Vec3& dr0, const Stm& m) {
  const Mat3 prr = m.rr();
  const Mat3 prv = m.rv();
  const Vec3 b = (Mat3::Identity() - prr) * dr0;
  Eigen::JacobiSVD<Mat3> svd(prv, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  const double cutoff = 1e-12 * s(0);
  Vec3 inv = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * b;
}

ConstraintResidual revisit_residual(const Vec3& dr0, const Vec3& dv0,
                                    const PeriodicOrbit& orbit,
                                    const Tolerances& tol) {
  if (!orbit.refined) {
    throw std::invalid_argument("revisit_residual: orbit must be refined");
  }
  const Tolerances itol = detail::clamped(tol, detail::kMappingGradeTol);
  Vec6 d0;
  d0 << dr0, dv0;
  const auto [rel, traj] =
      nonlinear_relative(orbit.initial_state, RelativeState::from(d0),
                         orbit.period, itol, 0, &orbit);
  ConstraintResidual r;
  r.psi = rel.dr() - dr0;
  r.norm = r.psi.norm();
  return r;
}

ImpulseResult impulse(const Vec3& dv0, const Vec3& dv_T) {
  ImpulseResult r;
  r.vec = dv0 - dv_T;
  r.magnitude = r.vec.norm();
  r.magnitude_mps = convert_units(r.magnitude, UnitKind::kVelocity,
                                  UnitDirection::kToDimensional);
  return r;
}

TeardropSolution correct_teardrop(const RevisitSpec& spec, const Vec3& guess,
                                  const PeriodicOrbit& orbit) {
  if (!orbit.refined) {
    throw std::invalid_argument("correct_teardrop: orbit must be refined");
  }
  if (!(spec.rho_km > 0.0) || !guess.allFinite()) {
    throw std::invalid_argument(
        "correct_teardrop: spec and guess must be finite with rho > 0");
  }
  if (std::abs(spec.revisit_period - orbit.period) > 1e-12) {
    throw std::invalid_argument(
        "correct_teardrop: revisit period must equal the orbit period");
  }

  const StateVector& chief0 = orbit.initial_state;
  const double period = orbit.period;
  const Vec3 dr0 = revisit_position(spec.rho_km, spec.alpha, spec.beta);
  const Vec3 lo = guess.array() - kGuessBoxHalfWidth;
  const Vec3 hi = guess.array() + kGuessBoxHalfWidth;

  // Damped Newton on psi(dv0) = 0: Levenberg-regularized steps with a
  // curvature (second-directional-derivative) correction when the step is
  // large enough to resolve it, followed by plain Newton polish.
  Vec3 x = guess;
  DefectEval cur = eval_defect(chief0, dr0, x, period);
  double pn = cur.psi.norm();
  int evals = 1;
  int iters = 0;

  const double maxdiag0 =
      cur.jac.array().square().colwise().sum().maxCoeff();
  double mu = 1e-6 * maxdiag0;
  double nu = 2.0;

  Vec3 best_x = x;
  DefectEval best = cur;
  double best_pn = pn;

  while (pn >= kResidualFloor && iters < kMaxIterations &&
         evals < kMainEvalBudget) {
    if (condition_2norm(cur.jac) > kMaxJacobianCondition) {
      std::ostringstream msg;
      msg << "correct_teardrop: defect Jacobian condition number exceeds "
          << kMaxJacobianCondition;
      throw CorrectionError(msg.str());
    }
    const Mat3 a = cur.jac.transpose() * cur.jac;
    const Vec3 g = cur.jac.transpose() * cur.psi;
    const Mat3 damped = a + mu * Mat3::Identity();
    const Vec3 h = damped.partialPivLu().solve(-g);

    Vec3 step = h;
    if (h.norm() >= 1e-6) {
      const double delta = 0.1;
      const Vec3 probe = eval_defect_only(chief0, dr0, x + delta * h, period);
      ++evals;
      const Vec3 k2 = (2.0 / delta) * ((probe - cur.psi) / delta - cur.jac * h);
      const Vec3 acc =
          -0.5 * damped.partialPivLu().solve(cur.jac.transpose() * k2);
      if (acc.norm() <= 0.75 * h.norm()) step = h + acc;
    }

    const Vec3 cand = clamp_to_box(x + step, lo, hi);
    const Vec3 h_eff = cand - x;
    const DefectEval next = eval_defect(chief0, dr0, cand, period);
    ++evals;
    const double pcn = next.psi.norm();
    if (pcn < pn) {
      const double predicted_decrease = 0.5 * h_eff.dot(mu * h_eff - g);
      const double gain = std::min(
          (0.5 * pn * pn - 0.5 * pcn * pcn) /
              std::max(predicted_decrease, 1e-300),
          1.0);
      x = cand;
      cur = next;
      pn = pcn;
      ++iters;
      const double shrink = 1.0 - std::pow(2.0 * gain - 1.0, 3);
      mu = std::max(mu * std::max(1.0 / 3.0, shrink), 1e-15 * maxdiag0);
      nu = 2.0;
      if (pn < best_pn) {
        best_x = x;
        best = cur;
        best_pn = pn;
      }
    } else {
      mu *= nu;
      nu *= 2.0;
      if (mu > 1e16 * std::max(maxdiag0, 1.0)) break;
    }
  }

  // Newton polish from the best iterate, halving the step until it improves.
  x = best_x;
  cur = eval_defect(chief0, dr0, x, period);
  pn = cur.psi.norm();
  ++evals;
  int polish = 0;
  while (polish < kMaxPolishIterations && evals < kTotalEvalBudget) {
    const Vec3 h = cur.jac.partialPivLu().solve(-cur.psi);
    double lambda = 1.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 10 && evals < kTotalEvalBudget + 10;
         ++attempt) {
      const Vec3 cand = clamp_to_box(x + lambda * h, lo, hi);
      const DefectEval next = eval_defect(chief0, dr0, cand, period);
      ++evals;
      if (next.psi.norm() < pn) {
        x = cand;
        cur = next;
        pn = next.psi.norm();
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;
    ++polish;
    ++iters;
    if (pn < best_pn) {
      best_x = x;
      best = cur;
      best_pn = pn;
    }
  }

  TeardropSolution sol;
  sol.spec = spec;
  sol.dv0 = best_x;
  sol.residual.psi = best.psi;
  sol.residual.norm = best_pn;
  sol.converged = best_pn < kResidualConverged;
  sol.iterations = iters;
  const Vec3 dv_T = best.deputy_T.tail<3>() - chief0.velocity();
  const ImpulseResult imp = impulse(best_x, dv_T);
  sol.impulse_vec = imp.vec;
  sol.impulse_mag = imp.magnitude;
  sol.impulse_mag_mps = imp.magnitude_mps;
  return sol;
}

namespace {

TeardropSolution run_cell(double rho_km, double alpha, double beta,
                          const PeriodicOrbit& orbit, const Stm& m) {
  RevisitSpec spec;
  spec.rho_km = rho_km;
  spec.alpha = alpha;
  spec.beta = beta;
  spec.revisit_period = orbit.period;
  const Vec3 dr0 = revisit_position(rho_km, alpha, beta);
  const Vec3 guess = linear_velocity_guess(dr0, m);
  try {
    return correct_teardrop(spec, guess, orbit);
  } catch (const std::exception&) {
    // Degenerate Jacobian or propagation failure: record the cell as failed
    // rather than aborting the sweep.
    TeardropSolution failed;
    failed.spec = spec;
    failed.dv0 = guess;
    failed.residual.psi =
        Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
    failed.residual.norm = std::numeric_limits<double>::infinity();
    failed.converged = false;
    failed.impulse_mag = std::numeric_limits<double>::infinity();
    failed.impulse_mag_mps = std::numeric_limits<double>::infinity();
    return failed;
  }
}

std::vector<double> inclusive_axis(double step, const char* name) {
  if (!(step > 0.0)) {
    throw std::invalid_argument(std::string("sweep_grid: ") + name +
                                " step must be positive");
  }
  const double cells = 2.0 * kPi / step;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 || rounded < 1.0) {
    throw std::invalid_argument(std::string("sweep_grid: ") + name +
                                " step must divide 2*pi");
  }
  const int n = static_cast<int>(rounded);
  std::vector<double> axis(n + 1);
  for (int k = 0; k <= n; ++k) axis[k] = k * step;
  return axis;
}

SweepResult run_sweep(double rho_km, double alpha_step, double beta_step,
                      const PeriodicOrbit& orbit, bool parallel) {
  if (!orbit.refined) {
    throw std::invalid_argument("sweep_grid: orbit must be refined");
  }
  if (!(rho_km > 0.0)) {
    throw std::invalid_argument("sweep_grid: rho must be positive");
  }
  SweepResult out;
  out.rho_km = rho_km;
  out.alpha_grid = inclusive_axis(alpha_step, "alpha");
  out.beta_grid = inclusive_axis(beta_step, "beta");
  const Stm m = monodromy(orbit);

  const int na = static_cast<int>(out.alpha_grid.size());
  const int nb = static_cast<int>(out.beta_grid.size());
  out.solutions.resize(static_cast<std::size_t>(na) * nb);
  out.impulse_map.resize(out.solutions.size());

#pragma omp parallel for collapse(2) schedule(dynamic) if (parallel)
  for (int ai = 0; ai < na; ++ai) {
    for (int bi = 0; bi < nb; ++bi) {
      const std::size_t idx = static_cast<std::size_t>(ai) * nb + bi;
      out.solutions[idx] =
          run_cell(rho_km, out.alpha_grid[ai], out.beta_grid[bi], orbit, m);
      out.impulse_map[idx] = out.solutions[idx].impulse_mag_mps;
    }
  }

  for (int ai = 0; ai < na; ++ai) {
    for (int bi = 0; bi < nb; ++bi) {
      if (!out.solutions[out.index(ai, bi)].converged) {
        out.failures.emplace_back(ai, bi);
      }
    }
  }
  return out;
}

}  // namespace

SweepResult sweep_grid(double rho_km, double alpha_step, double beta_step,
                       const PeriodicOrbit& orbit) {
  return run_sweep(rho_km, alpha_step, beta_step, orbit, true);
}

namespace detail {
SweepResult sweep_grid_serial(double rho_km, double alpha_step,
                              double beta_step, const PeriodicOrbit& orbit) {
  return run_sweep(rho_km, alpha_step, beta_step, orbit, false);
}
}  // namespace detail

MinImpulseCell min_impulse(const SweepResult& sweep) {
  const TeardropSolution* best = nullptr;
  std::size_t best_ai = 0, best_bi = 0;
  for (std::size_t ai = 0; ai < sweep.alpha_grid.size(); ++ai) {
    for (std::size_t bi = 0; bi < sweep.beta_grid.size(); ++bi) {
      const TeardropSolution& s = sweep.solutions[sweep.index(ai, bi)];
      if (!s.converged) continue;
      if (best == nullptr || s.impulse_mag < best->impulse_mag) {
        best = &s;
        best_ai = ai;
        best_bi = bi;
      }
    }
  }
  if (best == nullptr) {
    throw std::runtime_error("min_impulse: no converged cell in the sweep");
  }
  MinImpulseCell cell;
  cell.alpha = sweep.alpha_grid[best_ai];
  cell.beta = sweep.beta_grid[best_bi];
  cell.solution = *best;
  return cell;
}

}  // namespace teardrop
