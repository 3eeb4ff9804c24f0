#include "teardrop/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dop853_coefficients.hpp"

namespace teardrop {

namespace {

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kErrorExponent = -0.125;  // -1/(order of error estimator + 1)
constexpr int kErrorComponents = 6;        // error norm spans the state only
constexpr std::int64_t kMaxSteps = 20'000'000;

thread_local detail::IntegrationStats g_stats;

// Compensated accumulation: keeps `sum + comp` equal to the exact running sum
// while `sum` stays the best double approximation fed back into the dynamics.
inline void compensated_add(double& sum, double& comp, double term) {
  const double folded = term + comp;
  const double t = sum + folded;
  if (std::abs(sum) >= std::abs(folded)) {
    comp = (sum - t) + folded;
  } else {
    comp = (folded - t) + sum;
  }
  sum = t;
}

// Adaptive embedded Runge--Kutta 8(5,3) integrator over N components whose
// right-hand side is `void rhs(double t, const double* y, double* dy)`.
template <int N, class Rhs>
class Integrator {
 public:
  Integrator(Rhs rhs, const double* y0, double t0, double t_final,
             const Tolerances& tol)
      : rhs_(rhs),
        t_(t0),
        rtol_(tol.rel_tol),
        atol_(tol.abs_tol),
        max_step_(tol.max_step > 0.0 ? tol.max_step
                                     : std::numeric_limits<double>::infinity()) {
    if (!(rtol_ > 0.0) || !(atol_ >= 0.0)) {
      throw std::invalid_argument("tolerances must be positive");
    }
    direction_ = (t_final >= t0) ? 1.0 : -1.0;
    for (int i = 0; i < N; ++i) {
      y_[i] = y0[i];
      comp_[i] = 0.0;
    }
    tcomp_ = 0.0;
    g_stats = {};
    rhs_(t_, y_, k_[0]);
    ++g_stats.rhs_evaluations;
    h_abs_ = initial_step(t_final);
  }

  // Integrates exactly onto `target`, which must lie ahead in the direction
  // of integration.
  void advance_to(double target) {
    while (!step_toward(target)) {
    }
    t_ = target;
    tcomp_ = 0.0;
  }

  double time() const { return t_; }

  // Best double representation of the current state (compensation folded in).
  void current_state(double* out) const {
    for (int i = 0; i < N; ++i) out[i] = y_[i] + comp_[i];
  }

 private:
  static double rms6(const double* v, const double* scale) {
    double s = 0.0;
    for (int i = 0; i < kErrorComponents; ++i) {
      const double q = v[i] / scale[i];
      s += q * q;
    }
    return std::sqrt(s / kErrorComponents);
  }

  // Initial step heuristic (Hairer & Wanner II.4), measured on the state
  // components only.
  double initial_step(double t_final) const {
    const double interval = std::abs(t_final - t_);
    if (interval == 0.0) return 1e-6;
    double scale[kErrorComponents];
    for (int i = 0; i < kErrorComponents; ++i) {
      scale[i] = atol_ + std::abs(y_[i]) * rtol_;
    }
    const double d0 = rms6(y_, scale);
    const double d1 = rms6(k_[0], scale);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, interval);
    double y1[N];
    for (int i = 0; i < N; ++i) y1[i] = y_[i] + h0 * direction_ * k_[0][i];
    double f1[N];
    rhs_(t_ + h0 * direction_, y1, f1);
    ++g_stats.rhs_evaluations;
    double df[kErrorComponents];
    for (int i = 0; i < kErrorComponents; ++i) df[i] = f1[i] - k_[0][i];
    const double d2 = rms6(df, scale) / h0;
    double h1;
    if (d1 <= 1e-15 && d2 <= 1e-15) {
      h1 = std::max(1e-6, h0 * 1e-3);
    } else {
      h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    }
    return std::min(std::min(100.0 * h0, h1), std::min(interval, max_step_));
  }

  // Takes one accepted step toward `target`; returns true when the step
  // landed exactly on it.
  bool step_toward(double target) {
    const double inf = std::numeric_limits<double>::infinity();
    const double min_step =
        10.0 * std::abs(std::nextafter(t_, direction_ * inf) - t_);
    double h_abs = std::clamp(h_abs_, min_step, max_step_);

    bool rejected = false;
    for (;;) {
      if (h_abs < min_step) {
        throw PropagationError("step size underflow");
      }
      if (g_stats.steps_accepted + g_stats.steps_rejected > kMaxSteps) {
        throw PropagationError("step budget exceeded");
      }

      double h = h_abs * direction_;
      const double remaining = (target - t_) - tcomp_;
      bool landing = false;
      if (direction_ * (h - remaining) >= 0.0) {
        h = remaining;
        landing = true;
      }
      h_abs = std::abs(h);

      // Stages (k_[0] carries the derivative at the current state).
      for (int s = 1; s < dop853::kStages; ++s) {
        double ys[N];
        for (int i = 0; i < N; ++i) {
          double acc = 0.0;
          for (int j = 0; j < s; ++j) acc += dop853::kA[s][j] * k_[j][i];
          ys[i] = y_[i] + h * acc;
        }
        rhs_(t_ + dop853::kC[s] * h, ys, k_[s]);
        ++g_stats.rhs_evaluations;
      }

      double incr[N];
      double ynew[N];
      for (int i = 0; i < N; ++i) {
        double acc = 0.0;
        for (int j = 0; j < dop853::kStages; ++j) acc += dop853::kB[j] * k_[j][i];
        incr[i] = h * acc;
        ynew[i] = y_[i] + incr[i];
      }
      rhs_(t_ + h, ynew, k_[dop853::kStages]);
      ++g_stats.rhs_evaluations;

      // Combined 5th/3rd-order error estimate over the state components.
      double err5sq = 0.0;
      double err3sq = 0.0;
      for (int i = 0; i < kErrorComponents; ++i) {
        const double scale =
            atol_ + std::max(std::abs(y_[i]), std::abs(ynew[i])) * rtol_;
        double e5 = 0.0;
        double e3 = 0.0;
        for (int j = 0; j < dop853::kSlopes; ++j) {
          e5 += dop853::kE5[j] * k_[j][i];
          e3 += dop853::kE3[j] * k_[j][i];
        }
        e5 /= scale;
        e3 /= scale;
        err5sq += e5 * e5;
        err3sq += e3 * e3;
      }
      double error_norm = 0.0;
      if (err5sq != 0.0 || err3sq != 0.0) {
        error_norm = h_abs * err5sq /
                     std::sqrt((err5sq + 0.01 * err3sq) * kErrorComponents);
      }

      if (error_norm < 1.0) {
        double factor =
            (error_norm == 0.0)
                ? kMaxFactor
                : std::min(kMaxFactor,
                           kSafety * std::pow(error_norm, kErrorExponent));
        if (rejected) factor = std::min(1.0, factor);
        h_abs_ = h_abs * factor;
        ++g_stats.steps_accepted;

        for (int i = 0; i < N; ++i) {
          compensated_add(y_[i], comp_[i], incr[i]);
        }
        if (!landing) compensated_add(t_, tcomp_, h);
        for (int i = 0; i < N; ++i) k_[0][i] = k_[dop853::kStages][i];
        return landing;
      }
      h_abs *= std::max(kMinFactor,
                        kSafety * std::pow(error_norm, kErrorExponent));
      rejected = true;
    }
  }

  Rhs rhs_;
  double t_;
  double tcomp_;
  double rtol_;
  double atol_;
  double max_step_;
  double direction_ = 1.0;
  double h_abs_ = 0.0;
  double y_[N];
  double comp_[N];
  double k_[dop853::kSlopes][N];
};

StateVector state_from_raw(const double* y) {
  return StateVector{y[0], y[1], y[2], y[3], y[4], y[5]};
}

}  // namespace

namespace detail {
IntegrationStats last_integration_stats() { return g_stats; }
}  // namespace detail

Trajectory propagate(const StateVector& state, double t0, double tf,
                     const Tolerances& tol, int n_samples) {
  if (tf < t0) {
    throw std::invalid_argument("propagate requires tf >= t0");
  }
  Trajectory traj;
  traj.epochs.push_back(t0);
  traj.states.push_back(state);
  if (tf == t0) return traj;

  if (n_samples < 0) n_samples = 0;
  double y0[6];
  const Vec6 v0 = state.vec();
  for (int i = 0; i < 6; ++i) y0[i] = v0[i];
  Integrator<6, decltype(&detail::eom_rhs6)> integ(&detail::eom_rhs6, y0, t0,
                                                   tf, tol);
  traj.epochs.reserve(n_samples + 2);
  traj.states.reserve(n_samples + 2);
  for (int k = 1; k <= n_samples; ++k) {
    const double target =
        t0 + (tf - t0) * (static_cast<double>(k) / (n_samples + 1));
    integ.advance_to(target);
    double y[6];
    integ.current_state(y);
    traj.epochs.push_back(integ.time());
    traj.states.push_back(state_from_raw(y));
  }
  integ.advance_to(tf);
  double y[6];
  integ.current_state(y);
  traj.epochs.push_back(tf);
  traj.states.push_back(state_from_raw(y));
  return traj;
}

StateVector propagate_state(const StateVector& state, double t0, double tf,
                            const Tolerances& tol) {
  if (tf < t0) {
    throw std::invalid_argument("propagate requires tf >= t0");
  }
  if (tf == t0) return state;
  double y0[6];
  const Vec6 v0 = state.vec();
  for (int i = 0; i < 6; ++i) y0[i] = v0[i];
  Integrator<6, decltype(&detail::eom_rhs6)> integ(&detail::eom_rhs6, y0, t0,
                                                   tf, tol);
  integ.advance_to(tf);
  double y[6];
  integ.current_state(y);
  return state_from_raw(y);
}

std::pair<StateVector, Stm> propagate_with_stm(const StateVector& state,
                                               double t0, double tf,
                                               const Tolerances& tol) {
  if (tf < t0) {
    throw std::invalid_argument("propagate requires tf >= t0");
  }
  if (tf == t0) return {state, Stm{}};
  double y0[42];
  const Vec6 v0 = state.vec();
  for (int i = 0; i < 6; ++i) y0[i] = v0[i];
  for (int i = 0; i < 36; ++i) y0[6 + i] = 0.0;
  for (int i = 0; i < 6; ++i) y0[6 + 6 * i + i] = 1.0;
  Integrator<42, decltype(&detail::eom_rhs42)> integ(&detail::eom_rhs42, y0,
                                                     t0, tf, tol);
  integ.advance_to(tf);
  double y[42];
  integ.current_state(y);
  Stm stm;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) stm.matrix(r, c) = y[6 + 6 * r + c];
  }
  return {state_from_raw(y), stm};
}

}  // namespace teardrop
