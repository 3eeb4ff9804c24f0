#include "teardrop/periodic_orbit.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace teardrop {

namespace {

using Mat3 = Eigen::Matrix3d;
using Vec3d = Eigen::Vector3d;

constexpr double kResidualTarget = 1e-13;   // ||(y,u,w)(T/2)|| at convergence
constexpr int kMaxNewtonIterations = 25;
constexpr double kMaxConditionNumber = 1e12;

// Half-period symmetry defect and its Jacobian with respect to (x0, z0, v0).
struct SymmetryDefect {
  Vec3d f;       // (y, u, w) at T/2
  Mat3 jac;      // rows {y,u,w}, columns {x0, z0, v0} of Phi(T/2)
};

SymmetryDefect half_period_defect(const StateVector& s0, double half_period,
                                  const Tolerances& tol) {
  const auto [sh, stm] = propagate_with_stm(s0, 0.0, half_period, tol);
  SymmetryDefect d;
  d.f << sh.y, sh.u, sh.w;
  const int rows[3] = {1, 3, 5};
  const int cols[3] = {0, 2, 4};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d.jac(i, j) = stm.matrix(rows[i], cols[j]);
  return d;
}

double condition_number(const Mat3& m) {
  // Singular values via the spectrum of m^T m; precision near the 1e12
  // guard threshold is ample for a sanity check.
  Eigen::SelfAdjointEigenSolver<Mat3> eig(m.transpose() * m);
  const double lmin = eig.eigenvalues()(0);
  const double lmax = eig.eigenvalues()(2);
  if (lmin <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(lmax / lmin);
}

}  // namespace

PeriodicOrbit nominal_orbit_guess() {
  PeriodicOrbit orbit;
  orbit.initial_state = StateVector{0.987581435006489, 0.0, 0.005276210630165,
                                    0.0, 2.120240531159090, 0.0};
  orbit.jacobi = jacobi_constant(orbit.initial_state);
  return orbit;
}

PeriodicOrbit refine_nrho(const PeriodicOrbit& guess, const Tolerances& tol) {
  if (guess.initial_state.y != 0.0 || guess.initial_state.u != 0.0 ||
      guess.initial_state.w != 0.0) {
    throw std::invalid_argument(
        "refine_nrho: guess must satisfy y = u = w = 0 exactly");
  }
  if (!(guess.period > 0.0)) {
    throw std::invalid_argument("refine_nrho: period must be positive");
  }
  const Tolerances itol = detail::clamped(tol, detail::kClosureGradeTol);
  const double half = 0.5 * guess.period;

  StateVector s = guess.initial_state;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
  for (int k = 0; k <= kMaxNewtonIterations; ++k) {
    const SymmetryDefect d = half_period_defect(s, half, itol);
    residual = d.f.norm();
    if (residual < kResidualTarget) {
      converged = true;
      break;
    }
    if (k == kMaxNewtonIterations) break;
    const double cond = condition_number(d.jac);
    if (cond > kMaxConditionNumber) {
      std::ostringstream msg;
      msg << "refine_nrho: symmetry Jacobian is numerically singular "
             "(condition number "
          << cond << ")";
      throw RefinementError(msg.str());
    }
    const Vec3d step = d.jac.partialPivLu().solve(-d.f);
    s.x += step(0);
    s.z += step(1);
    s.v += step(2);
    ++iterations;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "refine_nrho: no convergence after " << kMaxNewtonIterations
        << " iterations (residual " << residual << ")";
    throw RefinementError(msg.str());
  }

  PeriodicOrbit orbit;
  orbit.initial_state = s;
  orbit.period = guess.period;
  orbit.refined = true;
  orbit.refine_iterations = iterations;
  orbit.jacobi = jacobi_constant(s);
  const StateVector sT = propagate_state(s, 0.0, guess.period, itol);
  orbit.closure_norm = (sT.vec() - s.vec()).norm();
  return orbit;
}

Stm monodromy(const PeriodicOrbit& orbit) {
  if (!orbit.refined) {
    throw std::invalid_argument("monodromy: orbit must be refined");
  }
  // The near-unit eigenvalue pair is a numerically split double root; its
  // split grows like the square root of the matrix error, so the monodromy
  // is integrated at the closure-grade setting to keep the split inside the
  // 1e-3 pairing tolerance.
  const Tolerances itol =
      detail::clamped(Tolerances{}, detail::kClosureGradeTol);
  auto [sT, stm] = propagate_with_stm(orbit.initial_state, 0.0, orbit.period,
                                      itol);
  (void)sT;
  return stm;
}

MonodromySpectrum spectrum(const Stm& m) {
  Eigen::EigenSolver<Mat6> solver(m.matrix);
  if (solver.info() != Eigen::Success) {
    throw SpectrumError("spectrum: eigen-decomposition failed to converge");
  }
  const auto values = solver.eigenvalues();
  const auto vectors = solver.eigenvectors();
  for (int i = 0; i < 6; ++i) {
    if (!std::isfinite(values(i).real()) || !std::isfinite(values(i).imag()))
      throw SpectrumError("spectrum: non-finite eigenvalue");
  }

  // Deterministic order: |lambda| descending; bit-equal magnitudes (exact
  // conjugate pairs, repeated roots) by ascending argument, then input index.
  std::array<int, 6> order;
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = std::abs(values(a));
    const double mb = std::abs(values(b));
    if (ma != mb) return ma > mb;
    return std::arg(values(a)) < std::arg(values(b));
  });

  MonodromySpectrum out;
  for (int i = 0; i < 6; ++i) {
    out.eigenvalues[i] = values(order[i]);
    Eigen::Vector<std::complex<double>, 6> v = vectors.col(order[i]);
    // Phase-fix: rotate the largest-magnitude component onto the positive
    // real axis, then renormalize.
    int k = 0;
    for (int j = 1; j < 6; ++j)
      if (std::abs(v(j)) > std::abs(v(k))) k = j;
    if (std::abs(v(k)) > 0.0) v *= std::conj(v(k)) / std::abs(v(k));
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n))
      throw SpectrumError("spectrum: degenerate eigenvector");
    out.eigenvectors.col(i) = v / n;
  }

  // Pairing by symplectic structure: extremal magnitudes are reciprocal
  // partners; of the middle four, the two with the largest imaginary parts
  // form the conjugate pair and the remaining two the near-unit pair.
  out.reciprocal_pair = {0, 5};
  std::array<int, 4> middle = {1, 2, 3, 4};
  std::stable_sort(middle.begin(), middle.end(), [&](int a, int b) {
    return std::abs(out.eigenvalues[a].imag()) >
           std::abs(out.eigenvalues[b].imag());
  });
  std::array<int, 2> conj = {middle[0], middle[1]};
  std::array<int, 2> unit = {middle[2], middle[3]};
  std::sort(conj.begin(), conj.end());
  std::sort(unit.begin(), unit.end());
  out.conjugate_pair = conj;
  out.near_unit_pair = unit;
  return out;
}

Vec6 unit_eigenvector(const Stm& m) {
  const MonodromySpectrum spec = spectrum(m);
  int best = 0;
  double best_dist = std::abs(spec.eigenvalues[0] - 1.0);
  for (int i = 1; i < 6; ++i) {
    const double d = std::abs(spec.eigenvalues[i] - 1.0);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  if (!(best_dist <= 1e-3)) {
    std::ostringstream msg;
    msg << "unit_eigenvector: no eigenvalue within 1e-3 of 1 (closest at "
        << best_dist << ")";
    throw SpectrumError(msg.str());
  }
  // The phase-fixed eigenvector of a (near-)real eigenvalue is real up to
  // numerical noise; keep the real part and renormalize.
  Vec6 e = spec.eigenvectors.col(best).real();
  const double n = e.norm();
  if (!(n > 0.0))
    throw SpectrumError("unit_eigenvector: eigenvector has no real part");
  e /= n;
  for (int i = 0; i < 6; ++i) {
    if (std::abs(e(i)) > 1e-12) {
      if (e(i) < 0.0) e = -e;
      break;
    }
  }
  return e;
}

}  // namespace teardrop
