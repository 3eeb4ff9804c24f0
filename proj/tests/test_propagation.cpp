#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "teardrop/cr3bp_core.hpp"
#include "teardrop/propagation.hpp"

using namespace teardrop;

namespace {

constexpr double kPeriod = 4.0 * kPi / 9.0;

// Halo seed digits (initial guess).
const StateVector kHaloSeed{0.987581435006489, 0.0, 0.005276210630165,
                            0.0, 2.120240531159090, 0.0};

// The same orbit refined to machine-level half-period symmetry; closure of
// this state over one period measures integrator error alone.
const StateVector kRefinedSeed{0.9875814350065146, 0.0, 0.005276210630042331,
                               0.0, 2.1202405311845562, 0.0};

const Tolerances kTight{1e-14, 1e-14, 0.0};

// Tolerance at which one-period closure error bottoms out (truncation and
// roundoff balance); the orbit refiner integrates at this setting.
const Tolerances kClosure{2e-15, 2e-15, 0.0};

double closure_norm(const StateVector& s0, const Tolerances& tol) {
  const StateVector sT = propagate_state(s0, 0.0, kPeriod, tol);
  return (sT.vec() - s0.vec()).norm();
}

}  // namespace

TEST_CASE("one-period closure of the refined orbit (integrator quality gate)") {
  const double gap = closure_norm(kRefinedSeed, kClosure);
  const auto stats = detail::last_integration_stats();
  std::printf("closure(refined, tol 2e-15) = %.3e  steps=%lld rejected=%lld rhs=%lld\n",
              gap, static_cast<long long>(stats.steps_accepted),
              static_cast<long long>(stats.steps_rejected),
              static_cast<long long>(stats.rhs_evaluations));
  CHECK(gap < 1e-10);
  // Looser setting still lands within a factor of a few of the gate.
  CHECK(closure_norm(kRefinedSeed, kTight) < 5e-10);
}

TEST_CASE("one-period closure of the tabulated guess state") {
  CHECK(closure_norm(kHaloSeed, Tolerances{}) < 1e-8);
}

TEST_CASE("zero-length propagation returns the input") {
  const Trajectory traj = propagate(kHaloSeed, 1.25, 1.25);
  REQUIRE(traj.size() == 1);
  CHECK(traj.epochs[0] == 1.25);
  CHECK(traj.states[0].vec() == kHaloSeed.vec());

  const auto [sT, stm] = propagate_with_stm(kHaloSeed, 0.5, 0.5);
  CHECK(sT.vec() == kHaloSeed.vec());
  CHECK(stm.matrix.isIdentity(0.0));
}

TEST_CASE("backward propagation is rejected") {
  CHECK_THROWS_AS((void)propagate(kHaloSeed, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)propagate_state(kHaloSeed, 1.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)propagate_with_stm(kHaloSeed, 1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("jacobi constant is conserved along arcs") {
  const double c0 = jacobi_constant(kRefinedSeed);
  for (double frac : {0.25, 0.5, 1.0}) {
    const StateVector s = propagate_state(kRefinedSeed, 0.0, frac * kPeriod);
    CHECK(std::abs(jacobi_constant(s) - c0) < 1e-11);
  }
  // A displaced, non-periodic arc conserves energy as well.
  StateVector off = kRefinedSeed;
  off.y += 2.0e-4;
  off.u += 1.0e-4;
  const StateVector s = propagate_state(off, 0.0, kPeriod);
  CHECK(std::abs(jacobi_constant(s) - jacobi_constant(off)) < 1e-11);
}

TEST_CASE("dense output sampling") {
  const int n = 7;
  const Trajectory traj = propagate(kRefinedSeed, 0.0, kPeriod, Tolerances{}, n);
  REQUIRE(traj.size() == static_cast<std::size_t>(n + 2));
  CHECK(traj.epochs.front() == 0.0);
  CHECK(traj.epochs.back() == kPeriod);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    CHECK(traj.epochs[i] > traj.epochs[i - 1]);
    const double expect = kPeriod * static_cast<double>(i) / (n + 1);
    CHECK(std::abs(traj.epochs[i] - expect) < 1e-14);
  }
  // Samples lie on the solution: restarting from one reproduces the endpoint.
  const StateVector mid = traj.states[4];
  const double tmid = traj.epochs[4];
  const StateVector endpoint = propagate_state(mid, tmid, kPeriod);
  CHECK((endpoint.vec() - traj.back().vec()).norm() < 1e-10);
}

TEST_CASE("halving the tolerances barely moves a one-period arc") {
  const StateVector a =
      propagate_state(kRefinedSeed, 0.0, kPeriod, Tolerances{1e-13, 1e-13});
  const StateVector b =
      propagate_state(kRefinedSeed, 0.0, kPeriod, Tolerances{5e-14, 5e-14});
  CHECK((a.vec() - b.vec()).norm() < 1e-9);
}

TEST_CASE("mirror-and-reverse symmetry of propagated arcs") {
  // If s(t) solves the equations of motion, so does the y-mirrored,
  // time-reversed arc; running it forward from the mirrored endpoint must
  // land on the mirrored start.
  const double dt = 0.3 * kPeriod;
  const StateVector b = propagate_state(kRefinedSeed, 0.0, dt, kTight);
  const StateVector mb{b.x, -b.y, b.z, -b.u, b.v, -b.w};
  const StateVector back = propagate_state(mb, 0.0, dt, kTight);
  const StateVector ma{kRefinedSeed.x, -kRefinedSeed.y, kRefinedSeed.z,
                       -kRefinedSeed.u, kRefinedSeed.v, -kRefinedSeed.w};
  CHECK((back.vec() - ma.vec()).norm() < 1e-9);
}

TEST_CASE("state transition matrix columns match finite differences") {
  const double dt = 0.3 * kPeriod;
  const auto [sT, stm] = propagate_with_stm(kRefinedSeed, 0.0, dt, kTight);
  CHECK((sT.vec() - propagate_state(kRefinedSeed, 0.0, dt, kTight).vec())
            .norm() < 1e-12);
  const double eps = 1e-8;
  for (int j = 0; j < 6; ++j) {
    Vec6 plus = kRefinedSeed.vec();
    Vec6 minus = kRefinedSeed.vec();
    plus[j] += eps;
    minus[j] -= eps;
    const Vec6 col =
        (propagate_state(StateVector::from(plus), 0.0, dt, kTight).vec() -
         propagate_state(StateVector::from(minus), 0.0, dt, kTight).vec()) /
        (2.0 * eps);
    const double rel =
        (stm.matrix.col(j) - col).norm() / stm.matrix.col(j).norm();
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("state transition matrices compose along an arc") {
  const double t0 = 0.15 * kPeriod;
  const double t1 = 0.5 * kPeriod;
  const double t2 = 0.85 * kPeriod;
  const StateVector s_t0 = propagate_state(kRefinedSeed, 0.0, t0, kTight);
  const auto [s_t1, phi10] = propagate_with_stm(s_t0, t0, t1, kTight);
  const auto [s_t2a, phi21] = propagate_with_stm(s_t1, t1, t2, kTight);
  const auto [s_t2b, phi20] = propagate_with_stm(s_t0, t0, t2, kTight);
  CHECK((s_t2a.vec() - s_t2b.vec()).norm() < 1e-11);
  const Mat6 composed = phi21.matrix * phi10.matrix;
  CHECK((composed - phi20.matrix).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("variational flow is symplectic") {
  const auto [sT, stm] = propagate_with_stm(kRefinedSeed, 0.0, kPeriod, kTight);
  (void)sT;
  CHECK(std::abs(stm.determinant() - 1.0) < 1e-6);
}

TEST_CASE("42-dimensional propagation follows the state-only path exactly") {
  for (double frac : {0.3, 1.0}) {
    const StateVector plain =
        propagate_state(kRefinedSeed, 0.0, frac * kPeriod, kTight);
    const auto [coupled, stm] =
        propagate_with_stm(kRefinedSeed, 0.0, frac * kPeriod, kTight);
    (void)stm;
    CHECK((plain.vec() - coupled.vec()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("falling into a primary raises an error") {
  const StateVector falling{1.0 - kConstants.mass_ratio + 1e-4, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS((void)propagate_state(falling, 0.0, 1.0),
                  std::runtime_error);
}
