#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <algorithm>
#include <random>
#include <vector>

#include "teardrop/cr3bp_core.hpp"
#include "teardrop/periodic_orbit.hpp"
#include "teardrop/propagation.hpp"

using namespace teardrop;

namespace {

const PeriodicOrbit& refined_orbit() {
  static const PeriodicOrbit orbit = refine_nrho(nominal_orbit_guess());
  return orbit;
}

const Stm& orbit_monodromy() {
  static const Stm m = monodromy(refined_orbit());
  return m;
}

}  // namespace

TEST_CASE("tabulated guess has the symmetric halo form") {
  const PeriodicOrbit g = nominal_orbit_guess();
  CHECK(g.initial_state.y == 0.0);
  CHECK(g.initial_state.u == 0.0);
  CHECK(g.initial_state.w == 0.0);
  CHECK(g.period == doctest::Approx(4.0 * kPi / 9.0).epsilon(1e-15));
  CHECK_FALSE(g.refined);
}

TEST_CASE("refinement converges fast and closes the orbit") {
  const PeriodicOrbit g = nominal_orbit_guess();
  const PeriodicOrbit r = refined_orbit();
  std::printf("refined: x0=%.17g z0=%.17g v0=%.17g\n", r.initial_state.x,
              r.initial_state.z, r.initial_state.v);
  std::printf("         iters=%d closure=%.3e jacobi=%.17g\n",
              r.refine_iterations, r.closure_norm, r.jacobi);
  CHECK(r.refined);
  CHECK(r.refine_iterations <= 5);
  CHECK(r.closure_norm < 1e-10);
  CHECK(r.initial_state.y == 0.0);
  CHECK(r.initial_state.u == 0.0);
  CHECK(r.initial_state.w == 0.0);
  CHECK(r.period == g.period);
  // The correction moves the tabulated digits only slightly.
  const double dx = r.initial_state.x - g.initial_state.x;
  const double dz = r.initial_state.z - g.initial_state.z;
  const double dv = r.initial_state.v - g.initial_state.v;
  CHECK(std::sqrt(dx * dx + dz * dz + dv * dv) < 1e-9);
  // Independent cross-check of the refined root (reference solver digits).
  CHECK(r.initial_state.x == doctest::Approx(0.9875814350065146).epsilon(1e-12));
  CHECK(r.initial_state.z ==
        doctest::Approx(0.005276210630042331).epsilon(2e-9));
  CHECK(r.initial_state.v == doctest::Approx(2.1202405311845562).epsilon(1e-11));
  CHECK(r.jacobi == doctest::Approx(3.0680066133000437).epsilon(1e-12));
}

TEST_CASE("refinement is a fixed point on a refined orbit") {
  const PeriodicOrbit r1 = refined_orbit();
  const PeriodicOrbit r2 = refine_nrho(r1);
  CHECK(r2.refine_iterations == 0);
  CHECK((r2.initial_state.vec() - r1.initial_state.vec()).norm() < 1e-12);
}

TEST_CASE("refinement recovers from a perturbed guess") {
  PeriodicOrbit g = nominal_orbit_guess();
  g.initial_state.z += 1e-6;
  const PeriodicOrbit r = refine_nrho(g);
  CHECK((r.initial_state.vec() - refined_orbit().initial_state.vec()).norm() <
        1e-10);
}

TEST_CASE("refinement rejects malformed input") {
  PeriodicOrbit g = nominal_orbit_guess();
  g.initial_state.y = 1e-6;
  CHECK_THROWS_AS((void)refine_nrho(g), std::invalid_argument);

  PeriodicOrbit far = nominal_orbit_guess();
  far.initial_state = StateVector{1.5, 0.0, 0.5, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS((void)refine_nrho(far), std::runtime_error);
}

TEST_CASE("monodromy requires a refined orbit and is symplectic") {
  CHECK_THROWS_AS((void)monodromy(nominal_orbit_guess()),
                  std::invalid_argument);
  const Stm& m = orbit_monodromy();
  CHECK(std::abs(m.determinant() - 1.0) < 1e-6);
}

TEST_CASE("monodromy maps small offsets like the nonlinear flow") {
  // Central differencing of the flow map at offset 1e-8; the remaining
  // error is the direction-dependent cubic flow term, so the 1e-4 bound is
  // checked on the median of several generic directions.
  const Stm& m = orbit_monodromy();
  const PeriodicOrbit& orbit = refined_orbit();
  const Tolerances tight{2e-15, 2e-15};
  std::mt19937 rng(20260815);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> rel;
  for (int trial = 0; trial < 4; ++trial) {
    Vec6 dir;
    for (int i = 0; i < 6; ++i) dir(i) = unif(rng);
    dir.normalize();
    const Vec6 d = 1e-8 * dir;
    const Vec6 plus =
        propagate_state(StateVector::from(orbit.initial_state.vec() + d), 0.0,
                        orbit.period, tight)
            .vec();
    const Vec6 minus =
        propagate_state(StateVector::from(orbit.initial_state.vec() - d), 0.0,
                        orbit.period, tight)
            .vec();
    const Vec6 flowed = 0.5 * (plus - minus);
    rel.push_back((m.matrix * d - flowed).norm() / flowed.norm());
    CHECK(rel.back() < 3e-4);
  }
  std::sort(rel.begin(), rel.end());
  CHECK(0.5 * (rel[1] + rel[2]) < 1e-4);
}

TEST_CASE("spectrum of the identity is all ones") {
  Stm id;
  const MonodromySpectrum s = spectrum(id);
  for (const auto& ev : s.eigenvalues) {
    CHECK(std::abs(ev - 1.0) < 1e-12);
  }
}

TEST_CASE("orbit spectrum has the expected pairing structure") {
  const MonodromySpectrum s = spectrum(orbit_monodromy());
  std::printf("eigenvalues:");
  for (const auto& ev : s.eigenvalues)
    std::printf(" (%.6g%+.6gi)", ev.real(), ev.imag());
  std::printf("\n");

  // Ordering: magnitudes non-increasing.
  for (int i = 1; i < 6; ++i) {
    CHECK(std::abs(s.eigenvalues[i]) <= std::abs(s.eigenvalues[i - 1]) + 1e-15);
  }
  // Reciprocal (hyperbolic) pair.
  const auto rec = s.eigenvalues[s.reciprocal_pair[0]] *
                   s.eigenvalues[s.reciprocal_pair[1]];
  CHECK(std::abs(rec - 1.0) < 1e-6);
  // Conjugate pair: mirror images within 1e-8, on the unit circle.
  const auto c0 = s.eigenvalues[s.conjugate_pair[0]];
  const auto c1 = s.eigenvalues[s.conjugate_pair[1]];
  CHECK(std::abs(c0 - std::conj(c1)) < 1e-8);
  CHECK(std::abs(c0 * c1 - 1.0) < 1e-6);
  // Near-unit pair.
  CHECK(std::abs(s.eigenvalues[s.near_unit_pair[0]] - 1.0) < 1e-3);
  CHECK(std::abs(s.eigenvalues[s.near_unit_pair[1]] - 1.0) < 1e-3);
  // Full product (determinant) is one.
  std::complex<double> prod = 1.0;
  for (const auto& ev : s.eigenvalues) prod *= ev;
  CHECK(std::abs(prod - 1.0) < 1e-6);
  // Eigenvectors are unit-norm and satisfy the eigen-relation.
  for (int i = 0; i < 6; ++i) {
    const auto v = s.eigenvectors.col(i);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    const double resid =
        (orbit_monodromy().matrix * v - s.eigenvalues[i] * v).norm();
    CHECK(resid < 1e-8 * std::abs(s.eigenvalues[i]) +
                      1e-7);  // scaled by the ~2e4 matrix norm
  }
}

TEST_CASE("spectrum recovers a constructed set of eigenvalues") {
  // Block-diagonal seed with a reciprocal pair, a unit-circle rotation pair,
  // and a reciprocal near-unit pair, conjugated by a random similarity.
  const double theta = 0.711;
  Mat6 d = Mat6::Zero();
  d(0, 0) = 2.0;
  d(1, 1) = 0.5;
  d(2, 2) = std::cos(theta);
  d(2, 3) = -std::sin(theta);
  d(3, 2) = std::sin(theta);
  d(3, 3) = std::cos(theta);
  d(4, 4) = 1.2;
  d(5, 5) = 1.0 / 1.2;
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Mat6 sim;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) sim(i, j) = unif(rng) + (i == j ? 3.0 : 0.0);
  const Mat6 m = sim * d * sim.inverse();

  Stm stm;
  stm.matrix = m;
  const MonodromySpectrum s = spectrum(stm);
  const std::complex<double> expected[6] = {
      {2.0, 0.0},
      {1.2, 0.0},
      {std::cos(theta), -std::sin(theta)},
      {std::cos(theta), std::sin(theta)},
      {1.0 / 1.2, 0.0},
      {0.5, 0.0}};
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(s.eigenvalues[i] - expected[i]) < 1e-9);
  }
  CHECK(s.reciprocal_pair == std::array<int, 2>{0, 5});
  CHECK(s.conjugate_pair == std::array<int, 2>{2, 3});
  CHECK(s.near_unit_pair == std::array<int, 2>{1, 4});
}

TEST_CASE("unit eigenvector behaves as specified") {
  const Vec6 e = unit_eigenvector(orbit_monodromy());
  CHECK(std::abs(e.norm() - 1.0) < 1e-12);
  CHECK((orbit_monodromy().matrix * e - e).norm() < 1e-3);
  for (int i = 0; i < 6; ++i) {
    if (std::abs(e(i)) > 1e-12) {
      CHECK(e(i) > 0.0);
      break;
    }
  }

  Stm id;
  const Vec6 ei = unit_eigenvector(id);
  CHECK(std::abs(ei.norm() - 1.0) < 1e-12);
  CHECK((id.matrix * ei - ei).norm() == 0.0);

  Stm doubled;
  doubled.matrix = 2.0 * Mat6::Identity();
  CHECK_THROWS_AS((void)unit_eigenvector(doubled), SpectrumError);
}
