#pragma once

// The 9:2 synodic-resonant near-rectilinear halo orbit: a symmetric periodic
// solution with fixed period 4*pi/9 TU, refined to machine-level periodicity
// by a half-period symmetry shooter, plus its monodromy matrix and spectrum.

#include <array>
#include <complex>
#include <stdexcept>

#include "teardrop/cr3bp_core.hpp"
#include "teardrop/propagation.hpp"

namespace teardrop {

// A symmetric periodic orbit seeded (and, after refinement, corrected) at an
// x-z plane crossing: y = u = w = 0 exactly in initial_state.
struct PeriodicOrbit {
  StateVector initial_state{};
  double period = 4.0 * kPi / 9.0;  // TU; fixed by the 9:2 resonance
  bool refined = false;
  double closure_norm = 0.0;   // ||X(period) - X(0)|| of the refined state
  double jacobi = 0.0;         // integral of motion at initial_state
  int refine_iterations = 0;   // Newton updates applied by the refiner
};

// Tabulated initial guess for the orbit (unrefined).
PeriodicOrbit nominal_orbit_guess();

// Thrown when the periodicity shooter cannot converge or its Jacobian is
// numerically singular.
class RefinementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when the eigen-decomposition of a monodromy matrix fails or lacks
// the structure a routine requires.
class SpectrumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Newton-correct the free components (x0, z0, v0) of a symmetric guess so
// that the half-period state satisfies y = u = w = 0, holding the period
// fixed.  The returned orbit closes over a full period to better than 1e-10.
// Throws std::invalid_argument if the guess is not in symmetric form,
// RefinementError after 25 iterations without reaching ||(y,u,w)|| < 1e-13
// or if the 3x3 Jacobian has condition number > 1e12.
PeriodicOrbit refine_nrho(const PeriodicOrbit& guess,
                          const Tolerances& tol = Tolerances{});

// State transition matrix over one full period, evaluated along the orbit.
// Requires a refined orbit (std::invalid_argument otherwise).
Stm monodromy(const PeriodicOrbit& orbit);

// Eigen-decomposition of a monodromy matrix with a deterministic ordering
// (|lambda| descending, exact-magnitude ties by ascending complex argument)
// and the index pairing of its symplectic structure: the dominant/reciprocal
// pair (largest and smallest magnitude), the conjugate pair (largest
// imaginary parts among the rest), and the near-unit pair (the remaining
// two).  Eigenvector columns are unit-norm with the largest component made
// real positive.
struct MonodromySpectrum {
  std::array<std::complex<double>, 6> eigenvalues{};
  Eigen::Matrix<std::complex<double>, 6, 6> eigenvectors =
      Eigen::Matrix<std::complex<double>, 6, 6>::Zero();
  std::array<int, 2> reciprocal_pair{};
  std::array<int, 2> near_unit_pair{};
  std::array<int, 2> conjugate_pair{};
};

// Throws SpectrumError if the eigen-solver fails or produces non-finite
// values.
MonodromySpectrum spectrum(const Stm& m);

// Unit-norm real eigenvector for the eigenvalue closest to 1, which must lie
// within 1e-3 of 1 (SpectrumError otherwise).  Sign convention: the first
// component of magnitude above 1e-12 is positive.
Vec6 unit_eigenvector(const Stm& m);

}  // namespace teardrop
