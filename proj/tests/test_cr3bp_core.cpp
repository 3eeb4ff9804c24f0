#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "teardrop/cr3bp_core.hpp"

using namespace teardrop;

namespace {

const StateVector kHaloSeed{0.987581435006489, 0.0, 0.005276210630165,
                            0.0, 2.120240531159090, 0.0};

Vec6 fd_column(const StateVector& s, int j, double h) {
  Vec6 plus = s.vec();
  Vec6 minus = s.vec();
  plus[j] += h;
  minus[j] -= h;
  return (eom_derivative(StateVector::from(plus)).vec() -
          eom_derivative(StateVector::from(minus)).vec()) /
         (2.0 * h);
}

}  // namespace

TEST_CASE("constants are internally consistent") {
  CHECK(kConstants.synodic_period_s ==
        doctest::Approx(2.0 * kPi * kConstants.time_unit_s).epsilon(1e-15));
  CHECK(kConstants.synodic_period_s == doctest::Approx(2360448.0055833757).epsilon(1e-15));
  CHECK(kLuPerKm == doctest::Approx(2.60142297836917e-6).epsilon(1e-14));
  CHECK(kMpsPerLuTu == doctest::Approx(1023.2329).epsilon(1e-7));
}

TEST_CASE("jacobi constant reference values") {
  CHECK(jacobi_constant(StateVector{0.5, 0, 0, 0, 0, 0}) ==
        doctest::Approx(4.169467475513766).epsilon(1e-15));
  CHECK(jacobi_constant(kHaloSeed) == doctest::Approx(3.0680066133000437).epsilon(1e-13));
}

TEST_CASE("derivative structure at the symmetric halo seed") {
  const StateVector d = eom_derivative(kHaloSeed);
  CHECK(d.x == kHaloSeed.u);
  CHECK(d.y == kHaloSeed.v);
  CHECK(d.z == kHaloSeed.w);
  // Planar symmetry of the seed (y = u = w = 0) kills the y-acceleration.
  CHECK(d.v == 0.0);
}

TEST_CASE("derivative obeys the mirror-and-reverse symmetry") {
  std::mt19937_64 rng(20240915);
  std::uniform_real_distribution<double> dist(-0.8, 0.8);
  for (int k = 0; k < 50; ++k) {
    StateVector s{dist(rng), dist(rng), dist(rng), dist(rng), dist(rng), dist(rng)};
    const double d2 = std::hypot(s.x + kConstants.mass_ratio - 1.0, s.y, s.z);
    const double d1 = std::hypot(s.x + kConstants.mass_ratio, s.y, s.z);
    if (d1 < 0.01 || d2 < 0.01) continue;
    const StateVector m{s.x, -s.y, s.z, -s.u, s.v, -s.w};
    const Vec6 fm = eom_derivative(m).vec();
    Vec6 expect = eom_derivative(s).vec();
    expect[0] = -expect[0];
    expect[2] = -expect[2];
    expect[4] = -expect[4];
    CHECK_LE((fm - expect).norm(), 1e-14);
  }
}

namespace {

// Worst entrywise disagreement between the analytic Jacobian and a central
// difference with step 1e-7, normalized by the largest Jacobian entry.  The
// normalization matters: near a primary the gravity-gradient entries reach
// ~1e5 and the difference scheme's truncation error (fifth inverse power of
// the primary distance) dwarfs any fixed absolute threshold while staying
// ~1e-9 of the matrix scale.
double fd_relative_error(const StateVector& s) {
  const Mat6 a = eom_jacobian(s);
  const double scale = a.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (int j = 0; j < 6; ++j) {
    const Vec6 col = fd_column(s, j, 1e-7);
    for (int i = 0; i < 6; ++i) {
      worst = std::max(worst, std::abs(a(i, j) - col[i]));
    }
  }
  return worst / scale;
}

}  // namespace

TEST_CASE("analytic jacobian matches central differences") {
  CHECK(fd_relative_error(kHaloSeed) < 1e-6);

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(-1.2, 1.2);
  int tested = 0;
  while (tested < 100) {
    StateVector s{dist(rng), dist(rng), dist(rng), dist(rng), dist(rng), dist(rng)};
    const double d2 = std::hypot(s.x + kConstants.mass_ratio - 1.0, s.y, s.z);
    const double d1 = std::hypot(s.x + kConstants.mass_ratio, s.y, s.z);
    if (d1 < 0.01 || d2 < 0.01) continue;
    ++tested;
    CHECK(fd_relative_error(s) < 1e-6);
  }
}

TEST_CASE("jacobian block structure") {
  const Mat6 a = eom_jacobian(kHaloSeed);
  CHECK(a.block<3, 3>(0, 0).isZero(0.0));
  CHECK(a.block<3, 3>(0, 3).isIdentity(0.0));
  // Coriolis block.
  CHECK(a(3, 4) == 2.0);
  CHECK(a(4, 3) == -2.0);
  CHECK(a(3, 5) == 0.0);
  CHECK(a(5, 3) == 0.0);
  // Gravity-gradient block is symmetric.
  const Mat3 g = a.block<3, 3>(3, 0);
  CHECK_LE((g - g.transpose()).norm(), 1e-18);
}

TEST_CASE("singularity guard trips at the primaries") {
  const StateVector at_moon{1.0 - kConstants.mass_ratio, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS((void)eom_derivative(at_moon), SingularityError);
  CHECK_THROWS_AS((void)jacobi_constant(at_moon), SingularityError);
  CHECK_THROWS_AS((void)eom_jacobian(at_moon), SingularityError);
  const StateVector at_earth{-kConstants.mass_ratio, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS((void)eom_derivative(at_earth), SingularityError);
}

TEST_CASE("unit conversions round-trip and match reference scales") {
  CHECK(convert_units(1.0, UnitKind::kLength, UnitDirection::kToNondimensional) ==
        doctest::Approx(2.60142297836917e-6).epsilon(1e-14));
  CHECK(convert_units(1.0, UnitKind::kVelocity, UnitDirection::kToDimensional) ==
        doctest::Approx(1023.2329).epsilon(1e-7));
  CHECK(convert_units(1.0, UnitKind::kTime, UnitDirection::kToDimensional) ==
        doctest::Approx(3.75676968e5).epsilon(1e-15));
  for (UnitKind kind : {UnitKind::kLength, UnitKind::kVelocity, UnitKind::kTime}) {
    const double v = 1234.5678;
    const double rt = convert_units(
        convert_units(v, kind, UnitDirection::kToNondimensional), kind,
        UnitDirection::kToDimensional);
    CHECK(rt == doctest::Approx(v).epsilon(1e-15));
  }
}

TEST_CASE("raw 42-dimensional derivative is consistent with state + jacobian") {
  double s[42];
  const Vec6 x0 = kHaloSeed.vec();
  for (int i = 0; i < 6; ++i) s[i] = x0[i];
  for (int i = 0; i < 36; ++i) s[6 + i] = 0.0;
  for (int i = 0; i < 6; ++i) s[6 + 6 * i + i] = 1.0;
  double ds[42];
  detail::eom_rhs42(0.0, s, ds);
  const Vec6 f = eom_derivative(kHaloSeed).vec();
  for (int i = 0; i < 6; ++i) CHECK(ds[i] == f[i]);
  const Mat6 a = eom_jacobian(kHaloSeed);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) CHECK(ds[6 + 6 * r + c] == a(r, c));
  }
}
