#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cansys/weyl.hpp"
#include "support/families.hpp"

using namespace cansys;

namespace {
const Complex kI(0.0, 1.0);
}

TEST_CASE("constant-Hamiltonian Weyl closed form") {
  SECTION("identity gives m = i") {
    CHECK(std::abs(constant_weyl(Mat2d::identity()) - kI) == 0.0);
  }
  SECTION("diag(1/2, 2) gives m = 2i") {
    CHECK(std::abs(constant_weyl(Mat2d{0.5, 0.0, 0.0, 2.0}) - 2.0 * kI) < 1e-15);
  }
  SECTION("((1, 1/2), (1/2, 1)) gives m = i sqrt(3)/2 + 1/2") {
    const Complex m = constant_weyl(Mat2d{1.0, 0.5, 0.5, 1.0});
    CHECK(m.real() == Catch::Approx(0.5).margin(1e-15));
    CHECK(m.imag() == Catch::Approx(std::sqrt(3.0) / 2.0).margin(1e-15));
  }
}

TEST_CASE("free Hamiltonian: m = i with exponentially shrinking disk") {
  const Hamiltonian H = Hamiltonian::free();
  WeylOptions opts;
  opts.use_tail = false;
  const WeylEstimate e6 = weyl_function(H, 0.0, kI, 6.0, opts);
  const WeylEstimate e12 = weyl_function(H, 0.0, kI, 12.0, opts);
  CHECK(std::abs(e6.value - kI) <= e6.radius + 1e-9);
  CHECK(std::abs(e12.value - kI) <= e12.radius + 1e-10);
  CHECK(e12.radius < 1e-4 * e6.radius);
}

TEST_CASE("omega-spread estimator reproduces random det-one constant tails") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> nu(0.7, 1.5), ang(0.0, 3.14159);
  WeylOptions opts;
  opts.use_tail = false;
  opts.tol = 1e-12;
  for (int trial = 0; trial < 5; ++trial) {
    const double v = nu(rng), a = ang(rng);
    const double c = std::cos(a), s = std::sin(a);
    const Mat2d rot{c, -s, s, c};
    const Mat2d C = rot.transpose() * Mat2d{v, 0.0, 0.0, 1.0 / v} * rot;
    const Hamiltonian H = Hamiltonian::constant(C);
    const WeylEstimate est = weyl_function(H, 0.0, kI, 15.0, opts);
    CHECK(std::abs(est.value - constant_weyl(C)) <= est.radius + 1e-8);
  }
}

TEST_CASE("herglotz point") {
  SECTION("free: (I, R) = (1, 0)") {
    const HerglotzPoint hp = herglotz_at_i(Hamiltonian::free(), 0.0, 12.0);
    CHECK(hp.I == Catch::Approx(1.0).margin(1e-10));
    CHECK(std::abs(hp.R) < 1e-10);
  }
  SECTION("diagonal Hamiltonians have R = 0") {
    const BuiltModel m = build_hamiltonian(families::bump());
    for (double r : {0.0, 0.8, 1.7, 3.0}) {
      const HerglotzPoint hp = herglotz_at_i(m.H, r, r + 15.0);
      CHECK(std::abs(hp.R) < 1e-9);
      CHECK(hp.I > 0.0);
    }
  }
  SECTION("constant diag(1/2, 2): (I, R) = (2, 0)") {
    const Hamiltonian H = Hamiltonian::constant(Mat2d{0.5, 0.0, 0.0, 2.0});
    WeylOptions opts;
    opts.use_tail = false;
    const HerglotzPoint hp = herglotz_at_i(H, 0.3, 16.0, opts);
    CHECK(hp.I == Catch::Approx(2.0).margin(1e-9));
    CHECK(std::abs(hp.R) < 1e-9);
  }
  SECTION("q = 0.5: I(0) is the golden ratio") {
    // Decaying eigenvector of the constant-coefficient Dirac system gives
    // m(i) = i (1 + sqrt 5)/2 for this potential.
    const BuiltModel m = build_hamiltonian(families::constQ());
    const HerglotzPoint hp = herglotz_at_i(m.H, 0.0, 22.0);
    CHECK(hp.I == Catch::Approx(0.5 * (1.0 + std::sqrt(5.0))).margin(1e-8));
    CHECK(std::abs(hp.R) < 1e-8);
  }
}

TEST_CASE("Weyl disks nest as the depth grows") {
  const BuiltModel m = build_hamiltonian(families::bump());
  WeylOptions opts;
  opts.use_tail = false;
  double prev_radius = 0.0;
  Complex prev_mid;
  bool first = true;
  for (double depth : {3.0, 5.0, 8.0, 12.0}) {
    const WeylEstimate est = weyl_function(m.H, 0.0, kI, depth, opts);
    if (!first) {
      CHECK(std::abs(est.value - prev_mid) <= prev_radius + 1e-12);
      CHECK(est.radius <= prev_radius + 1e-12);
    }
    prev_radius = est.radius;
    prev_mid = est.value;
    first = false;
  }
}

TEST_CASE("tail closure agrees with the deep omega-spread estimate") {
  const BuiltModel m = build_hamiltonian(families::bump());
  WeylOptions deep;
  deep.use_tail = false;
  for (Complex z : {kI, Complex(1.0, 0.5), Complex(-0.7, 2.0)}) {
    const WeylEstimate exact = weyl_function(m.H, 0.0, z, 5.0);
    const WeylEstimate est = weyl_function(m.H, 0.0, z, 25.0, deep);
    CHECK(exact.exact_tail);
    CHECK(std::abs(exact.value - est.value) <= est.radius + 1e-8);
  }
}

TEST_CASE("boundary density") {
  SECTION("free model: w = 1 within 1e-6") {
    const HerglotzData dens =
        boundary_density(Hamiltonian::free(), 0.0, makePoissonGrid(64));
    for (std::size_t k = 0; k < dens.size(); ++k) {
      REQUIRE(dens.flag[k] == 0);
      CHECK(dens.w[k] == Catch::Approx(1.0).margin(1e-6));
    }
    CHECK(dens.grid.poissonWeight() * static_cast<double>(dens.size()) ==
          Catch::Approx(1.0).margin(1e-15));
  }
  SECTION("constant diag(1/2, 2): w = 2") {
    const Hamiltonian H = Hamiltonian::constant(Mat2d{0.5, 0.0, 0.0, 2.0});
    const HerglotzData dens = boundary_density(H, 0.0, makePoissonGrid(32));
    for (std::size_t k = 0; k < dens.size(); ++k)
      CHECK(dens.w[k] == Catch::Approx(2.0).margin(1e-6));
    CHECK(dens.a == Catch::Approx(0.0).margin(1e-9));
  }
  SECTION("density is nonnegative at unflagged nodes (CONST family)") {
    const BuiltModel m = build_hamiltonian(families::constQ());
    const HerglotzData dens = boundary_density(m.H, 0.0, makePoissonGrid(48));
    for (std::size_t k = 0; k < dens.size(); ++k)
      if (!dens.flag[k]) CHECK(dens.w[k] >= 0.0);
  }
}

TEST_CASE("Bernstein-Szego truncation") {
  SECTION("tail matrix has unit determinant and reproduces m_r(i)") {
    const BuiltModel m = build_hamiltonian(families::bump());
    const BSTruncation bst = bs_truncate(m.H, 1.3);
    CHECK(bst.tailMatrix().det() == Catch::Approx(1.0).margin(1e-12));
    const Complex mc = constant_weyl(bst.tailMatrix());
    CHECK(mc.imag() == Catch::Approx(bst.I).margin(1e-12));
    CHECK(mc.real() == Catch::Approx(bst.R).margin(1e-12));
  }
  SECTION("r = 0 density is I(0) for all x") {
    const BuiltModel m = build_hamiltonian(families::bump());
    const BSTruncation bst = bs_truncate(m.H, 0.0);
    for (double x : {-3.0, 0.0, 1.5, 20.0})
      CHECK(bs_density(m.H, 0.0, x, bst) == Catch::Approx(bst.I).margin(1e-10));
  }
  SECTION("free model: w-hat = 1 at any r") {
    const Hamiltonian H = Hamiltonian::free();
    const BSTruncation bst = bs_truncate(H, 2.0);
    for (double x : {-5.0, -0.3, 0.9, 7.0})
      CHECK(bs_density(H, 2.0, x, bst) == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("truncated q = 0.5 at r = 2: the two density routes agree to 1e-5") {
    const BuiltModel m = build_hamiltonian(families::constQ());
    const BSTruncation bst = bs_truncate(m.H, 2.0, 24.0);
    const Hamiltonian trunc = truncated_hamiltonian(m.H, bst);
    BoundaryDensityOptions bopts;
    bopts.eps_schedule = {4e-3, 2e-3, 1e-3};
    const PoissonGrid grid = makePoissonGrid(48);
    const HerglotzData dens = boundary_density(trunc, 0.0, grid, bopts);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      REQUIRE(dens.flag[k] == 0);
      const double direct = bs_density(m.H, 2.0, grid.x[k], bst);
      CHECK(dens.w[k] == Catch::Approx(direct).margin(1e-5));
    }
  }
  SECTION("BS tail of an already constant det-one Hamiltonian reproduces it") {
    const BuiltModel m = build_hamiltonian(families::bump());
    const double r = 3.0;  // past the support, H is constant there
    const BSTruncation bst = bs_truncate(m.H, r);
    CHECK(maxAbs(bst.tailMatrix() - m.H(r)) < 1e-9);
  }
  SECTION("refuses when the disk is larger than Im m") {
    const BuiltModel m = build_hamiltonian(families::bump());
    WeylOptions opts;
    opts.use_tail = false;
    CHECK_THROWS_AS(bs_truncate(m.H, 0.0, 0.05, opts), NumericError);
  }
}

TEST_CASE("radius is nonincreasing in depth on the CONST family") {
  const BuiltModel m = build_hamiltonian(families::constQ());
  WeylOptions opts;
  opts.use_tail = false;
  double prev = 1e300;
  for (double depth : {6.0, 9.0, 12.0, 15.0}) {
    const WeylEstimate est = weyl_function(m.H, 0.0, Complex(0.3, 1.0), depth, opts);
    CHECK(est.radius <= prev + 1e-12);
    prev = est.radius;
  }
}
