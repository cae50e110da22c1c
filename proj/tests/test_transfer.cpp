#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "cansys/transfer.hpp"
#include "support/families.hpp"

using namespace cansys;

namespace {

// Independent fixed-step classical RK4 oracle for M' = z J^{-1} H M.
Mat2c rk4Oracle(const Hamiltonian& H, Complex z, double t_end, std::size_t steps) {
  auto rhs = [&H, z](double t, const Mat2c& m) {
    const Mat2d hm = H(t);
    const Mat2c a{z * hm.a12, z * hm.a22, -z * hm.a11, -z * hm.a12};
    return a * m;
  };
  Mat2c y = Mat2c::identity();
  const double h = t_end / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = h * static_cast<double>(i);
    const Mat2c k1 = rhs(t, y);
    const Mat2c k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1);
    const Mat2c k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2);
    const Mat2c k4 = rhs(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

Mat2c freeClosedForm(Complex z, double t) {
  const Complex c = std::cos(z * t), s = std::sin(z * t);
  return {c, s, -s, c};
}

}  // namespace

TEST_CASE("free Hamiltonian: rotation closed form") {
  const Hamiltonian H = Hamiltonian::free();
  const auto grid = linspace(0.0, 6.0, 25);
  for (Complex z : {Complex(1.5, 0.0), Complex(0.0, 1.0), Complex(2.0, 0.5)}) {
    const auto states = evolve_canonical(H, z, grid, 1e-11);
    for (const auto& st : states)
      CHECK(maxAbs(st.M - freeClosedForm(z, st.t)) < 1e-9 * std::max(1.0, maxAbs(st.M)));
  }
}

TEST_CASE("z = 0 freezes the transfer matrix at the identity") {
  const BuiltModel m = build_hamiltonian(families::bump());
  const auto grid = linspace(0.0, 8.0, 9);
  const auto states = evolve_canonical(m.H, Complex(0.0, 0.0), grid, 1e-11);
  for (const auto& st : states) CHECK(maxAbs(st.M - Mat2c::identity()) < 1e-12);
}

TEST_CASE("off-diagonal q = 0.5 at z = i matches the independent RK4 oracle") {
  const BuiltModel m = build_hamiltonian(families::constQ());
  const TransferState st = evolve_canonical_to(m.H, Complex(0.0, 1.0), 1.0, 1e-10);
  const Mat2c ref = rk4Oracle(m.H, Complex(0.0, 1.0), 1.0, 20000);
  CHECK(maxAbs(st.M - ref) < 1e-10);
}

TEST_CASE("determinant stays at one across a real spectral sweep") {
  const BuiltModel m = build_hamiltonian(families::bump());
  const Hamiltonian Hfree = Hamiltonian::free();
  const auto grid = linspace(0.0, 10.0, 21);
  for (int k = 0; k < 64; ++k) {
    const double x = -8.0 + 16.0 * k / 63.0;
    for (const Hamiltonian* H : {&m.H, &Hfree}) {
      const auto states = evolve_canonical(*H, Complex(x, 0.0), grid, 1e-10);
      for (const auto& st : states) CHECK(std::abs(st.det() - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("entrywise conjugate symmetry M(t, conj z) = conj M(t, z)") {
  const BuiltModel m = build_hamiltonian(families::gbump());
  const auto grid = linspace(0.0, 4.0, 17);
  for (Complex z : {Complex(1.0, 0.7), Complex(-2.0, 0.3), Complex(0.4, 1.0)}) {
    const auto a = evolve_canonical(m.H, z, grid, 1e-11);
    const auto b = evolve_canonical(m.H, std::conj(z), grid, 1e-11);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Mat2c diff{b[i].M.a11 - std::conj(a[i].M.a11),
                       b[i].M.a12 - std::conj(a[i].M.a12),
                       b[i].M.a21 - std::conj(a[i].M.a21),
                       b[i].M.a22 - std::conj(a[i].M.a22)};
      CHECK(maxAbs(diff) < 1e-10 * std::max(1.0, maxAbs(a[i].M)));
    }
  }
}

TEST_CASE("composition: M(t2) = M_[t1,t2] * M(t1)") {
  const BuiltModel m = build_hamiltonian(families::bump());
  const Complex z(0.8, 0.4);
  const double t1 = 1.3, t2 = 3.7;
  const TransferState full = evolve_canonical_to(m.H, z, t2, 1e-11);
  const TransferState first = evolve_canonical_to(m.H, z, t1, 1e-11);
  const TransferState second = evolve_canonical_to(m.H.shifted(t1), z, t2 - t1, 1e-11);
  CHECK(maxAbs(full.M - second.M * first.M) < 1e-8);
}

TEST_CASE("Dirac eigenvector") {
  SECTION("free closed form Psi = (cos xt, -sin xt)") {
    const auto spec = families::freeQ();
    const auto grid = linspace(0.0, 5.0, 11);
    const double x = 1.7;
    const auto psi = evolve_dirac(spec, Complex(x, 0.0), grid, 1e-11);
    for (std::size_t i = 0; i < psi.size(); ++i) {
      CHECK(std::abs(psi[i].x - std::cos(x * grid[i])) < 1e-9);
      CHECK(std::abs(psi[i].y + std::sin(x * grid[i])) < 1e-9);
    }
  }
  SECTION("z = 0 with zero potential keeps Psi = (1, 0)") {
    const auto psi = evolve_dirac(families::freeQ(), Complex(0.0, 0.0),
                                  linspace(0.0, 3.0, 4), 1e-11);
    for (const auto& p : psi) {
      CHECK(std::abs(p.x - 1.0) < 1e-13);
      CHECK(std::abs(p.y) < 1e-13);
    }
  }
  SECTION("gauge identity Psi = N0 Theta for off-diagonal q = 0.5 at z = i") {
    const auto spec = families::constQ();
    const BuiltModel m = build_hamiltonian(spec);
    const auto grid = linspace(0.0, 2.0, 9);
    const Complex z(0.0, 1.0);
    const auto psi = evolve_dirac(spec, z, grid, 1e-11);
    const auto states = evolve_canonical(m.H, z, grid, 1e-11);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Mat2d n0 = m.N0(grid[i]);
      const Vec2c theta{states[i].thetaPlus(), states[i].thetaMinus()};
      const Vec2c pred = toComplex(n0) * theta;
      CHECK(std::abs(psi[i].x - pred.x) < 1e-8);
      CHECK(std::abs(psi[i].y - pred.y) < 1e-8);
    }
  }
}

TEST_CASE("batch evolution") {
  const BuiltModel m = build_hamiltonian(families::bump());
  const auto grid = linspace(0.0, 3.0, 7);
  SECTION("single-point grids equal evolve_canonical") {
    const Complex z(0.9, 0.2);
    const auto rows = batch_evolve(m.H, std::vector<Complex>{z}, grid, 1e-11);
    REQUIRE(rows.size() == 1);
    REQUIRE_FALSE(rows[0].error.has_value());
    const auto direct = evolve_canonical(m.H, z, grid, 1e-11);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(maxAbs(rows[0].states[i].M - direct[i].M) == 0.0);
  }
  SECTION("conjugate pair produces conjugate rows") {
    const auto rows = batch_evolve(
        m.H, std::vector<Complex>{Complex(0.0, 1.0), Complex(0.0, -1.0)}, grid, 1e-11);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(std::abs(rows[0].states[i].M.a11 - std::conj(rows[1].states[i].M.a11)) <
            1e-10);
  }
  SECTION("64-node real sweep keeps det within 1e-10") {
    std::vector<Complex> zs;
    for (int k = 0; k < 64; ++k) zs.emplace_back(-5.0 + 10.0 * k / 63.0, 0.0);
    const auto rows = batch_evolve(Hamiltonian::free(), zs, grid, 1e-11);
    for (const auto& row : rows)
      for (const auto& st : row.states) CHECK(std::abs(st.det() - 1.0) < 1e-10);
  }
}

TEST_CASE("integration failure reports the last good time") {
  // h1 blows up near t = 1; the step controller has to give up before it.
  Hamiltonian H;
  H.sample = [](double t) {
    const double d = std::max(1e-300, 1.0 - t);
    return Mat2d{1.0 / (d * d * d), 0.0, 0.0, 1.0};
  };
  H.det_one = false;
  const auto grid = linspace(0.0, 1.0, 3);
  try {
    evolve_canonical(H, Complex(0.0, 1.0), grid, 1e-10);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.last_good_t <= 1.0);
    CHECK(e.last_good_t > 0.5);
  }
  // batch keeps the reachable prefix
  const auto rows = batch_evolve(H, std::vector<Complex>{Complex(0.0, 1.0)}, grid, 1e-10);
  REQUIRE(rows[0].error.has_value());
  CHECK(rows[0].states.size() >= 1);
}
