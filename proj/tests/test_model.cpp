#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cansys/model.hpp"
#include "support/families.hpp"

using namespace cansys;

TEST_CASE("zero potential reduces to the identity Hamiltonian") {
  const BuiltModel m = build_hamiltonian(PotentialSpec::makeZero());
  for (double t : {0.0, 0.5, 3.0, 17.0}) {
    const Mat2d H = m.H(t);
    CHECK(H.a11 == 1.0);
    CHECK(H.a22 == 1.0);
    CHECK(H.a12 == 0.0);
    CHECK(maxAbs(m.N0(t) - Mat2d::identity()) == 0.0);
  }
}

TEST_CASE("off-diagonal closed form: q = 0.5 gives H(1) = diag(e^-1, e)") {
  const auto spec = families::constQ();
  const BuiltModel m = build_hamiltonian(spec);
  const Mat2d H = m.H(1.0);
  CHECK(H.a11 == Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(H.a22 == Catch::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(H.a12 == 0.0);
  CHECK(m.H.diagonal);
  CHECK(m.H.det_one);
}

TEST_CASE("diagonal closed form: q = c gives cosh/sinh of 2ct") {
  const double c = 0.3;
  const auto spec = PotentialSpec::makeDiagonal(ScalarLaw::makeConstant(c));
  const BuiltModel m = build_hamiltonian(spec);
  for (double t : {0.25, 1.0, 2.5}) {
    const Mat2d H = m.H(t);
    CHECK(H.a11 == Catch::Approx(std::cosh(2 * c * t)).epsilon(1e-14));
    CHECK(H.a12 == Catch::Approx(std::sinh(2 * c * t)).epsilon(1e-14));
    CHECK(H.a21 == H.a12);
    CHECK(H.a22 == H.a11);
  }
}

TEST_CASE("gauge path solves J N0' + Q N0 = 0 with unit determinant") {
  SECTION("general kind (GBUMP)") {
    const auto spec = families::gbump();
    const BuiltModel m = build_hamiltonian(spec);
    for (double t = 0.0; t <= 3.0; t += 0.05) {
      const Mat2d n = m.N0(t);
      CHECK(std::abs(n.det() - 1.0) < 1e-9);
      const Mat2d H = m.H(t);
      const Mat2d HH = n.transpose() * n;
      CHECK(maxAbs(H - HH) < 1e-12);  // same construction path
      CHECK(std::abs(H.det() - 1.0) < 1e-9);
    }
    CHECK(maxAbs(m.N0(0.0) - Mat2d::identity()) < 1e-12);
  }
  SECTION("closed forms reproduce N0^T N0 for single-law kinds") {
    for (const auto& spec : {families::bump(),
                             PotentialSpec::makeDiagonal(ScalarLaw::makeBump(0.7, 1.0, 1.0))}) {
      const BuiltModel m = build_hamiltonian(spec);
      for (double t = 0.0; t <= 2.5; t += 0.1) {
        const Mat2d n = m.N0(t);
        CHECK(maxAbs(n.transpose() * n - m.H(t)) < 1e-8);
        CHECK(std::abs(n.det() - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("general-kind gauge integration matches the off-diagonal closed form") {
  // Same bump fed through the generic integrator and through the closed form.
  const auto off = families::bump();
  const auto gen = PotentialSpec::makeGeneral(ScalarLaw::makeZero(),
                                              ScalarLaw::makeBump(1.0, 1.0, 1.0));
  const BuiltModel a = build_hamiltonian(off);
  const BuiltModel b = build_hamiltonian(gen);
  for (double t = 0.0; t <= 2.5; t += 0.25)
    CHECK(maxAbs(a.H(t) - b.H(t)) < 1e-8);
}

TEST_CASE("tabulated potentials: exact per-cell propagation, rejected bad input") {
  SECTION("single off-diagonal cell matches the closed form") {
    const auto tab = PotentialSpec::makeTabulated({0.0, 1.0}, {0.0, 0.0}, {0.5, 0.0});
    const BuiltModel m = build_hamiltonian(tab);
    const Mat2d H1 = m.H(1.0);
    CHECK(H1.a11 == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(H1.a22 == Catch::Approx(std::exp(1.0)).epsilon(1e-12));
    // piecewise-constant: the tail is frozen at the last cell edge
    CHECK(m.H.tail.has_value());
    CHECK(maxAbs(m.H(5.0) - H1) < 1e-14);
  }
  SECTION("non-finite samples are rejected") {
    CHECK_THROWS_AS(PotentialSpec::makeTabulated({0.0, 1.0}, {0.0, 0.0},
                                                 {std::nan(""), 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(PotentialSpec::makeTabulated({1.0, 0.5}, {0.0, 0.0}, {0.1, 0.2}),
                    std::invalid_argument);
  }
}

TEST_CASE("clock") {
  SECTION("identity Hamiltonian: xi(t) = t") {
    CHECK(clock(Hamiltonian::free(), 3.0) == 3.0);
  }
  SECTION("from-potential Hamiltonians keep det = 1, so xi(t) = t") {
    const BuiltModel m = build_hamiltonian(families::bump());
    CHECK(clock(m.H, 5.0) == 5.0);
  }
  SECTION("constant diag(4, 4): xi(1) = 4 (hand quadrature of sqrt(16))") {
    const Hamiltonian H = Hamiltonian::constant(Mat2d{4.0, 0.0, 0.0, 4.0});
    CHECK(clock(H, 1.0) == Catch::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("eta grid") {
  SECTION("det-one Hamiltonian: eta_n = n") {
    const auto eta = eta_grid(Hamiltonian::free(), 5);
    REQUIRE(eta.size() == 6);
    for (std::size_t n = 0; n < eta.size(); ++n)
      CHECK(eta[n] == static_cast<double>(n));
  }
  SECTION("diag(4,4): inverted linear clock, eta_1 = 0.25, eta_2 = 0.5") {
    Hamiltonian H = Hamiltonian::constant(Mat2d{4.0, 0.0, 0.0, 4.0});
    H.det_one = false;  // route through the quadrature path
    const auto eta = eta_grid(H, 2);
    REQUIRE(eta.size() == 3);
    CHECK(eta[1] == Catch::Approx(0.25).margin(1e-10));
    CHECK(eta[2] == Catch::Approx(0.5).margin(1e-10));
  }
  SECTION("vanishing determinant saturates the clock") {
    Hamiltonian H;
    H.sample = [](double t) { return Mat2d{std::exp(-2.0 * t), 0.0, 0.0, 0.0}; };
    H.det_one = false;
    CHECK_THROWS_AS(eta_grid(H, 2, 10.0), ClockSaturated);
  }
}

TEST_CASE("clock is nondecreasing on a direct Hamiltonian") {
  Hamiltonian H;
  H.sample = [](double t) {
    const double d = 1.0 + std::sin(t) * 0.5;
    return Mat2d{d, 0.0, 0.0, d};
  };
  H.det_one = false;
  double prev = 0.0;
  for (double t = 0.0; t <= 6.0; t += 0.3) {
    const double xi = clock(H, t);
    CHECK(xi >= prev - 1e-12);
    prev = xi;
  }
}

TEST_CASE("potential JSON schema round trip") {
  SECTION("closed-form kinds") {
    for (const auto& spec :
         {families::bump(), families::constQ(),
          PotentialSpec::makeDiagonal(ScalarLaw::makeExpDecay(1.0, 0.5)),
          PotentialSpec::makeOffDiagonal(ScalarLaw::makeSinSquare(1.0))}) {
      const Json j = spec.toJson();
      const PotentialSpec back = PotentialSpec::fromJson(j);
      CHECK(back.kind == spec.kind);
      for (double t : {0.0, 0.7, 1.9, 6.3})
        CHECK(back.q2(t) == Catch::Approx(spec.q2(t)).margin(1e-15));
    }
  }
  SECTION("tabulated kind keeps its samples") {
    const auto spec =
        PotentialSpec::makeTabulated({0.0, 0.5, 1.0}, {0.1, -0.2, 0.0}, {0.4, 0.5, 0.0});
    const PotentialSpec back = PotentialSpec::fromJson(spec.toJson());
    CHECK(back.q1(0.25) == 0.1);
    CHECK(back.q1(0.75) == -0.2);
    CHECK(back.q2(0.75) == 0.5);
    CHECK(back.q2(2.0) == 0.0);
  }
}

TEST_CASE("sin(t^2) antiderivative matches direct quadrature") {
  const ScalarLaw law = ScalarLaw::makeSinSquare(1.0);
  // brute-force oracle on a very fine grid
  auto oracle = [](double t) {
    return quadGL4([](double s) { return std::sin(s * s); }, 0.0, t,
                   std::max<std::size_t>(2000, static_cast<std::size_t>(4000 * t)));
  };
  for (double t : {0.5, 2.0, 5.5, 7.0, 11.0})
    CHECK(law.antiderivative(t) == Catch::Approx(oracle(t)).margin(5e-7));
}

TEST_CASE("dual Hamiltonian swaps diagonal entries and flips the sign of h") {
  const BuiltModel m = build_hamiltonian(families::gbump());
  const Hamiltonian d = m.H.dual();
  for (double t : {0.3, 1.1, 1.9}) {
    const Mat2d a = m.H(t), b = d(t);
    CHECK(b.a11 == a.a22);
    CHECK(b.a22 == a.a11);
    CHECK(b.a12 == -a.a12);
  }
}
