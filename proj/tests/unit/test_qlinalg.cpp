#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ggfr/dicke.hpp"
#include "ggfr/errors.hpp"
#include "ggfr/qlinalg.hpp"

using namespace ggfr;

namespace {

CMatrix random_hermitian(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  CMatrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = Complex(d(rng), d(rng));
  return 0.5 * (a + a.adjoint());
}

}  // namespace

TEST_SUITE("qlinalg") {
  TEST_CASE("identity and diagonal inputs keep the standard basis") {
    auto s = eigh(HermitianOperator(RMatrix(RMatrix::Identity(2, 2))));
    CHECK(s.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(s.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(max_abs(s.eigenvectors - CMatrix::Identity(2, 2)) < 1e-14);

    RMatrix d = RVector((RVector(4) << -5, -2, 5, 8).finished()).asDiagonal();
    s = eigh(HermitianOperator(d));
    CHECK(max_abs(s.eigenvectors - CMatrix::Identity(4, 4)) < 1e-14);
    for (int i = 0; i < 4; ++i) CHECK(s.eigenvalues[i] == d(i, i));
  }

  TEST_CASE("two-level coupling block") {
    const double g = 2.0;
    RMatrix m(2, 2);
    m << -2, 2 * g, 2 * g, 5;
    const auto s = eigh(HermitianOperator(m));
    CHECK(std::abs(s.eigenvalues[0] - (-3.815072906367325)) < 1e-12);
    CHECK(std::abs(s.eigenvalues[1] - 6.815072906367325) < 1e-12);
    CHECK(std::abs(s.eigenvalues[0] - (1.5 - std::sqrt(49.0 / 4 + 16))) < 1e-12);
  }

  TEST_CASE("random hermitian reconstructs and is orthonormal") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const CMatrix a = random_hermitian(12, seed);
      const auto s = eigh(HermitianOperator(a));
      CHECK(max_abs(s.reconstruct() - a) < 1e-9);
      CHECK(unitarity_defect(s.eigenvectors) < 1e-12);
      for (Index k = 1; k < s.dim(); ++k) CHECK(s.eigenvalues[k - 1] <= s.eigenvalues[k]);
    }
  }

  TEST_CASE("gauge is fixed and deterministic") {
    const CMatrix a = random_hermitian(8, 42);
    const auto s1 = eigh(HermitianOperator(a));
    const auto s2 = eigh(HermitianOperator(a));
    CHECK(max_abs(s1.eigenvectors - s2.eigenvectors) == 0.0);
    for (Index k = 0; k < s1.dim(); ++k) {
      Index r = 0;
      while (std::abs(s1.eigenvectors(r, k)) <= 1e-8) ++r;
      CHECK(s1.eigenvectors(r, k).imag() == 0.0);
      CHECK(s1.eigenvectors(r, k).real() > 0.0);
    }
  }

  TEST_CASE("non-hermitian input is rejected") {
    RMatrix m(2, 2);
    m << 1, 2, 3, 4;
    CHECK_THROWS_AS(HermitianOperator{m}, NotHermitian);
    CHECK_THROWS_AS(HermitianOperator(RMatrix(2, 3)), DimensionMismatch);
  }

  TEST_CASE("propagator") {
    RMatrix d(2, 2);
    d << 1, 0, 0, 2;
    const auto s = eigh(HermitianOperator(d));
    CHECK(max_abs(propagator(s, 0.0).matrix() - CMatrix::Identity(2, 2)) == 0.0);
    const auto u = propagator(s, std::numbers::pi).matrix();
    CHECK(std::abs(u(0, 0) - std::exp(Complex(0, -std::numbers::pi))) < 1e-14);
    CHECK(std::abs(u(1, 1) - std::exp(Complex(0, -2 * std::numbers::pi))) < 1e-14);
    CHECK_THROWS_AS(propagator(s, std::numeric_limits<double>::quiet_NaN()), InvalidParameter);
  }

  TEST_CASE("propagator is unitary and composes") {
    const auto s = eigh(HermitianOperator(random_hermitian(4, 7)));
    const auto u = propagator(s, 0.7);
    CHECK(unitarity_defect(u.matrix()) < 1e-12);
    const CMatrix two = (propagator(s, 0.3) * propagator(s, 0.4)).matrix();
    CHECK(max_abs(two - u.matrix()) < 1e-12);
    CHECK(max_abs((u.adjoint() * u).matrix() - CMatrix::Identity(4, 4)) < 1e-12);
  }

  TEST_CASE("non-unitary matrices are rejected") {
    CHECK_THROWS_AS(UnitaryOperator(CMatrix::Identity(3, 3) * 1.1), NotUnitary);
  }

  TEST_CASE("commutators") {
    const HermitianOperator a(random_hermitian(5, 3));
    CHECK(commutator_norm(a, a) < 1e-14);

    dicke::DickeParams p{1, 3.0, 10.0, 2.0, 0.0, 2};
    const auto q = dicke::build_charge_q(dicke::DickeBasis(p));
    CHECK(relative_commutator_norm(dicke::build_hamiltonian(p), q) < 1e-10);
    p.alpha = 0.5;
    CHECK(commutator_norm(dicke::build_hamiltonian(p), q) > 0.1);
  }
}
