#include <doctest.h>

#include <cmath>

#include "ggfr/dicke.hpp"
#include "ggfr/errors.hpp"
#include "ggfr/gge.hpp"

using namespace ggfr;

namespace {

struct Toy {
  dicke::DickeParams p;
  HermitianOperator h;
  std::vector<Charge> charges;
};

Toy toy(int n_ions, int n_max, double g, double alpha = 0.0) {
  const dicke::DickeParams p{n_ions, 3.0, 10.0, g, alpha, n_max};
  const dicke::DickeBasis b(p);
  return {p, dicke::build_hamiltonian(p), {{dicke::kChargeQ, dicke::build_charge_q(b)}}};
}

}  // namespace

TEST_SUITE("gge") {
  TEST_CASE("infinite temperature is uniform") {
    const auto t = toy(2, 4, 1.3);
    const auto ens = build_gge({0.0, {{"Q", 0.0}}}, t.h, t.charges);
    const double dim = static_cast<double>(t.h.dim());
    CHECK((ens.probabilities().array() - 1.0 / dim).abs().maxCoeff() < 1e-15);
    CHECK(ens.log_partition() == doctest::Approx(std::log(dim)));
  }

  TEST_CASE("four-state partition function") {
    const auto t = toy(1, 1, 0.0);
    const auto ens = build_gge({0.1, {{"Q", 0.3}}}, t.h, t.charges);
    CHECK(std::abs(std::exp(ens.log_partition()) - 3.2494846167949158) < 1e-13);
    CHECK(ens.free_energy() == -ens.log_partition());
  }

  TEST_CASE("averages") {
    const auto t = toy(1, 1, 0.0);
    const auto ens0 = build_gge({0.0, {{"Q", 0.0}}}, t.h, t.charges);
    CHECK(gge_average(ens0, RVector::Constant(4, 2.5)) == doctest::Approx(2.5));
    CHECK(gge_average(ens0, ens0.basis().charge_values.col(0)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(gge_average(ens0, RVector::Zero(3)), DimensionMismatch);

    const auto c = toy(1, 3, 2.0);
    const auto cold = build_gge({50.0, {{"Q", 0.0}}}, c.h, c.charges);
    const double e0 = cold.basis().energies.minCoeff();
    CHECK(std::abs(gge_average(cold, cold.basis().energies) - e0) < 1e-10);
  }

  TEST_CASE("extreme betas stay finite") {
    const auto t = toy(2, 6, 1.0);
    for (double beta : {1e3, -1e3}) {
      const auto ens = build_gge({beta, {{"Q", 0.0}}}, t.h, t.charges);
      CHECK(std::isfinite(ens.log_partition()));
      CHECK(std::abs(ens.probabilities().sum() - 1.0) < 1e-12);
    }
  }

  TEST_CASE("joint eigenbasis") {
    const auto t = toy(2, 5, 1.7);
    const auto jb = joint_diagonalize(t.h, t.charges);
    CHECK(unitarity_defect(jb.vectors) < 1e-12);
    const CMatrix hv = t.h.matrix() * jb.vectors;
    const CMatrix qv = t.charges[0].op.matrix() * jb.vectors;
    CHECK(max_abs(hv - jb.vectors * jb.energies.asDiagonal()) < 1e-10);
    CHECK(max_abs(qv - jb.vectors * jb.charge_values.col(0).asDiagonal()) < 1e-10);
    for (Index i = 1; i < jb.dim(); ++i) CHECK(jb.energies[i - 1] <= jb.energies[i]);
    CHECK_THROWS_AS(jb.charge_column("Qprime"), UnknownCharge);
    CHECK_THROWS_AS(jb.weights({0.1, {}}), DimensionMismatch);
  }

  TEST_CASE("non-commuting charges are refused") {
    const auto t = toy(1, 3, 2.0, 0.5);
    CHECK_THROWS_AS(joint_diagonalize(t.h, t.charges), NonCommutingCharge);
  }

  TEST_CASE("truncation guard") {
    const auto t = toy(1, 5, 1.0);
    const PhononLadder ladder{dicke::DickeBasis(t.p).phonon_numbers(), t.p.n_max};
    try {
      build_gge({0.1, {{"Q", 0.0}}}, t.h, t.charges, ladder);
      FAIL("expected TruncationUnconverged");
    } catch (const TruncationUnconverged& e) {
      CHECK(e.leakage > 1e-10);
      CHECK(e.suggested_n_max > 5);
    }
    const auto ok = toy(1, 60, 1.0);
    const PhononLadder ok_ladder{dicke::DickeBasis(ok.p).phonon_numbers(), ok.p.n_max};
    CHECK_NOTHROW(build_gge({0.1, {{"Q", 0.3}}}, ok.h, ok.charges, ok_ladder));
  }

  TEST_CASE("solver round trip") {
    const auto t = toy(2, 8, 1.4);
    const auto basis = std::make_shared<const JointEigenbasis>(joint_diagonalize(t.h, t.charges));
    const BetaVector truth{0.2, {{"Q", 0.35}}};
    const auto ens = build_gge(truth, basis);
    RVector targets(2);
    targets << gge_average(ens, basis->energies), gge_average(ens, basis->charge_values.col(0));
    const auto got = solve_betas_from_averages(targets, *basis, {0.0, {{"Q", 0.0}}});
    CHECK(std::abs(got.beta - truth.beta) < 1e-8);
    CHECK(std::abs(got.charge_beta("Q") - 0.35) < 1e-8);
  }

  TEST_CASE("trace targets give zero betas") {
    const auto t = toy(1, 4, 1.0);
    RVector targets(2);
    targets << t.h.matrix().trace().real() / t.h.dim(), t.charges[0].op.matrix().trace().real() / t.h.dim();
    const auto got = solve_betas_from_averages(targets, t.h, t.charges, {0.3, {{"Q", -0.2}}});
    CHECK(std::abs(got.beta) < 1e-8);
    CHECK(std::abs(got.charge_beta("Q")) < 1e-8);
  }

  TEST_CASE("ground-state target is outside the spectrum") {
    const auto t = toy(1, 4, 1.0);
    const auto basis = joint_diagonalize(t.h, t.charges);
    Index g = 0;
    basis.energies.minCoeff(&g);
    RVector targets(2);
    targets << basis.energies[g], basis.charge_values(g, 0);
    CHECK_THROWS_AS(solve_betas_from_averages(targets, basis, {0.1, {{"Q", 0.0}}}), TargetOutsideSpectrum);
  }
}
