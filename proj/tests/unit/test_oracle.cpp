#include <doctest.h>

#include <cmath>

#include "brute_force.hpp"
#include "instances.hpp"
#include "ggfr/tpm.hpp"

using namespace ggfr;

TEST_SUITE("oracle") {
  TEST_CASE("identity protocol keeps outcomes on the diagonal") {
    const dicke::DickeParams p{1, 3.0, 10.0, 1.5, 0.0, 3};
    const auto charges = testing::endpoint_charges(0.0, dicke::DickeBasis(p));
    const auto b = oracle::joint_basis(dicke::build_hamiltonian(p), charges);
    const CMatrix id = CMatrix::Identity(8, 8);
    const auto jd = oracle::brute_force_tpm(b, {0.2, {{"Q", 0.1}}}, id, b);
    for (Index i = 0; i < 8; ++i)
      for (Index f = 0; f < 8; ++f)
        if (f != i) CHECK(jd.probabilities()(f, i) < 1e-25);
  }

  TEST_CASE("zero betas give uniform initial weights") {
    const dicke::DickeParams p{1, 3.0, 10.0, 1.5, 0.0, 3};
    const auto charges = testing::endpoint_charges(0.0, dicke::DickeBasis(p));
    const auto b = oracle::joint_basis(dicke::build_hamiltonian(p), charges);
    const auto jd = oracle::brute_force_tpm(b, {0.0, {{"Q", 0.0}}}, CMatrix::Identity(8, 8), b);
    const RVector col = jd.probabilities().colwise().sum();
    CHECK((col.array() - 1.0 / 8).abs().maxCoeff() < 1e-15);
  }

  TEST_CASE("Jarzynski identity term by term, any final betas, and a corrupted control") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto in = testing::random_instance(seed, 2, 1, 6);
      const auto bi = oracle::joint_basis(dicke::build_hamiltonian(in.ini), in.charges_ini());
      const auto bf = oracle::joint_basis(dicke::build_hamiltonian(in.fin), in.charges_fin());
      const CMatrix u = oracle::protocol_unitary(in.protocol);
      const auto jd = oracle::brute_force_tpm(bi, in.beta, u, bf);
      const double z = oracle::partition_sum(bi, in.beta);
      for (const auto& bp : in.beta_primes) {
        const auto [lhs, rhs] = oracle::brute_force_qje(jd, in.beta, bp, z, oracle::partition_sum(bf, bp));
        CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, rhs));
      }
      // Move half of the largest entry to the final state with the most different weight.
      RMatrix bad = jd.probabilities();
      Index f0 = 0, i0 = 0;
      bad.maxCoeff(&f0, &i0);
      const RVector a_fin = jd.final_labels().weights(in.beta_primes.front());
      Index f1 = 0;
      (a_fin.array() - a_fin[f0]).abs().maxCoeff(&f1);
      bad(f1, i0) += 0.5 * bad(f0, i0);
      bad(f0, i0) *= 0.5;
      const tpm::JointOutcomeDistribution corrupt(jd.initial_ptr(), jd.final_ptr(), bad, jd.metadata());
      const auto bp = in.beta_primes.front();
      const auto [lhs, rhs] = oracle::brute_force_qje(corrupt, in.beta, bp, z, oracle::partition_sum(bf, bp));
      CHECK(std::abs(lhs - rhs) > 1e-9 * rhs);
    }
  }

  TEST_CASE("dimension guard") {
    const dicke::DickeParams p{1, 3.0, 10.0, 1.0, 0.0, 40};
    CHECK_THROWS(oracle::joint_basis(dicke::build_hamiltonian(p), {}));
  }
}
