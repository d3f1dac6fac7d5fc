#include <doctest.h>

#include <cmath>
#include <map>

#include "brute_force.hpp"
#include "instances.hpp"
#include "ggfr/errors.hpp"
#include "ggfr/qfr.hpp"
#include "ggfr/tpm.hpp"

using namespace ggfr;
using namespace ggfr::tpm;

namespace {

dicke::DickeParams params(int n, int n_max, double g, double alpha) { return {n, 3.0, 10.0, g, alpha, n_max}; }

struct Setup {
  std::shared_ptr<const JointEigenbasis> ini, fin;
  GgeEnsemble ens;
};

Setup fig1c_setup(int n, int n_max, const BetaVector& b) {
  const dicke::DickeBasis basis(n, n_max);
  auto ini = std::make_shared<const JointEigenbasis>(joint_diagonalize(
      dicke::build_hamiltonian(params(n, n_max, 2, 0)), testing::endpoint_charges(0.0, basis)));
  auto fin = std::make_shared<const JointEigenbasis>(joint_diagonalize(
      dicke::build_hamiltonian(params(n, n_max, 1, 0)), testing::endpoint_charges(0.0, basis)));
  return {ini, fin, build_gge(b, ini)};
}

QuenchProtocol fig1c(int n, int n_max, double t) { return {{{params(n, n_max, 3, 0.5), t}}}; }

}  // namespace

TEST_SUITE("tpm") {
  TEST_CASE("zero-duration protocol is the identity") {
    const QuenchProtocol prot{{{params(1, 3, 2, 0.5), 0.0}}};
    CHECK(max_abs(protocol_unitary(prot).matrix() - CMatrix::Identity(8, 8)) == 0.0);
  }

  TEST_CASE("backward protocol inverts the forward one") {
    QuenchProtocol prot{{{params(2, 4, 2, 0.3), 0.7}, {params(2, 4, 3, 0.9), 1.3}, {params(2, 4, 0.5, 0.0), 0.2}}};
    const auto fw = protocol_unitary(prot);
    const auto bw = protocol_unitary(prot.reversed());
    CHECK(max_abs((bw * fw).matrix() - CMatrix::Identity(fw.dim(), fw.dim())) < 1e-9);
    CHECK(prot.hash() != prot.reversed().hash());
    CHECK(prot.reversed().reversed().hash() == prot.hash());
  }

  TEST_CASE("protocol validation") {
    CHECK_THROWS_AS(QuenchProtocol{}.validate(), InvalidParameter);
    CHECK_THROWS_AS((QuenchProtocol{{{params(1, 3, 2, 0), -1.0}}}.validate()), InvalidParameter);
    CHECK_THROWS_AS((QuenchProtocol{{{params(1, 3, 2, 0), 1.0}, {params(1, 4, 2, 0), 1.0}}}.validate()),
                    DimensionMismatch);
  }

  TEST_CASE("identity protocol concentrates records on the diagonal") {
    const BetaVector b{0.1, {{"Q", 0.3}}};
    const auto s = fig1c_setup(1, 6, b);
    const auto jd = tpm_exact(s.ens, fig1c(1, 6, 0.0), *s.ini);
    for (const auto& r : jd.records()) {
      if (r.prob < 1e-20) continue;
      CHECK(std::abs(jd.final_labels().energies[r.final] - jd.initial().energies[r.initial]) < 1e-10);
      CHECK(jd.final_labels().charge_values(r.final, 0) == jd.initial().charge_values(r.initial, 0));
    }
    const auto gen = generalised_work_pdf(jd, b, b);
    REQUIRE(gen.atoms.size() == 1);
    CHECK(std::abs(gen.atoms[0].value) < 1e-12);
    CHECK(gen.atoms[0].prob == doctest::Approx(1.0));
    const auto w = standard_work_pdf(jd);
    REQUIRE(w.atoms.size() == 1);
    CHECK(std::abs(w.atoms[0].value) < 1e-12);
  }

  TEST_CASE("zero betas give a single zero-work atom") {
    const BetaVector zero{0.0, {{"Q", 0.0}}};
    const auto s = fig1c_setup(1, 5, zero);
    const auto jd = tpm_exact(s.ens, fig1c(1, 5, 2.0), *s.fin);
    const auto gen = generalised_work_pdf(jd, zero, zero);
    REQUIRE(gen.atoms.size() == 1);
    CHECK(gen.atoms[0].value == 0.0);
    CHECK(gen.atoms[0].prob == doctest::Approx(1.0));
  }

  TEST_CASE("transition matrices are doubly stochastic") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto in = testing::random_instance(seed, 3, 2, 12);
      const auto bi = joint_diagonalize(dicke::build_hamiltonian(in.ini), in.charges_ini());
      const auto bf = joint_diagonalize(dicke::build_hamiltonian(in.fin), in.charges_fin());
      const auto pi = transition_matrix(bi, protocol_unitary(in.protocol), bf);
      CHECK(stochasticity_defect(pi) < 1e-10);
      CHECK(pi.minCoeff() >= 0.0);
    }
  }

  TEST_CASE("sweep engine matches the direct protocol") {
    const BetaVector b{0.1, {{"Q", 0.3}}};
    const auto s = fig1c_setup(2, 10, b);
    const auto spec = eigh(dicke::build_hamiltonian(params(2, 10, 3, 0.5)));
    const auto id = UnitaryOperator::identity(s.ini->dim());
    const StageSweep sweep(*s.ini, id, spec, id, *s.fin);
    for (double t : {0.0, 0.3, 6.43, 150.0}) {
      const RMatrix direct = transition_matrix(*s.ini, protocol_unitary(fig1c(2, 10, t)), *s.fin);
      CHECK((sweep.transitions(t) - direct).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("marginal work with the only charge excluded is beta-weighted standard work") {
    const BetaVector b{0.2, {{"Q", 0.3}}};
    const auto s = fig1c_setup(1, 6, b);
    const auto jd = tpm_exact(s.ens, fig1c(1, 6, 1.1), *s.fin);
    const auto m = marginal_work_pdf(jd, "Q", b, b);
    const auto w = standard_work_pdf(jd).scaled(0.2);
    REQUIRE(m.atoms.size() == w.atoms.size());
    for (std::size_t k = 0; k < m.atoms.size(); ++k) {
      CHECK(std::abs(m.atoms[k].value - w.atoms[k].value) < 1e-10);
      CHECK(std::abs(m.atoms[k].prob - w.atoms[k].prob) < 1e-14);
    }
    CHECK_THROWS_AS(marginal_work_pdf(jd, "Qprime", b, b), UnknownCharge);
  }

  TEST_CASE("merging") {
    const auto d = DiscreteDistribution::from_points({{1.0, 0.25}, {0.0, 0.5}, {1.0 + 5e-10, 0.25}, {2.0, 0.0}}, 1e-9);
    REQUIRE(d.atoms.size() == 2);
    CHECK(d.atoms[0].value == 0.0);
    CHECK(d.atoms[1].value == doctest::Approx(1.0 + 2.5e-10));
    CHECK(d.atoms[1].prob == 0.5);
    CHECK(d.total() == 1.0);
  }

  TEST_CASE("Jarzynski value is stable under the merge tolerance") {
    const BetaVector b{0.1, {{"Q", 0.3}}};
    const auto s = fig1c_setup(2, 20, b);
    const auto jd = tpm_exact(s.ens, fig1c(2, 20, 6.43), *s.fin);
    const double ref = qfr::check_qje(generalised_work_pdf(jd, b, b, 1e-12), 0.0).lhs;
    for (double tol : {1e-10, 1e-9, 1e-8, 1e-6})
      CHECK(std::abs(qfr::check_qje(generalised_work_pdf(jd, b, b, tol), 0.0).lhs / ref - 1.0) < 1e-12);
  }

  TEST_CASE("sampling") {
    const BetaVector b{0.2, {{"Q", 0.1}}};
    const auto s = fig1c_setup(1, 3, b);
    const auto prot = fig1c(1, 3, 0.9);
    const auto exact = tpm_exact(s.ens, prot, *s.fin);

    const auto one = tpm_sample(s.ens, prot, *s.fin, 1, 7);
    const auto recs = one.records();
    REQUIRE(recs.size() == 1);
    CHECK(exact.probabilities()(recs[0].final, recs[0].initial) > 0.0);

    const auto a = tpm_sample(s.ens, prot, *s.fin, 5000, 11);
    const auto c = tpm_sample(s.ens, prot, *s.fin, 5000, 11);
    CHECK(a.probabilities() == c.probabilities());
    CHECK(a.probabilities() != tpm_sample(s.ens, prot, *s.fin, 5000, 12).probabilities());
    CHECK_THROWS_AS(tpm_sample(s.ens, prot, *s.fin, 0, 1), InvalidParameter);
  }

  TEST_CASE("a million shots reproduce the Jarzynski average") {
    const BetaVector b{0.2, {{"Q", 0.1}}};
    const auto s = fig1c_setup(1, 3, b);
    const auto prot = fig1c(1, 3, 0.9);
    const auto exact = qfr::check_qje(generalised_work_pdf(tpm_exact(s.ens, prot, *s.fin), b, b), 0.0).lhs;
    const auto pdf = generalised_work_pdf(tpm_sample(s.ens, prot, *s.fin, 1000000, 3), b, b);
    double m1 = 0.0, m2 = 0.0;
    for (const auto& a : pdf.atoms) {
      m1 += a.prob * std::exp(-a.value);
      m2 += a.prob * std::exp(-2 * a.value);
    }
    const double sigma = std::sqrt((m2 - m1 * m1) / 1e6);
    CHECK(std::abs(m1 - exact) < 3 * sigma);
  }

  TEST_CASE("engine agrees with the brute-force oracle") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
      auto in = testing::random_instance(seed, 1, 3, 3);
      const auto bi = std::make_shared<const JointEigenbasis>(
          joint_diagonalize(dicke::build_hamiltonian(in.ini), in.charges_ini()));
      const auto bf = joint_diagonalize(dicke::build_hamiltonian(in.fin), in.charges_fin());
      const auto jd = tpm_exact(build_gge(in.beta, bi), in.protocol, bf);
      const auto ob = oracle::brute_force_tpm(
          oracle::joint_basis(dicke::build_hamiltonian(in.ini), in.charges_ini()), in.beta,
          oracle::protocol_unitary(in.protocol),
          oracle::joint_basis(dicke::build_hamiltonian(in.fin), in.charges_fin()));
      const auto e = testing::label_atoms(jd);
      const auto o = testing::label_atoms(ob);
      REQUIRE(e.size() == o.size());
      for (std::size_t k = 0; k < e.size(); ++k) {
        for (std::size_t c = 0; c < e[k].first.size(); ++c) CHECK(std::abs(e[k].first[c] - o[k].first[c]) < 1e-8);
        CHECK(std::abs(e[k].second - o[k].second) < 1e-10);
      }
    }
  }

  TEST_CASE("log grid") {
    const auto g = log_grid(1e-3, 1e2, 11);
    CHECK(g.size() == 56);
    CHECK(g.front() == doctest::Approx(1e-3));
    CHECK(g.back() == doctest::Approx(1e2));
    CHECK(g[11] == doctest::Approx(1e-2));
  }
}
