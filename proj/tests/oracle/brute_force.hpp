#pragma once

// Reference implementations for tests on tiny Hilbert spaces. They avoid
// every shortcut of the main engine: no log domain, no sector blocks, no
// spectral propagators, no parallelism, no merging.

#include <utility>
#include <vector>

#include "ggfr/betas.hpp"
#include "ggfr/gge.hpp"
#include "ggfr/tpm.hpp"

namespace ggfr::oracle {

inline constexpr Index kMaxDim = 64;

/// Eigenpairs of H + c Q_1 + c^2 Q_2 ... with an irrational c; labels read
/// back as expectation values.
struct Basis {
  std::vector<std::string> charge_ids;
  RVector energies;
  RMatrix charges;  // dim x K
  CMatrix vectors;
};

Basis joint_basis(const HermitianOperator& h, const std::vector<Charge>& charges);

/// exp(-i H d) products via the Pade matrix exponential.
CMatrix protocol_unitary(const tpm::QuenchProtocol& prot);

/// P(f, i) = p_i |<f|U|i>|^2 by direct summation.
tpm::JointOutcomeDistribution brute_force_tpm(const Basis& initial, const BetaVector& betas, const CMatrix& u,
                                              const Basis& final_basis);

/// Plain sum of exp(-beta E - sum beta_k q_k).
double partition_sum(const Basis& basis, const BetaVector& betas);

/// lhs = sum P(f, i) exp(-(A'_f - A_i)), rhs = Z' / Z.
std::pair<double, double> brute_force_qje(const tpm::JointOutcomeDistribution& joint, const BetaVector& betas,
                                          const BetaVector& betas_prime, double z, double z_prime);

}  // namespace ggfr::oracle
