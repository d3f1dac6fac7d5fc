#pragma once

// Dicke / Tavis-Cummings model of N two-level ions coupled to the COM
// phonon mode, in the truncated product basis |J, Jz, n>.
//
// Energies are in units of epsilon (hbar = 1), times in hbar/epsilon.

#include <string>
#include <vector>

#include "ggfr/betas.hpp"
#include "ggfr/qlinalg.hpp"

namespace ggfr::dicke {

struct DickeParams {
  int n_ions{1};
  double omega_com{3.0};  // phonon frequency
  double omega_at{10.0};  // internal splitting
  double g{0.0};          // coupling, (Omega_rsb + Omega_bsb) / 2
  double alpha{0.0};      // blue-sideband fraction, 0 = Tavis-Cummings
  int n_max{1};           // phonon cutoff

  double spin() const { return 0.5 * n_ions; }
  /// Throws InvalidParameter naming the violated condition.
  void validate() const;

  friend bool operator==(const DickeParams&, const DickeParams&) = default;
};

/// Product states ordered lexicographically in (jz, n). A state is stored as
/// m = J + jz in [0, N] and n in [0, n_max].
class DickeBasis {
 public:
  struct State {
    int m;  // spin excitations, J + jz
    int n;  // phonons
  };

  DickeBasis(int n_ions, int n_max);
  explicit DickeBasis(const DickeParams& p) : DickeBasis(p.n_ions, p.n_max) {}

  int n_ions() const { return n_ions_; }
  int n_max() const { return n_max_; }
  double spin() const { return 0.5 * n_ions_; }
  Index size() const { return static_cast<Index>(n_ions_ + 1) * (n_max_ + 1); }

  Index index_of(int m, int n) const { return static_cast<Index>(m) * (n_max_ + 1) + n; }
  State state(Index i) const {
    return {static_cast<int>(i / (n_max_ + 1)), static_cast<int>(i % (n_max_ + 1))};
  }
  double jz(Index i) const { return state(i).m - spin(); }

  /// Phonon number of every basis state.
  Eigen::VectorXi phonon_numbers() const;

  friend bool operator==(const DickeBasis& a, const DickeBasis& b) {
    return a.n_ions_ == b.n_ions_ && a.n_max_ == b.n_max_;
  }

 private:
  int n_ions_;
  int n_max_;
};

HermitianOperator build_hamiltonian(const DickeParams& p);

/// Q = J + Jz + b^dag b, conserved at alpha = 0.
HermitianOperator build_charge_q(const DickeBasis& basis);

/// Q' = J + Jz - b^dag b, conserved at alpha = 1.
HermitianOperator build_charge_qprime(const DickeBasis& basis);

/// (-1)^(J + Jz + n). Conserved at every alpha; diagnostic only.
HermitianOperator build_parity(const DickeBasis& basis);

/// sqrt(omega_com * omega_at) / 2
double critical_coupling(const DickeParams& p);

inline const std::string kChargeQ = "Q";
inline const std::string kChargeQPrime = "Qprime";
inline const std::string kChargeParity = "parity";

/// Builds a diagonal charge by id (kChargeQ, kChargeQPrime, kChargeParity).
HermitianOperator build_charge(const std::string& id, const DickeBasis& basis);

/// d q_k / d n for the ladder convergence guard; 0 for parity.
double charge_phonon_slope(const std::string& id);

/// beta * omega_com + sum_k beta_k dq_k/dn: the decay rate per phonon of
/// GGE weights on the untruncated ladder. Must be positive.
double ladder_coefficient(const BetaVector& betas, double omega_com);

}  // namespace ggfr::dicke
