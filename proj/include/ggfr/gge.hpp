#pragma once

// Generalised Gibbs ensembles rho = exp(-beta H - sum_k beta_k Q_k) / Z over
// a simultaneous eigenbasis of H and its charges.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ggfr/betas.hpp"
#include "ggfr/errors.hpp"
#include "ggfr/qlinalg.hpp"

namespace ggfr {

struct Charge {
  std::string id;
  HermitianOperator op;
};

/// Simultaneous eigenstates of H and a commuting set of charges, sorted by
/// (energy, charge values).
struct JointEigenbasis {
  std::vector<std::string> charge_ids;
  RVector energies;       // dim
  RMatrix charge_values;  // dim x K
  CMatrix vectors;        // column i is state i in the source basis

  Index dim() const { return energies.size(); }
  Index charge_count() const { return charge_values.cols(); }
  /// Column of `charge_values` for `id`; throws UnknownCharge.
  Index charge_column(const std::string& id) const;
  /// beta E_i + sum_k beta_k q_{k,i}; `betas` must cover exactly charge_ids.
  RVector weights(const BetaVector& betas) const;
};

/// Verifies that H and all charges commute pairwise (relative tolerance
/// tol::kChargeAdmission), then diagonalises H inside every joint charge
/// sector. Diagonal charges split sectors by index; other charges are
/// diagonalised within the current sector.
JointEigenbasis joint_diagonalize(const HermitianOperator& h, const std::vector<Charge>& charges);

/// Phonon occupation of every source-basis state, for the truncation guard.
struct PhononLadder {
  Eigen::VectorXi occupation;
  int n_max{0};
};

/// GGE weight carried by source states in the top tol::kTruncationTopFraction
/// of phonon quanta.
double truncation_leakage(const JointEigenbasis& basis, const RVector& probabilities,
                          const PhononLadder& ladder, double top_fraction = 0.05);

class GgeEnsemble {
 public:
  GgeEnsemble(BetaVector betas, std::shared_ptr<const JointEigenbasis> basis);

  const BetaVector& betas() const { return betas_; }
  const JointEigenbasis& basis() const { return *basis_; }
  const std::shared_ptr<const JointEigenbasis>& basis_ptr() const { return basis_; }
  const RVector& probabilities() const { return probabilities_; }
  const RVector& log_probabilities() const { return log_probabilities_; }
  double log_partition() const { return log_z_; }
  /// F = -ln Z
  double free_energy() const { return -log_z_; }

 private:
  BetaVector betas_;
  std::shared_ptr<const JointEigenbasis> basis_;
  RVector probabilities_;
  RVector log_probabilities_;
  double log_z_{0.0};
};

/// Throws TruncationUnconverged when `ladder` is given and the top phonon
/// quanta carry more than tol::kTruncationLeakage.
GgeEnsemble build_gge(const BetaVector& betas, std::shared_ptr<const JointEigenbasis> basis,
                      const std::optional<PhononLadder>& ladder = std::nullopt);

GgeEnsemble build_gge(const BetaVector& betas, const HermitianOperator& h,
                      const std::vector<Charge>& charges,
                      const std::optional<PhononLadder>& ladder = std::nullopt);

/// ln sum_i exp(-(beta E_i + sum_k beta_k q_{k,i}))
double log_partition(const JointEigenbasis& basis, const BetaVector& betas);

/// sum_i p_i o_i for an observable given by its diagonal in the joint basis.
double gge_average(const GgeEnsemble& ens, const RVector& observable_diagonal);

class MaxIterationsExceeded : public Error {
 public:
  MaxIterationsExceeded(BetaVector best, double residual)
      : Error("solver hit its iteration limit (residual " + std::to_string(residual) + ")"),
        best(std::move(best)), residual(residual) {}
  BetaVector best;
  double residual;
};

struct SolverOptions {
  int max_iterations{200};
  double relative_tolerance{1e-8};
};

/// Damped Newton on the convex function ln Z(b) + b . targets, whose gradient
/// is targets - <(H, Q)> and Hessian the covariance of (H, Q).
/// `targets` = (E_mean, M_1, ..., M_K) in the order of `charges`.
BetaVector solve_betas_from_averages(const RVector& targets, const HermitianOperator& h,
                                     const std::vector<Charge>& charges,
                                     const BetaVector& initial_guess,
                                     const SolverOptions& options = {});

BetaVector solve_betas_from_averages(const RVector& targets, const JointEigenbasis& basis,
                                     const BetaVector& initial_guess,
                                     const SolverOptions& options = {});

}  // namespace ggfr
