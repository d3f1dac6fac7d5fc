#pragma once

// Two-projective-measurement (TPM) protocol: sudden-quench schedules, exact
// transition probabilities, outcome distributions and work PDFs.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ggfr/dicke.hpp"
#include "ggfr/gge.hpp"

namespace ggfr::tpm {

enum class Direction { Forward, Backward };

struct Stage {
  dicke::DickeParams params;
  double duration{0.0};  // hbar / epsilon
};

/// Piecewise-constant Hamiltonian schedule. A backward protocol holds the
/// forward stages in reverse order and evolves with exp(+i H d), so its
/// unitary is the inverse of the forward one.
struct QuenchProtocol {
  std::vector<Stage> stages;
  Direction direction{Direction::Forward};

  void validate() const;
  QuenchProtocol reversed() const;
  std::uint64_t hash() const;
};

/// Thread-safe memo of stage eigendecompositions keyed by DickeParams.
class SpectrumCache {
 public:
  std::shared_ptr<const SpectralData> get(const dicke::DickeParams& p);

 private:
  std::mutex mutex_;
  std::vector<std::pair<dicke::DickeParams, std::shared_ptr<const SpectralData>>> entries_;
};

UnitaryOperator protocol_unitary(const QuenchProtocol& prot, SpectrumCache* cache = nullptr);

/// Energies and charge values of measurement outcomes.
struct OutcomeLabels {
  std::vector<std::string> charge_ids;
  RVector energies;
  RMatrix charge_values;  // dim x K

  Index dim() const { return energies.size(); }
  Index charge_column(const std::string& id) const;
  /// beta E + sum_k beta_k q_k over the charges named in `betas`, which must be
  /// a subset of charge_ids; `excluded` is skipped when present.
  RVector weights(const BetaVector& betas, const std::string& excluded = {}) const;

  static std::shared_ptr<const OutcomeLabels> of(const JointEigenbasis& basis);
};

/// |<f|U|i>|^2 with rows f over `final_basis` and columns i over `initial`.
RMatrix transition_matrix(const JointEigenbasis& initial, const UnitaryOperator& u,
                          const JointEigenbasis& final_basis);

/// Transition matrices of one protocol family in which a single stage of
/// variable length t sits between fixed unitaries:
///   U(t) = post * exp(-i H_s t) * pre.
/// The overlaps around the swept stage are precomputed, so each t costs one
/// product (two real GEMMs when all factors are real).
class StageSweep {
 public:
  StageSweep(const JointEigenbasis& initial, const UnitaryOperator& pre, const SpectralData& swept,
             const UnitaryOperator& post, const JointEigenbasis& final_basis);

  Index dim() const { return eigenvalues_.size(); }
  /// Rows f over the final basis, columns i over the initial basis.
  RMatrix transitions(double t) const;

 private:
  RVector eigenvalues_;
  bool real_{false};
  RMatrix left_re_, right_re_;
  CMatrix left_, right_;
};

/// max over rows and columns of |sum - 1|.
double stochasticity_defect(const RMatrix& pi);

struct DistributionMetadata {
  std::uint64_t protocol_hash{0};
  Direction direction{Direction::Forward};
  BetaVector initial_betas;
  std::uint64_t shots{0};  // 0 for exact distributions
  std::uint64_t seed{0};
};

/// Joint distribution of (E_ini, q_ini, E_fin, q_fin) outcomes, stored as a
/// dense matrix of probabilities P(f, i) over the two label tables.
class JointOutcomeDistribution {
 public:
  struct Record {
    Index initial;
    Index final;
    double prob;
  };

  JointOutcomeDistribution(std::shared_ptr<const OutcomeLabels> initial,
                           std::shared_ptr<const OutcomeLabels> final_labels, RMatrix prob,
                           DistributionMetadata meta);

  const OutcomeLabels& initial() const { return *initial_; }
  const OutcomeLabels& final_labels() const { return *final_; }
  const std::shared_ptr<const OutcomeLabels>& initial_ptr() const { return initial_; }
  const std::shared_ptr<const OutcomeLabels>& final_ptr() const { return final_; }
  const RMatrix& probabilities() const { return prob_; }
  const DistributionMetadata& metadata() const { return meta_; }

  /// Entries with nonzero probability, column-major (initial-state major).
  std::vector<Record> records() const;
  double total() const { return prob_.sum(); }

 private:
  std::shared_ptr<const OutcomeLabels> initial_;
  std::shared_ptr<const OutcomeLabels> final_;
  RMatrix prob_;
  DistributionMetadata meta_;
};

/// Records with p_i |<f|U|i>|^2. Throws Error if the transition matrix is not
/// doubly stochastic to tol::kStochasticity.
JointOutcomeDistribution tpm_exact(const GgeEnsemble& ens, const QuenchProtocol& prot,
                                   const JointEigenbasis& final_basis, SpectrumCache* cache = nullptr);

JointOutcomeDistribution tpm_exact(const GgeEnsemble& ens, const QuenchProtocol& prot,
                                   const HermitianOperator& final_h, const std::vector<Charge>& final_charges,
                                   SpectrumCache* cache = nullptr);

/// Same as tpm_exact with the transition matrix supplied by the caller.
JointOutcomeDistribution tpm_from_transitions(const GgeEnsemble& ens, const RMatrix& pi,
                                              std::shared_ptr<const OutcomeLabels> final_labels,
                                              DistributionMetadata meta);

/// Finite-shot emulation: initial state drawn from the GGE, final state from
/// the transition column. Reproducible per (seed, protocol hash, shot).
JointOutcomeDistribution tpm_sample(const GgeEnsemble& ens, const QuenchProtocol& prot,
                                    const JointEigenbasis& final_basis, std::uint64_t n_shots,
                                    std::uint64_t seed, SpectrumCache* cache = nullptr);

JointOutcomeDistribution sample_from_transitions(const GgeEnsemble& ens, const RMatrix& pi,
                                                 std::shared_ptr<const OutcomeLabels> final_labels,
                                                 std::uint64_t n_shots, std::uint64_t seed,
                                                 DistributionMetadata meta);

/// Weighted atoms of a discrete distribution, values strictly increasing.
struct DiscreteDistribution {
  struct Atom {
    double value;
    double prob;
  };
  std::vector<Atom> atoms;
  double merge_tolerance{0.0};

  /// Sorts, then merges chains of values closer than `tolerance` into their
  /// probability-weighted mean. Zero-probability points are dropped.
  static DiscreteDistribution from_points(std::vector<Atom> points, double tolerance);

  double total() const;
  /// Atoms scaled by `factor` (e.g. standard work w -> beta w).
  DiscreteDistribution scaled(double factor) const;
};

/// Generalised work W = A'_fin(beta_fin) - A_ini(beta_ini).
DiscreteDistribution generalised_work_pdf(const JointOutcomeDistribution& jd, const BetaVector& beta_ini,
                                          const BetaVector& beta_fin,
                                          double merge_tolerance = 1e-9);

/// Standard work w = E_fin - E_ini (units of epsilon).
DiscreteDistribution standard_work_pdf(const JointOutcomeDistribution& jd, double merge_tolerance = 1e-9);

/// Generalised work with the terms of `excluded_charge` dropped on both ends.
DiscreteDistribution marginal_work_pdf(const JointOutcomeDistribution& jd, const std::string& excluded_charge,
                                       const BetaVector& beta_ini, const BetaVector& beta_fin,
                                       double merge_tolerance = 1e-9);

/// Logarithmic grid of `per_decade` points per decade over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int per_decade);

}  // namespace ggfr::tpm
