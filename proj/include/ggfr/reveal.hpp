#pragma once

// Revealing missing charges: every protocol's Jarzynski average must match
// the same equilibrium free-energy difference. Fitting the generalised
// inverse temperatures to N_P protocols and inspecting the leftover residuals
// tells whether a hypothesised charge set is complete.

#include <optional>
#include <string>
#include <vector>

#include "ggfr/tpm.hpp"

namespace ggfr::reveal {

enum class Verdict { Complete, Incomplete, Inconclusive };
const char* to_string(Verdict v);

struct Thresholds {
  double pass_rms{1e-6};
  double fail_rms{1e-3};
};

struct RevealInput {
  std::vector<tpm::JointOutcomeDistribution> datasets;     // forward, one per protocol
  std::vector<tpm::JointOutcomeDistribution> bw_datasets;  // backward, for charge_constancy_test
  std::vector<std::string> hypothesis;                     // charge ids
  std::shared_ptr<const tpm::OutcomeLabels> model_initial;  // spectrum of (H, charges)
  std::shared_ptr<const tpm::OutcomeLabels> model_final;    // spectrum of (H', charges')
  /// Fixed beta' instead of beta' = beta_trial.
  std::optional<BetaVector> beta_prime_override;

  /// Throws InvalidParameter unless N_P >= |hypothesis| + 2 and every
  /// hypothesised charge is recorded on the initial side.
  void validate() const;
};

struct FitOptions {
  int max_iterations{500};
  /// Extra deterministic starts in [-0.5, 0.5] per component; the fit with
  /// the smallest objective wins.
  int restarts{8};
  Thresholds thresholds{};
  /// Bootstrap resamples used when any dataset is sampled (shots > 0).
  int bootstrap_resamples{1000};
  std::uint64_t bootstrap_seed{0x5eed};
};

struct BootstrapSummary {
  int resamples{0};
  RVector beta_lo;       // 2.5th percentile per component
  RVector beta_hi;       // 97.5th percentile
  double null_rms_p95{0.0};
  double null_rms_p999{0.0};
};

struct RevealReport {
  BetaVector fitted_betas;
  RVector residuals;
  double rms_residual{0.0};
  Verdict verdict{Verdict::Inconclusive};
  int iterations{0};
  int function_evaluations{0};
  bool converged{false};
  std::string solver_status;
  Thresholds thresholds_used{};
  std::optional<BootstrapSummary> bootstrap;
  /// charge_constancy_test only: fitted -dF offset.
  std::optional<double> offset;
};

/// r_j = ln <exp(-W(beta_trial))>_j + dF(beta_trial), with W recomputed from
/// the raw records of dataset j.
RVector residuals(const BetaVector& beta_trial, const RevealInput& input);

/// 2 J^T r with J the central-difference Jacobian used by the solver.
RVector objective_gradient(const BetaVector& beta_trial, const RevealInput& input);

/// Levenberg-Marquardt fit of sum_j r_j^2 over the hypothesised betas. When
/// beta' follows the trial betas, theta = 0 solves every protocol trivially;
/// the solver works on residuals scaled by (1/|theta|^2 + 1), which removes
/// that root and keeps the others. Reported residuals are unscaled.
RevealReport fit_betas(const RevealInput& input, const BetaVector& initial_guess, const FitOptions& options = {});

/// Tests whether `excluded_charge` stays constant under the protocol class:
/// fits (betas without it, offset c) to ln P_FW(x) - ln P_BW(-x) - x = c over
/// the atoms of every FW/BW pair. Complete means "conserved".
RevealReport charge_constancy_test(const RevealInput& input, const std::string& excluded_charge,
                                   const BetaVector& initial_guess, const FitOptions& options = {});

}  // namespace ggfr::reveal
