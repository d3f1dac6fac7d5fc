#pragma once

// Checks of the generalised fluctuation relations on exact or sampled work
// distributions: Tasaki-Crooks (FW vs mirrored BW), Jarzynski, and the
// marginal Tasaki-Crooks relation with one charge omitted.

#include <vector>

#include "ggfr/gge.hpp"
#include "ggfr/tpm.hpp"

namespace ggfr::qfr {

/// F' - F with F = -ln Z.
double delta_gen_free_energy(const GgeEnsemble& initial, const GgeEnsemble& final_ensemble);

double delta_gen_free_energy(const GgeEnsemble& initial, const BetaVector& beta_fin,
                             const HermitianOperator& h_fin, const std::vector<Charge>& charges_fin,
                             const std::optional<PhononLadder>& ladder = std::nullopt);

/// beta' F' - beta F for canonical ensembles (no charges) over the given
/// spectra: ln Z_c(beta) - ln Z_c'(beta').
double delta_canonical_free_energy(const RVector& energies_ini, double beta, const RVector& energies_fin,
                                   double beta_prime);

struct QjeReport {
  double lhs{0.0};      // <exp(-W)>
  double log_lhs{0.0};
  double rhs{0.0};      // exp(-delta F)
  double log_rhs{0.0};
  double relative_error{0.0};  // |lhs / rhs - 1|
};

QjeReport check_qje(const tpm::DiscreteDistribution& pdf, double delta_f);

struct TcrAtom {
  double value{0.0};      // W of the forward atom
  double p_fw{0.0};       // P_FW(W)
  double p_bw{0.0};       // P_BW(-W)
  double residual{0.0};
  double log_lhs{0.0};    // ln(P_FW(W) e^{-W})
  double log_rhs{0.0};    // ln(e^{-dF} P_BW(-W))
};

struct TcrReport {
  std::vector<TcrAtom> atoms;              // matched atoms
  std::vector<TcrAtom> support_mismatch;   // present on one side above the floor only
  double max_residual{0.0};
  double delta_f{0.0};
  double floor{1e-14};
  double pass_threshold{1e-8};

  bool passed() const { return max_residual < pass_threshold && support_mismatch.empty(); }
};

/// Residual per atom: |P_FW(W) e^{-W} - e^{-dF} P_BW(-W)| / max(P_FW, P_BW, floor).
TcrReport check_tcr(const tpm::DiscreteDistribution& pdf_fw, const tpm::DiscreteDistribution& pdf_bw,
                    double delta_f, double floor = 1e-14, double pass_threshold = 1e-8);

/// Same check applied to marginal work PDFs built with one charge excluded.
TcrReport check_marginal_tcr(const tpm::DiscreteDistribution& pdf_fw_m,
                             const tpm::DiscreteDistribution& pdf_bw_m, double delta_f,
                             double floor = 1e-14, double pass_threshold = 1e-8);

}  // namespace ggfr::qfr
