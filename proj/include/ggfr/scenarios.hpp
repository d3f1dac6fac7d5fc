#pragma once

// Scenario pipelines behind the command line tool.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ggfr/config.hpp"
#include "ggfr/dicke.hpp"
#include "ggfr/gge.hpp"
#include "ggfr/output.hpp"
#include "ggfr/tpm.hpp"

namespace ggfr::cli {

/// The run would exceed a resource budget; nothing was computed.
class ResourceRefusal : public Error {
 public:
  ResourceRefusal(const std::string& what, double estimate_gb) : Error(what), estimate_gb(estimate_gb) {}
  double estimate_gb;
};

/// Resolved model, bases and ensembles shared by every scenario: the system
/// starts in the GGE of the initial Hamiltonian, is driven through the
/// configured stages, and is measured in the eigenbasis of the final one.
struct Experiment {
  RunConfig config;
  dicke::DickeParams model;  // g and alpha unused; n_max resolved
  std::shared_ptr<const JointEigenbasis> initial;
  std::shared_ptr<const JointEigenbasis> final_basis;
  BetaVector beta_ini;
  BetaVector beta_fin;
  std::shared_ptr<const GgeEnsemble> ens_ini;  // forward start
  std::shared_ptr<const GgeEnsemble> ens_fin;  // backward start
  double delta_f{0.0};         // F'(beta') - F(beta)
  double beta_delta_f{0.0};    // canonical ln Z_c(beta) - ln Z_c'(beta')
  double leakage_ini{0.0};
  double leakage_fin{0.0};

  Index dim() const { return initial->dim(); }
  dicke::DickeParams params(double g, double alpha) const;
  tpm::QuenchProtocol protocol(double t_fin_tau) const;
  /// Forward transition engine over t_fin.
  tpm::StageSweep sweep(tpm::SpectrumCache* cache = nullptr) const;
};

/// Approximate peak memory of one run at this dimension, in GB.
double memory_estimate_gb(Index dim);

/// Smallest n_max passing the truncation guard for both end ensembles.
int choose_n_max(const RunConfig& cfg);

/// `enforce_guard` = false reports leakage instead of refusing.
Experiment build_experiment(const RunConfig& cfg, bool enforce_guard = true);

struct QjePoint {
  double t_fin_tau{0.0};
  double gen_avg{0.0};   // <exp(-W)>
  double std_avg{0.0};   // <exp(-beta w)>
};

/// Generalised and standard exponentiated work averages at every t.
std::vector<QjePoint> qje_sweep(const Experiment& ex, const std::vector<double>& times_tau, int threads);

struct RunResult {
  io::ArtifactSet artifacts;  // data files, manifest excluded
  std::string manifest;
  double wall_seconds{0.0};
};

/// Runs the configured scenario and writes its artifacts and manifest to
/// cfg.out_dir. Throws ConfigError, ResourceRefusal or numerical Error.
RunResult run_scenario(const RunConfig& cfg);

/// Runs the scenario without touching the filesystem.
RunResult compute_scenario(const RunConfig& cfg);

/// Index-ordered parallel loop; rethrows the first exception.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace ggfr::cli
