#pragma once

// Run configuration: a UTF-8 `key = value` document, one entry per line,
// `#` starts a comment. Every key has a default matching the Fig. 2 block of
// the trapped-ion setup, so an empty document is a valid configuration.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ggfr/errors.hpp"

namespace ggfr::cli {

enum class Scenario { QjeSweep, TcrPanels, MarginalTcr, Reveal, ConvergenceSweep, Sample };

const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string key = {})
      : Error(line > 0 ? "line " + std::to_string(line) + (key.empty() ? "" : " (" + key + ")") + ": " + what
                       : (key.empty() ? what : key + ": " + what)),
        line(line), key(std::move(key)) {}
  int line;
  std::string key;
};

/// One held stage of the drive. A negative duration marks the stage whose
/// length is the swept time t_fin.
struct StageSpec {
  double g{0.0};
  double alpha{0.0};
  double duration_tau{-1.0};

  bool swept() const { return duration_tau < 0.0; }
};

struct RunConfig {
  Scenario scenario{Scenario::QjeSweep};

  // model (energies in epsilon)
  int n_ions{7};
  double omega_com{3.0};
  double omega_at{10.0};
  int n_max{0};  // 0 = chosen by the truncation guard

  // protocol: initial Hamiltonian, held stages, final Hamiltonian
  double g_ini{2.0};
  double alpha_ini{0.0};
  std::vector<StageSpec> stages{{3.0, 0.5, -1.0}};
  double g_fin{1.0};
  double alpha_fin{0.0};

  // times in hbar/epsilon
  double t_fin_tau{0.0};
  double t_min_tau{0.0};
  double t_max_tau{0.0};
  int per_decade{11};
  std::vector<double> reveal_times_tau;

  // ensemble (1/epsilon)
  double beta{0.1};
  double beta_q{0.3};
  std::optional<double> beta_prime;    // unset: beta' = beta
  std::optional<double> beta_q_prime;  // unset: carried over from beta_q

  // scenario specific
  std::string excluded_charge{"Q"};
  std::vector<std::string> hypothesis{"Q"};
  std::vector<int> n_max_list;
  std::uint64_t shots{100000};
  std::uint64_t reveal_shots{0};  // 0: exact distributions
  int bootstrap{1000};
  double merge_tolerance{1e-9};

  // run
  std::string out_dir{"out"};
  std::uint64_t seed{0};
  int threads{1};
  double mem_cap_gb{4.0};
  bool full_scale{false};

  /// Throws ConfigError naming the violated condition.
  void validate() const;
  /// Canonical `key = value` text; parse_config(to_text()) reproduces the config.
  std::string to_text() const;
};

/// Time units accepted in documents; internal times are hbar/epsilon with
/// epsilon = hbar * 2 pi MHz, i.e. t[tau] = 2 pi t[us].
double to_tau(double value, const std::string& unit);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Charges conserved by a Dicke Hamiltonian at this alpha (Q at 0, Q' at 1).
std::vector<std::string> endpoint_charges(double alpha);

}  // namespace ggfr::cli
