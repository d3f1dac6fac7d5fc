#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ggfr {

/// Generalised inverse temperatures: beta (1/epsilon) conjugate to the
/// energy, and one beta_k per charge, keyed by charge id.
struct BetaVector {
  double beta{0.0};
  std::vector<std::pair<std::string, double>> charge_betas;

  std::size_t charge_count() const { return charge_betas.size(); }
  std::vector<std::string> charge_ids() const;
  bool has_charge(const std::string& id) const;
  /// Throws UnknownCharge.
  double charge_beta(const std::string& id) const;
  BetaVector without(const std::string& id) const;

  /// (beta, beta_1, ..., beta_K)
  Eigen::VectorXd as_vector() const;
  static BetaVector from_vector(const Eigen::VectorXd& v, const std::vector<std::string>& ids);

  friend bool operator==(const BetaVector&, const BetaVector&) = default;
};

}  // namespace ggfr
