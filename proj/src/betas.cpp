#include "ggfr/betas.hpp"

#include <algorithm>

#include "ggfr/errors.hpp"

namespace ggfr {

std::vector<std::string> BetaVector::charge_ids() const {
  std::vector<std::string> ids;
  ids.reserve(charge_betas.size());
  for (const auto& [id, b] : charge_betas) ids.push_back(id);
  return ids;
}

bool BetaVector::has_charge(const std::string& id) const {
  return std::any_of(charge_betas.begin(), charge_betas.end(),
                     [&](const auto& cb) { return cb.first == id; });
}

double BetaVector::charge_beta(const std::string& id) const {
  for (const auto& [cid, b] : charge_betas)
    if (cid == id) return b;
  throw UnknownCharge(id);
}

BetaVector BetaVector::without(const std::string& id) const {
  if (!has_charge(id)) throw UnknownCharge(id);
  BetaVector out{beta, {}};
  for (const auto& cb : charge_betas)
    if (cb.first != id) out.charge_betas.push_back(cb);
  return out;
}

Eigen::VectorXd BetaVector::as_vector() const {
  Eigen::VectorXd v(1 + charge_betas.size());
  v[0] = beta;
  for (std::size_t k = 0; k < charge_betas.size(); ++k) v[1 + k] = charge_betas[k].second;
  return v;
}

BetaVector BetaVector::from_vector(const Eigen::VectorXd& v, const std::vector<std::string>& ids) {
  if (v.size() != static_cast<Eigen::Index>(ids.size() + 1))
    throw DimensionMismatch("beta vector length does not match charge count");
  BetaVector out{v[0], {}};
  for (std::size_t k = 0; k < ids.size(); ++k) out.charge_betas.emplace_back(ids[k], v[1 + k]);
  return out;
}

}  // namespace ggfr
