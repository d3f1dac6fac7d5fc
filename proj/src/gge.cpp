#include "ggfr/gge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ggfr/tolerances.hpp"

namespace ggfr {

namespace {

struct Sector {
  std::vector<Index> rows;  // coordinate sector: subset of source-basis indices
  CMatrix basis;            // general sector: orthonormal columns
  bool coordinate{true};
  std::vector<double> values;
};

double log_sum_exp(const RVector& x) {
  const double top = x.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((x.array() - top).exp().sum());
}

// Groups sorted (value, payload) pairs whose neighbours are closer than tol.
template <class T>
std::vector<std::vector<T>> cluster_sorted(const std::vector<std::pair<double, T>>& items, double tol,
                                           std::vector<double>& centres) {
  std::vector<std::vector<T>> groups;
  centres.clear();
  double sum = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i == 0 || items[i].first - items[i - 1].first > tol) {
      if (i > 0) centres.push_back(sum / groups.back().size());
      groups.emplace_back();
      sum = 0.0;
    }
    groups.back().push_back(items[i].second);
    sum += items[i].first;
  }
  if (!groups.empty()) centres.push_back(sum / groups.back().size());
  return groups;
}

CMatrix sector_basis(const Sector& s, Index dim) {
  if (!s.coordinate) return s.basis;
  CMatrix w = CMatrix::Zero(dim, static_cast<Index>(s.rows.size()));
  for (std::size_t c = 0; c < s.rows.size(); ++c) w(s.rows[c], static_cast<Index>(c)) = 1.0;
  return w;
}

CMatrix restrict_to(const Sector& s, const CMatrix& op) {
  if (!s.coordinate) return s.basis.adjoint() * op * s.basis;
  const Index n = static_cast<Index>(s.rows.size());
  CMatrix out(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) out(i, j) = op(s.rows[i], s.rows[j]);
  return out;
}

std::vector<Sector> split_sector(const Sector& s, const HermitianOperator& q, Index dim) {
  const double tol = 1e-8 * std::max(1.0, q.max_norm());
  std::vector<Sector> out;
  std::vector<double> centres;
  if (s.coordinate && q.is_diagonal()) {
    std::vector<std::pair<double, Index>> items;
    for (Index r : s.rows) items.emplace_back(q.matrix()(r, r).real(), r);
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto groups = cluster_sorted(items, tol, centres);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      Sector sub{std::move(groups[g]), {}, true, s.values};
      std::sort(sub.rows.begin(), sub.rows.end());
      sub.values.push_back(centres[g]);
      out.push_back(std::move(sub));
    }
    return out;
  }
  const CMatrix w = sector_basis(s, dim);
  const SpectralData spec = eigh(HermitianOperator(CMatrix(w.adjoint() * q.matrix() * w)));
  std::vector<std::pair<double, Index>> items;
  for (Index k = 0; k < spec.dim(); ++k) items.emplace_back(spec.eigenvalues[k], k);
  auto groups = cluster_sorted(items, tol, centres);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    CMatrix cols(spec.dim(), static_cast<Index>(groups[g].size()));
    for (std::size_t c = 0; c < groups[g].size(); ++c)
      cols.col(static_cast<Index>(c)) = spec.eigenvectors.col(groups[g][c]);
    Sector sub{{}, w * cols, false, s.values};
    sub.values.push_back(centres[g]);
    out.push_back(std::move(sub));
  }
  return out;
}

void require_commuting(const std::string& a_id, const HermitianOperator& a, const std::string& b_id,
                       const HermitianOperator& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("charge '" + b_id + "' has the wrong dimension");
  if (a.is_diagonal() && b.is_diagonal()) return;
  const double norm = commutator_norm(a, b);
  if (norm > tol::kChargeAdmission * a.max_norm() * b.max_norm())
    throw NonCommutingCharge(a_id, b_id, norm);
}

}  // namespace

Index JointEigenbasis::charge_column(const std::string& id) const {
  for (std::size_t k = 0; k < charge_ids.size(); ++k)
    if (charge_ids[k] == id) return static_cast<Index>(k);
  throw UnknownCharge(id);
}

RVector JointEigenbasis::weights(const BetaVector& betas) const {
  if (betas.charge_count() != charge_ids.size())
    throw DimensionMismatch("beta vector has " + std::to_string(betas.charge_count()) +
                            " charges, basis has " + std::to_string(charge_ids.size()));
  RVector a = betas.beta * energies;
  for (const auto& [id, b] : betas.charge_betas) a += b * charge_values.col(charge_column(id));
  return a;
}

JointEigenbasis joint_diagonalize(const HermitianOperator& h, const std::vector<Charge>& charges) {
  const Index dim = h.dim();
  for (std::size_t k = 0; k < charges.size(); ++k) {
    require_commuting("H", h, charges[k].id, charges[k].op);
    for (std::size_t l = 0; l < k; ++l)
      require_commuting(charges[l].id, charges[l].op, charges[k].id, charges[k].op);
  }

  std::vector<Sector> sectors(1);
  sectors[0].rows.resize(dim);
  std::iota(sectors[0].rows.begin(), sectors[0].rows.end(), Index{0});
  for (const auto& c : charges) {
    std::vector<Sector> next;
    for (const auto& s : sectors) {
      auto parts = split_sector(s, c.op, dim);
      std::move(parts.begin(), parts.end(), std::back_inserter(next));
    }
    sectors = std::move(next);
  }

  const Index k_count = static_cast<Index>(charges.size());
  RVector energies(dim);
  RMatrix values(dim, k_count);
  CMatrix vectors = CMatrix::Zero(dim, dim);
  Index col = 0;
  for (const auto& s : sectors) {
    const SpectralData spec = eigh(HermitianOperator(restrict_to(s, h.matrix())));
    for (Index k = 0; k < spec.dim(); ++k, ++col) {
      energies[col] = spec.eigenvalues[k];
      for (Index c = 0; c < k_count; ++c) values(col, c) = s.values[static_cast<std::size_t>(c)];
      if (s.coordinate) {
        for (std::size_t r = 0; r < s.rows.size(); ++r)
          vectors(s.rows[r], col) = spec.eigenvectors(static_cast<Index>(r), k);
      } else {
        vectors.col(col) = s.basis * spec.eigenvectors.col(k);
      }
    }
  }

  std::vector<Index> order(dim);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (energies[a] != energies[b]) return energies[a] < energies[b];
    for (Index c = 0; c < k_count; ++c)
      if (values(a, c) != values(b, c)) return values(a, c) < values(b, c);
    return false;
  });

  JointEigenbasis out;
  for (const auto& c : charges) out.charge_ids.push_back(c.id);
  out.energies.resize(dim);
  out.charge_values.resize(dim, k_count);
  out.vectors.resize(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    out.energies[i] = energies[order[i]];
    out.charge_values.row(i) = values.row(order[i]);
    out.vectors.col(i) = vectors.col(order[i]);
  }
  return out;
}

double truncation_leakage(const JointEigenbasis& basis, const RVector& probabilities,
                          const PhononLadder& ladder, double top_fraction) {
  if (ladder.occupation.size() != basis.dim())
    throw DimensionMismatch("phonon ladder does not match the basis dimension");
  const int cut = static_cast<int>(std::floor((1.0 - top_fraction) * ladder.n_max)) + 1;
  double leak = 0.0;
  for (Index r = 0; r < basis.dim(); ++r) {
    if (ladder.occupation[r] < std::min(cut, ladder.n_max)) continue;
    leak += (basis.vectors.row(r).cwiseAbs2().transpose().array() * probabilities.array()).sum();
  }
  return leak;
}

GgeEnsemble::GgeEnsemble(BetaVector betas, std::shared_ptr<const JointEigenbasis> basis)
    : betas_(std::move(betas)), basis_(std::move(basis)) {
  const RVector minus_a = -basis_->weights(betas_);
  log_z_ = log_sum_exp(minus_a);
  if (!std::isfinite(log_z_)) throw InvalidParameter("partition function is not finite");
  log_probabilities_ = minus_a.array() - log_z_;
  probabilities_ = log_probabilities_.array().exp();
}

namespace {

int suggest_n_max(const JointEigenbasis& basis, const RVector& p, const PhononLadder& ladder,
                  double leak) {
  const double leak_wide = truncation_leakage(basis, p, ladder, 2.0 * tol::kTruncationTopFraction);
  const double width = tol::kTruncationTopFraction * ladder.n_max;
  if (leak > 0.0 && leak_wide > leak && width > 0.0) {
    const double rate = std::log(leak_wide / leak) / width;
    const double extra = std::log(10.0 * leak / tol::kTruncationLeakage) / rate;
    const double target = (1.0 - tol::kTruncationTopFraction) * ladder.n_max + extra;
    const int n = static_cast<int>(std::ceil(target / (1.0 - tol::kTruncationTopFraction)));
    if (n > ladder.n_max && n < 8 * ladder.n_max) return n;
  }
  return 2 * ladder.n_max;
}

}  // namespace

GgeEnsemble build_gge(const BetaVector& betas, std::shared_ptr<const JointEigenbasis> basis,
                      const std::optional<PhononLadder>& ladder) {
  GgeEnsemble ens(betas, std::move(basis));
  if (ladder) {
    const double leak = truncation_leakage(ens.basis(), ens.probabilities(), *ladder,
                                           tol::kTruncationTopFraction);
    if (!(leak < tol::kTruncationLeakage))
      throw TruncationUnconverged(leak, ladder->n_max,
                                  suggest_n_max(ens.basis(), ens.probabilities(), *ladder, leak));
  }
  return ens;
}

GgeEnsemble build_gge(const BetaVector& betas, const HermitianOperator& h,
                      const std::vector<Charge>& charges, const std::optional<PhononLadder>& ladder) {
  return build_gge(betas, std::make_shared<const JointEigenbasis>(joint_diagonalize(h, charges)), ladder);
}

double log_partition(const JointEigenbasis& basis, const BetaVector& betas) {
  return log_sum_exp(-basis.weights(betas));
}

double gge_average(const GgeEnsemble& ens, const RVector& observable_diagonal) {
  if (observable_diagonal.size() != ens.basis().dim())
    throw DimensionMismatch("observable length does not match the ensemble dimension");
  return ens.probabilities().dot(observable_diagonal);
}

BetaVector solve_betas_from_averages(const RVector& targets, const HermitianOperator& h,
                                     const std::vector<Charge>& charges,
                                     const BetaVector& initial_guess, const SolverOptions& options) {
  return solve_betas_from_averages(targets, joint_diagonalize(h, charges), initial_guess, options);
}

BetaVector solve_betas_from_averages(const RVector& targets, const JointEigenbasis& basis,
                                     const BetaVector& initial_guess, const SolverOptions& options) {
  const Index k = basis.charge_count() + 1;
  if (targets.size() != k) throw DimensionMismatch("need one target per observable (energy + charges)");
  RMatrix x(basis.dim(), k);
  x.col(0) = basis.energies;
  x.rightCols(k - 1) = basis.charge_values;

  RVector tolerance(k);
  for (Index c = 0; c < k; ++c) {
    const double lo = x.col(c).minCoeff();
    const double hi = x.col(c).maxCoeff();
    const double margin = 1e-12 * std::max(1.0, hi - lo);
    if (!(targets[c] > lo + margin && targets[c] < hi - margin))
      throw TargetOutsideSpectrum("target " + std::to_string(c) + " = " + std::to_string(targets[c]) +
                                  " is not strictly inside [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
    tolerance[c] = options.relative_tolerance * std::max(1.0, std::abs(targets[c]));
  }

  // Betas ordered as the basis' charge columns.
  RVector b(k);
  b[0] = initial_guess.beta;
  for (Index c = 1; c < k; ++c)
    b[c] = initial_guess.has_charge(basis.charge_ids[c - 1]) ? initial_guess.charge_beta(basis.charge_ids[c - 1])
                                                             : 0.0;

  auto objective = [&](const RVector& beta, RVector* mean, RMatrix* cov) {
    const RVector minus_a = -(x * beta);
    const double lse = log_sum_exp(minus_a);
    if (mean) {
      const RVector p = (minus_a.array() - lse).exp();
      *mean = x.transpose() * p;
      const RMatrix centred = x.rowwise() - mean->transpose();
      *cov = centred.transpose() * p.asDiagonal() * centred;
    }
    return lse + beta.dot(targets);
  };

  RVector mean(k);
  RMatrix cov(k, k);
  double f = objective(b, &mean, &cov);
  RVector best = b;
  double best_residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    const RVector grad = targets - mean;
    const double residual = (grad.array().abs() / tolerance.array()).maxCoeff() * options.relative_tolerance;
    if (residual < best_residual) {
      best_residual = residual;
      best = b;
    }
    if ((grad.array().abs() <= 1e-4 * tolerance.array()).all()) break;

    RVector step = cov.ldlt().solve(-grad);
    if (!step.allFinite()) step = -grad;
    double s = 1.0;
    const double slope = grad.dot(step);
    RVector trial = b + s * step;
    double f_trial = objective(trial, nullptr, nullptr);
    while (!(f_trial <= f + 1e-4 * s * slope) && s > 1e-12) {
      s *= 0.5;
      trial = b + s * step;
      f_trial = objective(trial, nullptr, nullptr);
    }
    if (s <= 1e-12) break;  // no further descent possible at double precision
    b = trial;
    if (b.cwiseAbs().maxCoeff() > 1e8)
      throw TargetOutsideSpectrum("inverse temperatures diverge: targets lie on the spectral boundary");
    f = objective(b, &mean, &cov);
  }
  {
    const RVector grad = targets - mean;
    const double residual = (grad.array().abs() / tolerance.array()).maxCoeff() * options.relative_tolerance;
    if (residual < best_residual) {
      best_residual = residual;
      best = b;
    }
  }
  const BetaVector result = BetaVector::from_vector(best, basis.charge_ids);
  if (!(best_residual <= options.relative_tolerance)) throw MaxIterationsExceeded(result, best_residual);
  return result;
}

}  // namespace ggfr
