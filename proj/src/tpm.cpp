#include "ggfr/tpm.hpp"

#include <algorithm>
#include <cmath>

#include "ggfr/errors.hpp"
#include "ggfr/rng.hpp"
#include "ggfr/tolerances.hpp"

namespace ggfr::tpm {

void QuenchProtocol::validate() const {
  if (stages.empty()) throw InvalidParameter("protocol needs at least one stage");
  for (const auto& s : stages) {
    s.params.validate();
    if (!(s.duration >= 0.0) || !std::isfinite(s.duration))
      throw InvalidParameter("stage durations must be finite and >= 0");
    if (s.params.n_ions != stages.front().params.n_ions || s.params.n_max != stages.front().params.n_max)
      throw DimensionMismatch("all stages must share n_ions and n_max");
  }
}

QuenchProtocol QuenchProtocol::reversed() const {
  QuenchProtocol out{{stages.rbegin(), stages.rend()},
                     direction == Direction::Forward ? Direction::Backward : Direction::Forward};
  return out;
}

std::uint64_t QuenchProtocol::hash() const {
  std::uint64_t h = fnv1a(&direction, sizeof(direction));
  for (const auto& s : stages) {
    const double fields[] = {s.params.omega_com, s.params.omega_at, s.params.g, s.params.alpha, s.duration};
    const int ints[] = {s.params.n_ions, s.params.n_max};
    h = fnv1a(fields, sizeof(fields), h);
    h = fnv1a(ints, sizeof(ints), h);
  }
  return h;
}

std::shared_ptr<const SpectralData> SpectrumCache::get(const dicke::DickeParams& p) {
  {
    std::lock_guard lock(mutex_);
    for (const auto& [key, spec] : entries_)
      if (key == p) return spec;
  }
  auto spec = std::make_shared<const SpectralData>(eigh(dicke::build_hamiltonian(p)));
  std::lock_guard lock(mutex_);
  for (const auto& [key, existing] : entries_)
    if (key == p) return existing;
  entries_.emplace_back(p, spec);
  return spec;
}

UnitaryOperator protocol_unitary(const QuenchProtocol& prot, SpectrumCache* cache) {
  prot.validate();
  const Index dim = dicke::DickeBasis(prot.stages.front().params).size();
  const double sign = prot.direction == Direction::Forward ? 1.0 : -1.0;
  UnitaryOperator u = UnitaryOperator::identity(dim);
  for (const auto& s : prot.stages) {
    if (s.duration == 0.0) continue;
    const auto spec = cache ? cache->get(s.params)
                            : std::make_shared<const SpectralData>(eigh(dicke::build_hamiltonian(s.params)));
    u = propagator(*spec, sign * s.duration) * u;
  }
  return u;
}

Index OutcomeLabels::charge_column(const std::string& id) const {
  for (std::size_t k = 0; k < charge_ids.size(); ++k)
    if (charge_ids[k] == id) return static_cast<Index>(k);
  throw UnknownCharge(id);
}

RVector OutcomeLabels::weights(const BetaVector& betas, const std::string& excluded) const {
  RVector a = betas.beta * energies;
  for (const auto& [id, b] : betas.charge_betas) {
    if (id == excluded) continue;
    a += b * charge_values.col(charge_column(id));
  }
  return a;
}

std::shared_ptr<const OutcomeLabels> OutcomeLabels::of(const JointEigenbasis& basis) {
  return std::make_shared<const OutcomeLabels>(
      OutcomeLabels{basis.charge_ids, basis.energies, basis.charge_values});
}

RMatrix transition_matrix(const JointEigenbasis& initial, const UnitaryOperator& u,
                          const JointEigenbasis& final_basis) {
  if (initial.dim() != u.dim() || final_basis.dim() != u.dim())
    throw DimensionMismatch("bases and protocol unitary differ in dimension");
  const CMatrix amp = final_basis.vectors.adjoint() * (u.matrix() * initial.vectors);
  return amp.cwiseAbs2();
}

StageSweep::StageSweep(const JointEigenbasis& initial, const UnitaryOperator& pre, const SpectralData& swept,
                       const UnitaryOperator& post, const JointEigenbasis& final_basis)
    : eigenvalues_(swept.eigenvalues) {
  const Index dim = swept.dim();
  if (initial.dim() != dim || final_basis.dim() != dim || pre.dim() != dim || post.dim() != dim)
    throw DimensionMismatch("sweep factors differ in dimension");
  left_ = final_basis.vectors.adjoint() * (post.matrix() * swept.eigenvectors);
  right_ = swept.eigenvectors.adjoint() * (pre.matrix() * initial.vectors);
  real_ = left_.imag().cwiseAbs().maxCoeff() == 0.0 && right_.imag().cwiseAbs().maxCoeff() == 0.0;
  if (real_) {
    left_re_ = left_.real();
    right_re_ = right_.real();
    left_.resize(0, 0);
    right_.resize(0, 0);
  }
}

RMatrix StageSweep::transitions(double t) const {
  if (!std::isfinite(t)) throw InvalidParameter("sweep time must be finite");
  const RVector phase = -t * eigenvalues_;
  if (real_) {
    const RVector c = phase.array().cos();
    const RVector s = phase.array().sin();
    const RMatrix re = left_re_ * (c.asDiagonal() * right_re_);
    const RMatrix im = left_re_ * (s.asDiagonal() * right_re_);
    return re.cwiseAbs2() + im.cwiseAbs2();
  }
  const CVector d = phase.unaryExpr([](double x) { return std::polar(1.0, x); });
  return (left_ * (d.asDiagonal() * right_)).cwiseAbs2();
}

double stochasticity_defect(const RMatrix& pi) {
  const double rows = (pi.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (pi.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

JointOutcomeDistribution::JointOutcomeDistribution(std::shared_ptr<const OutcomeLabels> initial,
                                                   std::shared_ptr<const OutcomeLabels> final_labels,
                                                   RMatrix prob, DistributionMetadata meta)
    : initial_(std::move(initial)), final_(std::move(final_labels)), prob_(std::move(prob)),
      meta_(std::move(meta)) {
  if (prob_.cols() != initial_->dim() || prob_.rows() != final_->dim())
    throw DimensionMismatch("outcome probability table does not match its labels");
  if (std::abs(prob_.sum() - 1.0) > tol::kDistributionNorm)
    throw Error("outcome probabilities sum to " + std::to_string(prob_.sum()));
}

std::vector<JointOutcomeDistribution::Record> JointOutcomeDistribution::records() const {
  std::vector<Record> out;
  for (Index i = 0; i < prob_.cols(); ++i)
    for (Index f = 0; f < prob_.rows(); ++f)
      if (prob_(f, i) > 0.0) out.push_back({i, f, prob_(f, i)});
  return out;
}

JointOutcomeDistribution tpm_from_transitions(const GgeEnsemble& ens, const RMatrix& pi,
                                              std::shared_ptr<const OutcomeLabels> final_labels,
                                              DistributionMetadata meta) {
  const double defect = stochasticity_defect(pi);
  if (!(defect < tol::kStochasticity))
    throw Error("transition matrix is not doubly stochastic (defect " + std::to_string(defect) + ")");
  meta.initial_betas = ens.betas();
  RMatrix prob = pi * ens.probabilities().asDiagonal();
  return JointOutcomeDistribution(OutcomeLabels::of(ens.basis()), std::move(final_labels), std::move(prob),
                                  std::move(meta));
}

JointOutcomeDistribution tpm_exact(const GgeEnsemble& ens, const QuenchProtocol& prot,
                                   const JointEigenbasis& final_basis, SpectrumCache* cache) {
  const UnitaryOperator u = protocol_unitary(prot, cache);
  DistributionMetadata meta;
  meta.protocol_hash = prot.hash();
  meta.direction = prot.direction;
  return tpm_from_transitions(ens, transition_matrix(ens.basis(), u, final_basis),
                              OutcomeLabels::of(final_basis), meta);
}

JointOutcomeDistribution tpm_exact(const GgeEnsemble& ens, const QuenchProtocol& prot,
                                   const HermitianOperator& final_h, const std::vector<Charge>& final_charges,
                                   SpectrumCache* cache) {
  return tpm_exact(ens, prot, joint_diagonalize(final_h, final_charges), cache);
}

namespace {

Index draw(const double* cdf, Index n, double u) {
  const double* it = std::upper_bound(cdf, cdf + n, u);
  return std::min<Index>(it - cdf, n - 1);
}

}  // namespace

JointOutcomeDistribution sample_from_transitions(const GgeEnsemble& ens, const RMatrix& pi,
                                                 std::shared_ptr<const OutcomeLabels> final_labels,
                                                 std::uint64_t n_shots, std::uint64_t seed,
                                                 DistributionMetadata meta) {
  if (n_shots < 1) throw InvalidParameter("n_shots must be >= 1");
  const Index n_ini = ens.basis().dim();
  const Index n_fin = pi.rows();
  RVector initial_cdf(n_ini);
  double acc = 0.0;
  for (Index i = 0; i < n_ini; ++i) initial_cdf[i] = (acc += ens.probabilities()[i]);
  initial_cdf /= acc;

  RMatrix column_cdf(n_fin, n_ini);
  for (Index i = 0; i < n_ini; ++i) {
    double c = 0.0;
    for (Index f = 0; f < n_fin; ++f) column_cdf(f, i) = (c += pi(f, i));
    column_cdf.col(i) /= c;
  }

  const CounterRng rng(seed, meta.protocol_hash);
  Eigen::MatrixX<std::uint64_t> counts = Eigen::MatrixX<std::uint64_t>::Zero(n_fin, n_ini);
  for (std::uint64_t shot = 0; shot < n_shots; ++shot) {
    const Index i = draw(initial_cdf.data(), n_ini, rng.shot_uniform(shot, 0));
    const Index f = draw(column_cdf.col(i).data(), n_fin, rng.shot_uniform(shot, 1));
    ++counts(f, i);
  }
  RMatrix prob = counts.cast<double>() / static_cast<double>(n_shots);
  meta.initial_betas = ens.betas();
  meta.shots = n_shots;
  meta.seed = seed;
  return JointOutcomeDistribution(OutcomeLabels::of(ens.basis()), std::move(final_labels), std::move(prob),
                                  std::move(meta));
}

JointOutcomeDistribution tpm_sample(const GgeEnsemble& ens, const QuenchProtocol& prot,
                                    const JointEigenbasis& final_basis, std::uint64_t n_shots,
                                    std::uint64_t seed, SpectrumCache* cache) {
  const UnitaryOperator u = protocol_unitary(prot, cache);
  DistributionMetadata meta;
  meta.protocol_hash = prot.hash();
  meta.direction = prot.direction;
  return sample_from_transitions(ens, transition_matrix(ens.basis(), u, final_basis),
                                 OutcomeLabels::of(final_basis), n_shots, seed, meta);
}

DiscreteDistribution DiscreteDistribution::from_points(std::vector<Atom> points, double tolerance) {
  std::erase_if(points, [](const Atom& a) { return !(a.prob > 0.0); });
  std::sort(points.begin(), points.end(), [](const Atom& a, const Atom& b) {
    return a.value < b.value || (a.value == b.value && a.prob < b.prob);
  });
  DiscreteDistribution out;
  out.merge_tolerance = tolerance;
  std::size_t i = 0;
  while (i < points.size()) {
    std::size_t j = i + 1;
    while (j < points.size() && points[j].value - points[j - 1].value <= tolerance) ++j;
    double p = 0.0;
    double moment = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      p += points[k].prob;
      moment += points[k].prob * points[k].value;
    }
    out.atoms.push_back({j - i == 1 ? points[i].value : moment / p, p});
    i = j;
  }
  return out;
}

double DiscreteDistribution::total() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.prob;
  return s;
}

DiscreteDistribution DiscreteDistribution::scaled(double factor) const {
  DiscreteDistribution out{atoms, merge_tolerance * std::abs(factor)};
  for (auto& a : out.atoms) a.value *= factor;
  if (factor < 0.0) std::reverse(out.atoms.begin(), out.atoms.end());
  return out;
}

namespace {

DiscreteDistribution work_from_weights(const JointOutcomeDistribution& jd, const RVector& a_ini,
                                       const RVector& a_fin, double tolerance) {
  const RMatrix& p = jd.probabilities();
  std::vector<DiscreteDistribution::Atom> points;
  points.reserve(static_cast<std::size_t>(p.size()));
  for (Index i = 0; i < p.cols(); ++i)
    for (Index f = 0; f < p.rows(); ++f)
      if (p(f, i) > 0.0) points.push_back({a_fin[f] - a_ini[i], p(f, i)});
  return DiscreteDistribution::from_points(std::move(points), tolerance);
}

void require_exact_cover(const OutcomeLabels& labels, const BetaVector& betas, const char* side) {
  if (betas.charge_count() != labels.charge_ids.size())
    throw DimensionMismatch(std::string(side) + " beta vector has " + std::to_string(betas.charge_count()) +
                            " charges but records carry " + std::to_string(labels.charge_ids.size()));
}

}  // namespace

DiscreteDistribution generalised_work_pdf(const JointOutcomeDistribution& jd, const BetaVector& beta_ini,
                                          const BetaVector& beta_fin, double merge_tolerance) {
  require_exact_cover(jd.initial(), beta_ini, "initial");
  require_exact_cover(jd.final_labels(), beta_fin, "final");
  return work_from_weights(jd, jd.initial().weights(beta_ini), jd.final_labels().weights(beta_fin),
                           merge_tolerance);
}

DiscreteDistribution standard_work_pdf(const JointOutcomeDistribution& jd, double merge_tolerance) {
  return work_from_weights(jd, jd.initial().energies, jd.final_labels().energies, merge_tolerance);
}

DiscreteDistribution marginal_work_pdf(const JointOutcomeDistribution& jd, const std::string& excluded_charge,
                                       const BetaVector& beta_ini, const BetaVector& beta_fin,
                                       double merge_tolerance) {
  const auto& ids_i = jd.initial().charge_ids;
  const auto& ids_f = jd.final_labels().charge_ids;
  if (std::find(ids_i.begin(), ids_i.end(), excluded_charge) == ids_i.end() &&
      std::find(ids_f.begin(), ids_f.end(), excluded_charge) == ids_f.end())
    throw UnknownCharge(excluded_charge);
  require_exact_cover(jd.initial(), beta_ini, "initial");
  require_exact_cover(jd.final_labels(), beta_fin, "final");
  return work_from_weights(jd, jd.initial().weights(beta_ini, excluded_charge),
                           jd.final_labels().weights(beta_fin, excluded_charge), merge_tolerance);
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0 && hi >= lo) || per_decade < 1) throw InvalidParameter("invalid logarithmic grid");
  const double decades = std::log10(hi / lo);
  const int steps = static_cast<int>(std::lround(decades * per_decade));
  std::vector<double> out;
  for (int k = 0; k <= steps; ++k) out.push_back(lo * std::pow(10.0, decades * k / std::max(steps, 1)));
  if (steps == 0) out.resize(1);
  return out;
}

}  // namespace ggfr::tpm
