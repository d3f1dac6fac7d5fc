#include "ggfr/reveal.hpp"

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "ggfr/errors.hpp"
#include "ggfr/rng.hpp"
#include "ggfr/tolerances.hpp"

namespace ggfr::reveal {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Complete: return "Complete";
    case Verdict::Incomplete: return "Incomplete";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

void RevealInput::validate() const {
  if (datasets.size() < hypothesis.size() + 2)
    throw InvalidParameter("need at least " + std::to_string(hypothesis.size() + 2) + " protocols for " +
                           std::to_string(hypothesis.size()) + " hypothesised charges, got " +
                           std::to_string(datasets.size()));
  if (!model_initial || !model_final) throw InvalidParameter("reveal input lacks the model spectra");
  for (const auto& id : hypothesis) {
    model_initial->charge_column(id);
    for (const auto& d : datasets) d.initial().charge_column(id);
  }
}

namespace {

double log_sum_exp(const RVector& x) {
  const double top = x.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((x.array() - top).exp().sum());
}

BetaVector restricted_to(const BetaVector& b, const std::vector<std::string>& ids) {
  BetaVector out{b.beta, {}};
  for (const auto& cb : b.charge_betas)
    if (std::find(ids.begin(), ids.end(), cb.first) != ids.end()) out.charge_betas.push_back(cb);
  return out;
}

struct CompiledDataset {
  std::shared_ptr<const tpm::OutcomeLabels> initial;
  std::shared_ptr<const tpm::OutcomeLabels> final_labels;
  std::vector<Index> ini;
  std::vector<Index> fin;
  RVector prob;
  std::uint64_t shots{0};
};

CompiledDataset compile(const tpm::JointOutcomeDistribution& d) {
  CompiledDataset c{d.initial_ptr(), d.final_ptr(), {}, {}, {}, d.metadata().shots};
  const auto records = d.records();
  c.prob.resize(static_cast<Index>(records.size()));
  for (std::size_t e = 0; e < records.size(); ++e) {
    c.ini.push_back(records[e].initial);
    c.fin.push_back(records[e].final);
    c.prob[static_cast<Index>(e)] = records[e].prob;
  }
  return c;
}

// Evaluates the Jarzynski residuals of every protocol for trial betas.
class QjeProblem {
 public:
  explicit QjeProblem(const RevealInput& input) : input_(input) {
    input.validate();
    for (const auto& d : input.datasets) data_.push_back(compile(d));
    for (const auto& d : data_) probs_.push_back(d.prob);
  }

  Index size() const { return static_cast<Index>(data_.size()); }
  const std::vector<std::string>& hypothesis() const { return input_.hypothesis; }
  const CompiledDataset& dataset(std::size_t j) const { return data_[j]; }
  bool sampled() const {
    return std::any_of(data_.begin(), data_.end(), [](const auto& d) { return d.shots > 0; });
  }
  bool tracks_trial_betas() const { return !input_.beta_prime_override.has_value(); }
  void set_probabilities(std::vector<RVector> probs) { probs_ = std::move(probs); }
  const std::vector<RVector>& probabilities() const { return probs_; }

  RVector operator()(const RVector& theta) const {
    const BetaVector beta = BetaVector::from_vector(theta, input_.hypothesis);
    RVector r(size());
    for (std::size_t j = 0; j < data_.size(); ++j) {
      const auto& d = data_[j];
      const BetaVector beta_fin = final_betas(beta, *d.final_labels);
      const RVector a_ini = d.initial->weights(beta);
      const RVector a_fin = d.final_labels->weights(beta_fin);
      const RVector& p = probs_[j];
      RVector x(p.size());
      for (Index e = 0; e < p.size(); ++e) x[e] = std::log(p[e]) + a_ini[d.ini[e]] - a_fin[d.fin[e]];
      const double delta_f = log_sum_exp(-input_.model_initial->weights(beta)) -
                             log_sum_exp(-input_.model_final->weights(final_betas(beta, *input_.model_final)));
      r[static_cast<Index>(j)] = log_sum_exp(x) + delta_f;
    }
    return r;
  }

 private:
  BetaVector final_betas(const BetaVector& beta, const tpm::OutcomeLabels& labels) const {
    if (input_.beta_prime_override) return *input_.beta_prime_override;
    return restricted_to(beta, labels.charge_ids);
  }

  const RevealInput& input_;
  std::vector<CompiledDataset> data_;
  std::vector<RVector> probs_;
};

// With final betas tied to the trial betas every residual vanishes at theta = 0
// for any data. Scaling by (1/|theta|^2 + 1) removes that root and keeps all others.
template <class Problem>
struct Deflated {
  const Problem* inner;
  bool active;

  Index size() const { return inner->size(); }
  RVector operator()(const RVector& theta) const {
    RVector r = (*inner)(theta);
    if (active) r *= 1.0 / std::max(theta.squaredNorm(), kDeflationFloor) + 1.0;
    return r;
  }
  static constexpr double kDeflationFloor = 1e-24;
};

// Start point used in place of theta = 0, where the deflated residual is singular.
constexpr double kOriginNudge = 1e-2;

template <class Problem>
RVector off_origin(const Problem& problem, RVector theta) {
  if (problem.tracks_trial_betas() && theta.norm() < kOriginNudge) theta.setConstant(kOriginNudge);
  return theta;
}

// Halton points for the restart set.
constexpr std::array<int, 8> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};

double radical_inverse(int k, int base) {
  double f = 1.0, r = 0.0;
  for (; k > 0; k /= base) {
    f /= base;
    r += f * (k % base);
  }
  return r;
}

// Objective norm below which a fit is taken as an exact root and restarts stop.
constexpr double kExactRoot = 1e-12;


// Adapter for Eigen's MINPACK-style solvers.
template <class Problem>
struct ResidualFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const Problem* problem;
  int n_inputs;
  int n_values;

  int inputs() const { return n_inputs; }
  int values() const { return n_values; }
  int operator()(const InputType& x, ValueType& fvec) const {
    fvec = (*problem)(x);
    return 0;
  }
};

// Central differences with step 1e-6 |x| (1e-6 at x = 0).
constexpr double kDiffEpsfcn = 1e-12;

struct SolveResult {
  RVector theta;
  RVector residuals;
  int iterations{0};
  int nfev{0};
  bool converged{false};
  std::string status;
};

const char* status_name(Eigen::LevenbergMarquardtSpace::Status s) {
  using namespace Eigen::LevenbergMarquardtSpace;
  switch (s) {
    case NotStarted: return "NotStarted";
    case Running: return "Running";
    case ImproperInputParameters: return "ImproperInputParameters";
    case RelativeReductionTooSmall: return "RelativeReductionTooSmall";
    case RelativeErrorTooSmall: return "RelativeErrorTooSmall";
    case RelativeErrorAndReductionTooSmall: return "RelativeErrorAndReductionTooSmall";
    case CosinusTooSmall: return "CosinusTooSmall";
    case TooManyFunctionEvaluation: return "TooManyFunctionEvaluation";
    case FtolTooSmall: return "FtolTooSmall";
    case XtolTooSmall: return "XtolTooSmall";
    case GtolTooSmall: return "GtolTooSmall";
    case UserAsked: return "UserAsked";
  }
  return "Unknown";
}

// Minimises |objective|^2 and reports the raw residuals at the optimum.
template <class Objective, class Problem>
SolveResult solve(const Objective& objective, const Problem& problem, RVector theta, int n_values,
                  int max_iterations) {
  using Functor = ResidualFunctor<Objective>;
  Functor f{&objective, static_cast<int>(theta.size()), n_values};
  Eigen::NumericalDiff<Functor, Eigen::Central> diff(f, kDiffEpsfcn);
  Eigen::LevenbergMarquardt<decltype(diff)> lm(diff);
  lm.parameters.maxfev = max_iterations;
  lm.parameters.ftol = 1e-14;
  lm.parameters.xtol = 1e-14;
  lm.parameters.gtol = 0.0;

  SolveResult out;
  const auto status = lm.minimize(theta);
  out.status = status_name(status);
  using namespace Eigen::LevenbergMarquardtSpace;
  out.converged = status == RelativeReductionTooSmall || status == RelativeErrorTooSmall ||
                  status == RelativeErrorAndReductionTooSmall || status == CosinusTooSmall ||
                  status == FtolTooSmall || status == XtolTooSmall || status == GtolTooSmall;
  out.theta = theta;
  out.residuals = problem(theta);
  if (!out.residuals.allFinite()) out.converged = false;
  out.iterations = static_cast<int>(lm.iter);
  out.nfev = static_cast<int>(lm.nfev);
  return out;
}

// A polish that shrinks |theta| below this fraction has fallen into the trivial root.
constexpr double kCollapseFraction = 0.5;

// Refines a deflated solution on the unscaled objective. The scaling tilts the
// minimum towards larger |theta| whenever no exact root exists.
template <class Problem>
SolveResult polish(const Problem& problem, SolveResult start, int n_values, int max_iterations) {
  if (!problem.tracks_trial_betas()) return start;
  SolveResult refined = solve(problem, problem, start.theta, n_values, max_iterations);
  if (!refined.residuals.allFinite() || refined.theta.norm() < kCollapseFraction * start.theta.norm()) return start;
  return refined;
}

template <class Problem>
RVector gradient_of(const Problem& problem, const RVector& theta, int n_values) {
  using Functor = ResidualFunctor<Problem>;
  Functor f{&problem, static_cast<int>(theta.size()), n_values};
  Eigen::NumericalDiff<Functor, Eigen::Central> diff(f, kDiffEpsfcn);
  RMatrix jac(n_values, theta.size());
  diff.df(theta, jac);
  return 2.0 * jac.transpose() * problem(theta);
}

double rms_of(const RVector& r) { return r.size() ? std::sqrt(r.squaredNorm() / r.size()) : 0.0; }

Verdict decide(bool converged, double rms, const Thresholds& t) {
  if (!converged) return Verdict::Inconclusive;
  if (rms < t.pass_rms) return Verdict::Complete;
  if (rms > t.fail_rms) return Verdict::Incomplete;
  return Verdict::Inconclusive;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Multinomial resample of a sampled dataset's shots.
RVector resample(const RVector& prob, std::uint64_t shots, const CounterRng& rng) {
  RVector cdf(prob.size());
  double acc = 0.0;
  for (Index e = 0; e < prob.size(); ++e) cdf[e] = (acc += prob[e]);
  cdf /= acc;
  RVector counts = RVector::Zero(prob.size());
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform(s);
    const Index e = std::min<Index>(std::upper_bound(cdf.data(), cdf.data() + cdf.size(), u) - cdf.data(),
                                    prob.size() - 1);
    counts[e] += 1.0;
  }
  // Entries not redrawn keep a zero weight; log(0) terms drop out of the sum.
  return counts / static_cast<double>(shots);
}

}  // namespace

RVector residuals(const BetaVector& beta_trial, const RevealInput& input) {
  const QjeProblem problem(input);
  const BetaVector b = restricted_to(beta_trial, input.hypothesis);
  if (b.charge_count() != input.hypothesis.size() || beta_trial.charge_count() != input.hypothesis.size())
    throw DimensionMismatch("trial betas must cover exactly the hypothesised charges");
  return problem(BetaVector{beta_trial.beta, b.charge_betas}.as_vector());
}

RVector objective_gradient(const BetaVector& beta_trial, const RevealInput& input) {
  const QjeProblem problem(input);
  RVector theta = BetaVector::from_vector(beta_trial.as_vector(), beta_trial.charge_ids()).as_vector();
  if (beta_trial.charge_ids() != input.hypothesis)
    throw DimensionMismatch("trial betas must list the hypothesised charges in order");
  return gradient_of(problem, theta, static_cast<int>(problem.size()));
}

RevealReport fit_betas(const RevealInput& input, const BetaVector& initial_guess, const FitOptions& options) {
  QjeProblem problem(input);
  RVector theta(1 + input.hypothesis.size());
  theta[0] = initial_guess.beta;
  for (std::size_t k = 0; k < input.hypothesis.size(); ++k)
    theta[1 + static_cast<Index>(k)] =
        initial_guess.has_charge(input.hypothesis[k]) ? initial_guess.charge_beta(input.hypothesis[k]) : 0.0;

  const int n_values = static_cast<int>(problem.size());
  const Deflated<QjeProblem> objective{&problem, problem.tracks_trial_betas()};
  SolveResult fit = solve(objective, problem, off_origin(problem, theta), n_values, options.max_iterations);
  double best = objective(fit.theta).norm();
  for (int k = 1; k <= options.restarts && best > kExactRoot; ++k) {
    RVector start(theta.size());
    for (Index c = 0; c < start.size(); ++c) start[c] = radical_inverse(k, kPrimes[c % kPrimes.size()]) - 0.5;
    SolveResult trial = solve(objective, problem, off_origin(problem, start), n_values, options.max_iterations);
    const double value = objective(trial.theta).norm();
    if (trial.residuals.allFinite() && value < best) {
      best = value;
      fit = std::move(trial);
    }
  }
  fit = polish(problem, std::move(fit), n_values, options.max_iterations);

  RevealReport rep;
  rep.fitted_betas = BetaVector::from_vector(fit.theta, input.hypothesis);
  rep.residuals = fit.residuals;
  rep.rms_residual = rms_of(fit.residuals);
  rep.iterations = fit.iterations;
  rep.function_evaluations = fit.nfev;
  rep.converged = fit.converged;
  rep.solver_status = fit.status;
  rep.thresholds_used = options.thresholds;

  if (problem.sampled() && options.bootstrap_resamples > 0 && fit.converged) {
    const auto observed = problem.probabilities();
    const int b_count = options.bootstrap_resamples;
    std::vector<double> null_rms;
    std::vector<std::vector<double>> betas(static_cast<std::size_t>(fit.theta.size()));
    for (int b = 0; b < b_count; ++b) {
      std::vector<RVector> probs;
      for (std::size_t j = 0; j < observed.size(); ++j) {
        const auto& d = problem.dataset(j);
        if (d.shots == 0) {
          probs.push_back(observed[j]);
          continue;
        }
        const CounterRng rng(options.bootstrap_seed, static_cast<std::uint64_t>(b) * observed.size() + j);
        probs.push_back(resample(observed[j], d.shots, rng));
      }
      problem.set_probabilities(std::move(probs));
      const RVector r_b = problem(fit.theta);
      null_rms.push_back(rms_of(r_b - fit.residuals));
      const SolveResult refit =
          polish(problem, solve(objective, problem, fit.theta, n_values, options.max_iterations), n_values,
                 options.max_iterations);
      for (Index c = 0; c < fit.theta.size(); ++c) betas[static_cast<std::size_t>(c)].push_back(refit.theta[c]);
    }
    problem.set_probabilities(observed);

    BootstrapSummary s;
    s.resamples = b_count;
    s.beta_lo.resize(fit.theta.size());
    s.beta_hi.resize(fit.theta.size());
    for (Index c = 0; c < fit.theta.size(); ++c) {
      s.beta_lo[c] = quantile(betas[static_cast<std::size_t>(c)], 0.025);
      s.beta_hi[c] = quantile(betas[static_cast<std::size_t>(c)], 0.975);
    }
    s.null_rms_p95 = quantile(null_rms, 0.95);
    s.null_rms_p999 = quantile(null_rms, 0.999);
    rep.bootstrap = s;
    rep.thresholds_used = {s.null_rms_p95, s.null_rms_p999};
  }
  rep.verdict = decide(rep.converged, rep.rms_residual, rep.thresholds_used);
  return rep;
}

namespace {

struct KeyedAtom {
  std::vector<double> key;  // (w, delta q_k ...)
  double prob;
};

int compare_keys(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  for (std::size_t c = a.size(); c-- > 0;) {  // charges first, energy last
    if (a[c] < b[c] - tol) return -1;
    if (a[c] > b[c] + tol) return 1;
  }
  return 0;
}

std::vector<KeyedAtom> group_atoms(std::vector<KeyedAtom> pts, double tol) {
  std::sort(pts.begin(), pts.end(), [](const KeyedAtom& a, const KeyedAtom& b) {
    for (std::size_t c = a.key.size(); c-- > 0;)
      if (a.key[c] != b.key[c]) return a.key[c] < b.key[c];
    return false;
  });
  std::vector<KeyedAtom> out;
  for (const auto& p : pts) {
    if (!(p.prob > 0.0)) continue;
    if (!out.empty() && compare_keys(out.back().key, p.key, tol) == 0) {
      // chain merge; keep the probability-weighted key
      auto& back = out.back();
      for (std::size_t c = 0; c < p.key.size(); ++c)
        back.key[c] = (back.key[c] * back.prob + p.key[c] * p.prob) / (back.prob + p.prob);
      back.prob += p.prob;
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<KeyedAtom> keyed_atoms(const tpm::JointOutcomeDistribution& d, const std::vector<std::string>& ids,
                                   double tol) {
  std::vector<Index> ci, cf;
  for (const auto& id : ids) {
    ci.push_back(d.initial().charge_column(id));
    cf.push_back(d.final_labels().charge_column(id));
  }
  std::vector<KeyedAtom> pts;
  for (const auto& r : d.records()) {
    KeyedAtom a{{d.final_labels().energies[r.final] - d.initial().energies[r.initial]}, r.prob};
    for (std::size_t k = 0; k < ids.size(); ++k)
      a.key.push_back(d.final_labels().charge_values(r.final, cf[k]) - d.initial().charge_values(r.initial, ci[k]));
    pts.push_back(std::move(a));
  }
  return group_atoms(std::move(pts), tol);
}

struct AtomPair {
  std::vector<double> key;
  double p_fw;
  double p_bw;
  double weight;
};

// ln P_FW(x) - ln P_BW(-x) - x(theta) - c over matched atoms of all protocols.
class ConstancyProblem {
 public:
  ConstancyProblem(std::vector<AtomPair> pairs, std::vector<double> constant_terms)
      : pairs_(std::move(pairs)), constants_(std::move(constant_terms)) {}

  Index size() const { return static_cast<Index>(pairs_.size() + constants_.size()); }

  RVector operator()(const RVector& theta) const {
    RVector r(size());
    const Index n_beta = theta.size() - 1;
    const double c = theta[n_beta];
    for (std::size_t a = 0; a < pairs_.size(); ++a) {
      const auto& p = pairs_[a];
      double x = theta[0] * p.key[0];
      for (Index k = 1; k < n_beta; ++k) x += theta[k] * p.key[static_cast<std::size_t>(k)];
      r[static_cast<Index>(a)] = std::sqrt(p.weight) * (std::log(p.p_fw) - std::log(p.p_bw) - x - c);
    }
    for (std::size_t m = 0; m < constants_.size(); ++m) r[static_cast<Index>(pairs_.size() + m)] = constants_[m];
    return r;
  }

 private:
  std::vector<AtomPair> pairs_;
  std::vector<double> constants_;
};

}  // namespace

RevealReport charge_constancy_test(const RevealInput& input, const std::string& excluded_charge,
                                   const BetaVector& initial_guess, const FitOptions& options) {
  if (input.bw_datasets.size() != input.datasets.size())
    throw InvalidParameter("charge constancy test needs one backward dataset per forward dataset");
  if (input.datasets.size() < 2) throw InvalidParameter("charge constancy test needs at least 2 protocols");
  std::vector<std::string> ids;
  for (const auto& id : input.hypothesis)
    if (id != excluded_charge) ids.push_back(id);

  const double tol = tol::kWorkMerge;
  const double floor = tol::kTcrFloor;
  const double n_p = static_cast<double>(input.datasets.size());
  std::vector<AtomPair> pairs;
  std::vector<double> constants;
  for (std::size_t j = 0; j < input.datasets.size(); ++j) {
    const auto fw = keyed_atoms(input.datasets[j], ids, tol);
    auto bw = keyed_atoms(input.bw_datasets[j], ids, tol);
    for (auto& a : bw)
      for (auto& k : a.key) k = -k;
    bw = group_atoms(std::move(bw), tol);

    std::size_t i = 0, k = 0;
    auto mismatch = [&](double p) {
      if (p > floor) constants.push_back(std::sqrt(p / (2.0 * n_p)) * std::log(p / floor));
    };
    while (i < fw.size() || k < bw.size()) {
      int cmp = 0;
      if (i >= fw.size()) cmp = 1;
      else if (k >= bw.size()) cmp = -1;
      else cmp = compare_keys(fw[i].key, bw[k].key, 10.0 * tol);
      if (cmp == 0) {
        if (fw[i].prob > floor && bw[k].prob > floor)
          pairs.push_back({fw[i].key, fw[i].prob, bw[k].prob, (fw[i].prob + bw[k].prob) / (2.0 * n_p)});
        ++i;
        ++k;
      } else if (cmp < 0) {
        mismatch(fw[i++].prob);
      } else {
        mismatch(bw[k++].prob);
      }
    }
  }

  ConstancyProblem problem(std::move(pairs), std::move(constants));
  RVector theta(ids.size() + 2);
  theta[0] = initial_guess.beta;
  for (std::size_t k = 0; k < ids.size(); ++k)
    theta[1 + static_cast<Index>(k)] = initial_guess.has_charge(ids[k]) ? initial_guess.charge_beta(ids[k]) : 0.0;
  theta[theta.size() - 1] = 0.0;
  if (problem.size() < theta.size()) throw InvalidParameter("too few work atoms to test charge constancy");

  const SolveResult fit = solve(problem, problem, theta, static_cast<int>(problem.size()), options.max_iterations);
  RevealReport rep;
  rep.fitted_betas = BetaVector::from_vector(fit.theta.head(fit.theta.size() - 1), ids);
  rep.offset = fit.theta[fit.theta.size() - 1];
  rep.residuals = fit.residuals;
  // Residuals carry probability weights summing to one, so the norm is
  // already a weighted RMS.
  rep.rms_residual = fit.residuals.norm();
  rep.iterations = fit.iterations;
  rep.function_evaluations = fit.nfev;
  rep.converged = fit.converged;
  rep.solver_status = fit.status;
  rep.thresholds_used = options.thresholds;
  rep.verdict = decide(rep.converged, rep.rms_residual, rep.thresholds_used);
  return rep;
}

}  // namespace ggfr::reveal
