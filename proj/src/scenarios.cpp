#include "ggfr/scenarios.hpp"

#include <openssl/opensslv.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "ggfr/qfr.hpp"
#include "ggfr/reveal.hpp"
#include "ggfr/tolerances.hpp"

namespace ggfr::cli {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kToolVersion = "0.1.0";
// Dimensions above this need --full-scale.
constexpr Index kFullScaleDim = 2500;

std::vector<Charge> charges_for(const std::vector<std::string>& ids, const dicke::DickeBasis& basis) {
  std::vector<Charge> out;
  for (const auto& id : ids) out.push_back({id, dicke::build_charge(id, basis)});
  return out;
}

BetaVector betas_for(double beta, double beta_charge, const std::vector<std::string>& ids) {
  BetaVector b{beta, {}};
  for (const auto& id : ids) b.charge_betas.emplace_back(id, beta_charge);
  return b;
}

void check_resources(const RunConfig& cfg, Index dim) {
  const double est = memory_estimate_gb(dim);
  if (est > cfg.mem_cap_gb) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "dimension %lld needs about %.2f GB, above the %.2f GB cap",
                  static_cast<long long>(dim), est, cfg.mem_cap_gb);
    throw ResourceRefusal(buf, est);
  }
  if (dim > kFullScaleDim && !cfg.full_scale)
    throw ResourceRefusal("dimension " + std::to_string(dim) + " exceeds " + std::to_string(kFullScaleDim) +
                              "; pass --full-scale to run it",
                          est);
}

Experiment build_at(const RunConfig& cfg, int n_max, bool enforce_guard) {
  Experiment ex;
  ex.config = cfg;
  ex.config.n_max = n_max;
  ex.model = dicke::DickeParams{cfg.n_ions, cfg.omega_com, cfg.omega_at, 0.0, 0.0, n_max};
  ex.model.validate();
  const dicke::DickeBasis basis(ex.model);
  check_resources(cfg, basis.size());

  const auto ids_ini = endpoint_charges(cfg.alpha_ini);
  const auto ids_fin = endpoint_charges(cfg.alpha_fin);
  ex.beta_ini = betas_for(cfg.beta, cfg.beta_q, ids_ini);
  ex.beta_fin = betas_for(cfg.beta_prime.value_or(cfg.beta), cfg.beta_q_prime.value_or(cfg.beta_q), ids_fin);
  for (const auto* b : {&ex.beta_ini, &ex.beta_fin})
    if (!(dicke::ladder_coefficient(*b, cfg.omega_com) > 0.0))
      throw ConfigError("the ensemble is not normalisable on the phonon ladder (beta omega_com + beta_q slope <= 0)",
                        0, "beta_q");

  ex.initial = std::make_shared<const JointEigenbasis>(joint_diagonalize(
      dicke::build_hamiltonian(ex.params(cfg.g_ini, cfg.alpha_ini)), charges_for(ids_ini, basis)));
  ex.final_basis = std::make_shared<const JointEigenbasis>(joint_diagonalize(
      dicke::build_hamiltonian(ex.params(cfg.g_fin, cfg.alpha_fin)), charges_for(ids_fin, basis)));

  const PhononLadder ladder{basis.phonon_numbers(), n_max};
  const std::optional<PhononLadder> guard = enforce_guard ? std::optional(ladder) : std::nullopt;
  ex.ens_ini = std::make_shared<const GgeEnsemble>(build_gge(ex.beta_ini, ex.initial, guard));
  ex.ens_fin = std::make_shared<const GgeEnsemble>(build_gge(ex.beta_fin, ex.final_basis, guard));
  ex.leakage_ini = truncation_leakage(*ex.initial, ex.ens_ini->probabilities(), ladder);
  ex.leakage_fin = truncation_leakage(*ex.final_basis, ex.ens_fin->probabilities(), ladder);

  ex.delta_f = qfr::delta_gen_free_energy(*ex.ens_ini, *ex.ens_fin);
  ex.beta_delta_f = qfr::delta_canonical_free_energy(ex.initial->energies, cfg.beta, ex.final_basis->energies,
                                                     ex.beta_fin.beta);
  return ex;
}

json betas_json(const BetaVector& b) {
  json j = {{"beta", b.beta}};
  for (const auto& [id, v] : b.charge_betas) j["beta_" + id] = v;
  return j;
}

json experiment_json(const Experiment& ex) {
  return {{"n_max", ex.model.n_max},
          {"dim", ex.dim()},
          {"beta_initial", betas_json(ex.beta_ini)},
          {"beta_final", betas_json(ex.beta_fin)},
          {"delta_gen_free_energy", ex.delta_f},
          {"beta_delta_canonical_free_energy", ex.beta_delta_f},
          {"truncation_leakage_initial", ex.leakage_ini},
          {"truncation_leakage_final", ex.leakage_fin}};
}

std::string dump(json j) {
  j["schema_version"] = kSchemaVersion;
  return j.dump(2) + "\n";
}

json tcr_json(const qfr::TcrReport& r) {
  return {{"passed", r.passed()},
          {"max_residual", r.max_residual},
          {"support_mismatches", r.support_mismatch.size()},
          {"matched_atoms", r.atoms.size()},
          {"delta_free_energy", r.delta_f},
          {"floor", r.floor},
          {"pass_threshold", r.pass_threshold}};
}

std::string tcr_csv(const qfr::TcrReport& r) {
  io::Csv csv({"value", "p_fw", "p_bw", "log_lhs", "log_rhs", "residual"});
  for (const auto& a : r.atoms) csv.row({a.value, a.p_fw, a.p_bw, a.log_lhs, a.log_rhs, a.residual});
  return csv.text();
}

struct Pair {
  tpm::JointOutcomeDistribution fw;
  tpm::JointOutcomeDistribution bw;
};

Pair forward_backward(const Experiment& ex, double t, tpm::SpectrumCache* cache) {
  const auto prot = ex.protocol(t);
  return {tpm::tpm_exact(*ex.ens_ini, prot, *ex.final_basis, cache),
          tpm::tpm_exact(*ex.ens_fin, prot.reversed(), *ex.initial, cache)};
}

void run_qje_sweep(const Experiment& ex, io::ArtifactSet& out) {
  const auto& cfg = ex.config;
  const auto times = tpm::log_grid(cfg.t_min_tau, cfg.t_max_tau, cfg.per_decade);
  const auto points = qje_sweep(ex, times, cfg.threads);
  const double rhs_gen = std::exp(-ex.delta_f);
  const double rhs_std = std::exp(-ex.beta_delta_f);
  io::Csv csv({"t_fin_tau", "gen_avg", "std_avg", "exp_neg_dF", "exp_neg_beta_dF"});
  double max_gen = 0.0, max_std = 0.0;
  for (const auto& p : points) {
    csv.row({p.t_fin_tau, p.gen_avg, p.std_avg, rhs_gen, rhs_std});
    max_gen = std::max(max_gen, std::abs(p.gen_avg / rhs_gen - 1.0));
    max_std = std::max(max_std, std::abs(p.std_avg / rhs_std - 1.0));
  }
  out.add("qje_sweep.csv", csv.text());
  json j = experiment_json(ex);
  j["scenario"] = "qje_sweep";
  j["points"] = points.size();
  j["max_relative_deviation_generalised"] = max_gen;
  j["max_relative_deviation_standard"] = max_std;
  out.add("qje_sweep.json", dump(j));
}

void run_tcr_panels(const Experiment& ex, io::ArtifactSet& out) {
  const auto& cfg = ex.config;
  tpm::SpectrumCache cache;
  const auto [fw, bw] = forward_backward(ex, cfg.t_fin_tau, &cache);
  const auto gen_fw = tpm::generalised_work_pdf(fw, ex.beta_ini, ex.beta_fin, cfg.merge_tolerance);
  const auto gen_bw = tpm::generalised_work_pdf(bw, ex.beta_fin, ex.beta_ini, cfg.merge_tolerance);
  const auto std_fw = tpm::standard_work_pdf(fw, cfg.merge_tolerance).scaled(cfg.beta);
  const auto std_bw = tpm::standard_work_pdf(bw, cfg.merge_tolerance).scaled(ex.beta_fin.beta);
  const auto gen = qfr::check_tcr(gen_fw, gen_bw, ex.delta_f);
  const auto std_r = qfr::check_tcr(std_fw, std_bw, ex.beta_delta_f);

  out.add("joint_fw.csv", io::joint_csv(fw));
  out.add("gen_work_fw.csv", io::distribution_csv(gen_fw));
  out.add("gen_work_bw.csv", io::distribution_csv(gen_bw));
  out.add("std_work_fw.csv", io::distribution_csv(std_fw));
  out.add("std_work_bw.csv", io::distribution_csv(std_bw));
  out.add("tcr_generalised.csv", tcr_csv(gen));
  out.add("tcr_standard.csv", tcr_csv(std_r));
  json j = experiment_json(ex);
  j["scenario"] = "tcr_panels";
  j["t_fin_tau"] = cfg.t_fin_tau;
  j["generalised"] = tcr_json(gen);
  j["standard"] = tcr_json(std_r);
  out.add("tcr_report.json", dump(j));
}

void run_marginal_tcr(const Experiment& ex, io::ArtifactSet& out) {
  const auto& cfg = ex.config;
  tpm::SpectrumCache cache;
  const auto [fw, bw] = forward_backward(ex, cfg.t_fin_tau, &cache);
  const auto m_fw =
      tpm::marginal_work_pdf(fw, cfg.excluded_charge, ex.beta_ini, ex.beta_fin, cfg.merge_tolerance);
  const auto m_bw =
      tpm::marginal_work_pdf(bw, cfg.excluded_charge, ex.beta_fin, ex.beta_ini, cfg.merge_tolerance);
  const auto rep = qfr::check_marginal_tcr(m_fw, m_bw, ex.delta_f);
  out.add("marginal_work_fw.csv", io::distribution_csv(m_fw));
  out.add("marginal_work_bw.csv", io::distribution_csv(m_bw));
  out.add("tcr_marginal.csv", tcr_csv(rep));
  json j = experiment_json(ex);
  j["scenario"] = "marginal_tcr";
  j["t_fin_tau"] = cfg.t_fin_tau;
  j["excluded_charge"] = cfg.excluded_charge;
  j["marginal"] = tcr_json(rep);
  out.add("marginal_tcr.json", dump(j));
}

void run_reveal(const Experiment& ex, io::ArtifactSet& out) {
  const auto& cfg = ex.config;
  const auto sweep = ex.sweep();
  const auto labels_fin = tpm::OutcomeLabels::of(*ex.final_basis);
  reveal::RevealInput input;
  input.hypothesis = cfg.hypothesis;
  input.model_initial = tpm::OutcomeLabels::of(*ex.initial);
  input.model_final = labels_fin;
  for (double t : cfg.reveal_times_tau) {
    const RMatrix pi = sweep.transitions(t);
    tpm::DistributionMetadata meta;
    meta.protocol_hash = ex.protocol(t).hash();
    input.datasets.push_back(cfg.reveal_shots > 0 ? tpm::sample_from_transitions(*ex.ens_ini, pi, labels_fin,
                                                                                  cfg.reveal_shots, cfg.seed, meta)
                                                  : tpm::tpm_from_transitions(*ex.ens_ini, pi, labels_fin, meta));
  }
  reveal::FitOptions opts;
  opts.bootstrap_resamples = cfg.bootstrap;
  opts.bootstrap_seed = cfg.seed ^ 0x5eedULL;
  const BetaVector guess = betas_for(0.0, 0.0, cfg.hypothesis);
  const auto rep = reveal::fit_betas(input, guess, opts);

  io::Csv csv({"t_fin_tau", "residual"});
  for (std::size_t j = 0; j < cfg.reveal_times_tau.size(); ++j)
    csv.row({cfg.reveal_times_tau[j], rep.residuals[static_cast<Index>(j)]});
  out.add("reveal_residuals.csv", csv.text());

  json j = experiment_json(ex);
  j["scenario"] = "reveal";
  j["hypothesis"] = cfg.hypothesis;
  j["shots"] = cfg.reveal_shots;
  j["fitted_betas"] = betas_json(rep.fitted_betas);
  j["rms_residual"] = rep.rms_residual;
  j["verdict"] = reveal::to_string(rep.verdict);
  j["converged"] = rep.converged;
  j["solver_status"] = rep.solver_status;
  j["iterations"] = rep.iterations;
  j["function_evaluations"] = rep.function_evaluations;
  j["thresholds"] = {{"pass_rms", rep.thresholds_used.pass_rms}, {"fail_rms", rep.thresholds_used.fail_rms}};
  if (rep.bootstrap) {
    const auto& b = *rep.bootstrap;
    j["bootstrap"] = {{"resamples", b.resamples},
                      {"beta_lo", std::vector<double>(b.beta_lo.data(), b.beta_lo.data() + b.beta_lo.size())},
                      {"beta_hi", std::vector<double>(b.beta_hi.data(), b.beta_hi.data() + b.beta_hi.size())},
                      {"null_rms_p95", b.null_rms_p95},
                      {"null_rms_p999", b.null_rms_p999}};
  }
  out.add("reveal_report.json", dump(j));
}

void run_convergence(const RunConfig& cfg, io::ArtifactSet& out) {
  io::Csv csv({"n_max", "dim", "leakage_initial", "leakage_final", "gen_avg", "exp_neg_dF", "std_avg",
               "exp_neg_beta_dF"});
  json rows = json::array();
  for (int n : cfg.n_max_list) {
    const Experiment ex = build_at(cfg, n, false);
    const auto p = qje_sweep(ex, {cfg.t_fin_tau}, 1).front();
    csv.row({static_cast<double>(n), static_cast<double>(ex.dim()), ex.leakage_ini, ex.leakage_fin, p.gen_avg,
             std::exp(-ex.delta_f), p.std_avg, std::exp(-ex.beta_delta_f)});
    rows.push_back({{"n_max", n}, {"guard_passed", std::max(ex.leakage_ini, ex.leakage_fin) <
                                                       tol::kTruncationLeakage}});
  }
  out.add("convergence.csv", csv.text());
  out.add("convergence.json", dump({{"scenario", "convergence_sweep"}, {"t_fin_tau", cfg.t_fin_tau}, {"rows", rows}}));
}

void run_sample(const Experiment& ex, io::ArtifactSet& out) {
  const auto& cfg = ex.config;
  const auto prot = ex.protocol(cfg.t_fin_tau);
  const auto jd = tpm::tpm_sample(*ex.ens_ini, prot, *ex.final_basis, cfg.shots, cfg.seed);
  const auto gen = tpm::generalised_work_pdf(jd, ex.beta_ini, ex.beta_fin, cfg.merge_tolerance);
  const auto qje = qfr::check_qje(gen, ex.delta_f);
  out.add("joint_fw.csv", io::joint_csv(jd));
  out.add("gen_work_fw.csv", io::distribution_csv(gen));
  json j = experiment_json(ex);
  j["scenario"] = "sample";
  j["t_fin_tau"] = cfg.t_fin_tau;
  j["shots"] = cfg.shots;
  j["seed"] = cfg.seed;
  j["gen_avg_estimate"] = qje.lhs;
  j["exp_neg_dF"] = qje.rhs;
  j["relative_error"] = qje.relative_error;
  out.add("sample_report.json", dump(j));
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

dicke::DickeParams Experiment::params(double g, double alpha) const {
  dicke::DickeParams p = model;
  p.g = g;
  p.alpha = alpha;
  return p;
}

tpm::QuenchProtocol Experiment::protocol(double t_fin_tau) const {
  tpm::QuenchProtocol prot;
  for (const auto& s : config.stages) prot.stages.push_back({params(s.g, s.alpha), s.swept() ? t_fin_tau : s.duration_tau});
  return prot;
}

tpm::StageSweep Experiment::sweep(tpm::SpectrumCache* cache) const {
  tpm::QuenchProtocol pre, post;
  const StageSpec* swept = nullptr;
  for (const auto& s : config.stages) {
    if (s.swept()) {
      swept = &s;
      continue;
    }
    (swept ? post : pre).stages.push_back({params(s.g, s.alpha), s.duration_tau});
  }
  auto unitary = [&](const tpm::QuenchProtocol& p) {
    return p.stages.empty() ? UnitaryOperator::identity(dim()) : tpm::protocol_unitary(p, cache);
  };
  const dicke::DickeParams sp = params(swept->g, swept->alpha);
  const auto spec = cache ? cache->get(sp) : std::make_shared<const SpectralData>(eigh(dicke::build_hamiltonian(sp)));
  return tpm::StageSweep(*initial, unitary(pre), *spec, unitary(post), *final_basis);
}

double memory_estimate_gb(Index dim) {
  // about ten dense complex dim x dim work arrays at peak
  return 10.0 * 16.0 * static_cast<double>(dim) * static_cast<double>(dim) / 1e9;
}

int choose_n_max(const RunConfig& cfg) {
  if (cfg.n_max > 0) return cfg.n_max;
  const auto ids_ini = endpoint_charges(cfg.alpha_ini);
  const auto ids_fin = endpoint_charges(cfg.alpha_fin);
  const double c = std::min(
      dicke::ladder_coefficient(betas_for(cfg.beta, cfg.beta_q, ids_ini), cfg.omega_com),
      dicke::ladder_coefficient(
          betas_for(cfg.beta_prime.value_or(cfg.beta), cfg.beta_q_prime.value_or(cfg.beta_q), ids_fin),
          cfg.omega_com));
  if (!(c > 0.0))
    throw ConfigError("the ensemble is not normalisable on the phonon ladder (beta omega_com + beta_q slope <= 0)",
                      0, "beta_q");
  // weight beyond the top 5% decays like exp(-c 0.95 n_max)
  int n = std::max(8, static_cast<int>(std::ceil(std::log(1e11) / (0.95 * c))));
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      build_at(cfg, n, true);
      return n;
    } catch (const TruncationUnconverged& e) {
      n = std::max(e.suggested_n_max, n + n / 8 + 1);
    }
  }
  throw TruncationUnconverged(1.0, n, 2 * n);
}

Experiment build_experiment(const RunConfig& cfg, bool enforce_guard) {
  cfg.validate();
  return build_at(cfg, choose_n_max(cfg), enforce_guard);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<QjePoint> qje_sweep(const Experiment& ex, const std::vector<double>& times_tau, int threads) {
  const auto sweep = ex.sweep();
  const auto labels_fin = tpm::OutcomeLabels::of(*ex.final_basis);
  const double merge = ex.config.merge_tolerance;
  std::vector<QjePoint> out(times_tau.size());
  parallel_for(times_tau.size(), threads, [&](std::size_t k) {
    const double t = times_tau[k];
    tpm::DistributionMetadata meta;
    meta.protocol_hash = ex.protocol(t).hash();
    const auto jd = tpm::tpm_from_transitions(*ex.ens_ini, sweep.transitions(t), labels_fin, meta);
    const auto gen = tpm::generalised_work_pdf(jd, ex.beta_ini, ex.beta_fin, merge);
    const auto stdw = tpm::standard_work_pdf(jd, merge).scaled(ex.config.beta);
    out[k] = {t, qfr::check_qje(gen, ex.delta_f).lhs, qfr::check_qje(stdw, ex.beta_delta_f).lhs};
  });
  return out;
}

RunResult compute_scenario(const RunConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  RunResult res;
  int n_max = 0;
  Index dim = 0;
  if (cfg.scenario == Scenario::ConvergenceSweep) {
    for (int n : cfg.n_max_list) check_resources(cfg, dicke::DickeBasis(cfg.n_ions, n).size());
    run_convergence(cfg, res.artifacts);
  } else {
    const Experiment ex = build_experiment(cfg);
    n_max = ex.model.n_max;
    dim = ex.dim();
    switch (cfg.scenario) {
      case Scenario::QjeSweep: run_qje_sweep(ex, res.artifacts); break;
      case Scenario::TcrPanels: run_tcr_panels(ex, res.artifacts); break;
      case Scenario::MarginalTcr: run_marginal_tcr(ex, res.artifacts); break;
      case Scenario::Reveal: run_reveal(ex, res.artifacts); break;
      case Scenario::Sample: run_sample(ex, res.artifacts); break;
      case Scenario::ConvergenceSweep: break;
    }
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json files = json::array();
  for (const auto& [name, content] : res.artifacts.files())
    files.push_back({{"name", name}, {"bytes", content.size()}, {"sha256", io::sha256_hex(content)}});
  json m = {{"tool", "ggfr"},
            {"version", kToolVersion},
            {"scenario", to_string(cfg.scenario)},
            {"seed", cfg.seed},
            {"config", cfg.to_text()},
            {"config_sha256", io::sha256_hex(cfg.to_text())},
            {"n_max", n_max},
            {"dim", dim},
            {"versions",
             {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"compiler", __VERSION__},
              {"openssl", OPENSSL_VERSION_TEXT}}},
            {"files", files},
            {"wall_seconds", res.wall_seconds},
            {"finished_utc", utc_now()}};
  res.manifest = dump(m);
  return res;
}

RunResult run_scenario(const RunConfig& cfg) {
  RunResult res = compute_scenario(cfg);
  res.artifacts.write(cfg.out_dir);
  io::ArtifactSet manifest;
  manifest.add("manifest.json", res.manifest);
  manifest.write(cfg.out_dir);
  return res;
}

}  // namespace ggfr::cli
