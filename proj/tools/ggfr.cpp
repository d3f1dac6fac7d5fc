// ggfr: batch runs of the generalised fluctuation relation scenarios.
//
//   ggfr [global flags] <scenario>
//
// Exit codes: 0 success, 2 config error, 3 resource refusal,
// 4 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ggfr/config.hpp"
#include "ggfr/scenarios.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;
constexpr int kExitNumerical = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace ggfr;
  CLI::App app{"Generalised quantum fluctuation relations for the trapped-ion Dicke model"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> mem_cap_gb;
  bool full_scale = false;
  bool print_config = false;

  app.add_option("--config", config_path, "key = value run configuration")->envname("GGFR_CONFIG");
  app.add_option("--out", out_dir, "output directory")->envname("GGFR_OUT");
  app.add_option("--seed", seed, "random seed")->envname("GGFR_SEED");
  app.add_option("--threads", threads, "worker threads")->envname("GGFR_THREADS");
  app.add_option("--mem-cap-gb", mem_cap_gb, "memory cap in GB")->envname("GGFR_MEM_CAP_GB");
  app.add_flag("--full-scale", full_scale, "allow dimensions above the reduced-scale limit")
      ->envname("GGFR_FULL_SCALE");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  const std::pair<cli::Scenario, const char*> scenarios[] = {
      {cli::Scenario::QjeSweep, "Jarzynski averages over a log grid of t_fin"},
      {cli::Scenario::TcrPanels, "forward/backward work PDFs and Tasaki-Crooks tables at t_fin"},
      {cli::Scenario::MarginalTcr, "Tasaki-Crooks check with one charge left out of the work"},
      {cli::Scenario::Reveal, "fit generalised temperatures over several protocols"},
      {cli::Scenario::ConvergenceSweep, "observables and truncation leakage versus n_max"},
      {cli::Scenario::Sample, "finite-shot measurement record at t_fin"},
  };
  std::vector<std::pair<CLI::App*, cli::Scenario>> subs;
  for (const auto& [s, help] : scenarios) subs.emplace_back(app.add_subcommand(cli::to_string(s), help), s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    cli::RunConfig cfg = config_path.empty() ? cli::parse_config("") : cli::load_config(config_path);
    for (const auto& [sub, s] : subs)
      if (sub->parsed()) cfg.scenario = s;
    if (out_dir) cfg.out_dir = *out_dir;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (mem_cap_gb) cfg.mem_cap_gb = *mem_cap_gb;
    if (full_scale) cfg.full_scale = true;
    cfg.validate();
    if (print_config) {
      std::cout << cfg.to_text();
      return kExitOk;
    }

    const auto res = cli::run_scenario(cfg);
    for (const auto& [name, content] : res.artifacts.files()) std::cout << cfg.out_dir << "/" << name << "\n";
    std::cout << cfg.out_dir << "/manifest.json\n";
    std::fprintf(stderr, "%s finished in %.2f s\n", cli::to_string(cfg.scenario), res.wall_seconds);
    return kExitOk;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cli::ResourceRefusal& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitResource;
  } catch (const TruncationUnconverged& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}
