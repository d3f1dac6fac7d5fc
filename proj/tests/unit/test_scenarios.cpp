#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ggfr/errors.hpp"
#include "ggfr/output.hpp"
#include "ggfr/scenarios.hpp"

using namespace ggfr;
using namespace ggfr::cli;

namespace {

RunConfig small(Scenario s) {
  RunConfig c = parse_config(
      "n_ions = 2\nper_decade = 2\nt_min = 0.01\nt_max = 10\nshots = 20000\nbootstrap = 20\n"
      "reveal_times = 0.1,0.3,1,3,10\nn_max_list = 20,30\n");
  c.scenario = s;
  return c;
}

// Sum of the last column of every value,prob style table.
double probability_total(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  double total = 0.0;
  while (std::getline(in, line)) total += std::stod(line.substr(line.rfind(',') + 1));
  return total;
}

}  // namespace

TEST_SUITE("scenarios") {
  TEST_CASE("every scenario is deterministic") {
    for (auto s : {Scenario::QjeSweep, Scenario::TcrPanels, Scenario::MarginalTcr, Scenario::Reveal,
                   Scenario::ConvergenceSweep, Scenario::Sample}) {
      CAPTURE(to_string(s));
      const auto a = compute_scenario(small(s));
      const auto b = compute_scenario(small(s));
      CHECK(!a.artifacts.files().empty());
      CHECK(a.artifacts.files() == b.artifacts.files());
    }
  }

  TEST_CASE("probability columns are normalised") {
    const auto r = compute_scenario(small(Scenario::TcrPanels));
    for (const auto* name : {"gen_work_fw.csv", "gen_work_bw.csv", "std_work_fw.csv", "std_work_bw.csv",
                             "joint_fw.csv"})
      CHECK(std::abs(probability_total(r.artifacts.files().at(name)) - 1.0) < 1e-9);
    const auto s = compute_scenario(small(Scenario::Sample));
    CHECK(std::abs(probability_total(s.artifacts.files().at("joint_fw.csv")) - 1.0) < 1e-9);
  }

  TEST_CASE("threads do not change results") {
    auto c = small(Scenario::QjeSweep);
    const auto one = compute_scenario(c);
    c.threads = 3;
    CHECK(compute_scenario(c).artifacts.files() == one.artifacts.files());
  }

  TEST_CASE("reduced-scale sweep") {
    auto c = parse_config("n_ions = 3\nn_max = 120\n");
    const auto ex = build_experiment(c);
    CHECK(ex.dim() == 4 * 121);
    const auto pts = qje_sweep(ex, {0.5, 6.43, 100.0}, 1);
    for (const auto& p : pts) CHECK(std::abs(p.gen_avg * std::exp(ex.delta_f) - 1.0) < 1e-9);
    const auto r = compute_scenario(c);
    const auto& csv = r.artifacts.files().at("qje_sweep.csv");
    CHECK(csv.rfind("t_fin_tau,gen_avg,std_avg,exp_neg_dF,exp_neg_beta_dF\n", 0) == 0);
  }

  TEST_CASE("automatic n_max passes the guard") {
    const auto c = parse_config("n_ions = 3\nbeta_q = -0.1\n");
    const auto ex = build_experiment(c);
    CHECK(ex.leakage_ini < 1e-10);
    CHECK(ex.leakage_fin < 1e-10);
    auto tight = c;
    tight.n_max = choose_n_max(c) / 2;
    CHECK_THROWS_AS(build_experiment(tight), TruncationUnconverged);
  }

  TEST_CASE("resource refusals") {
    auto c = parse_config("n_ions = 3\nn_max = 100\n");
    c.mem_cap_gb = 1e-3;
    CHECK_THROWS_AS(compute_scenario(c), ResourceRefusal);
    auto big = parse_config("n_ions = 7\nn_max = 400\nmem_cap_gb = 100\n");
    CHECK_THROWS_AS(compute_scenario(big), ResourceRefusal);
    CHECK(memory_estimate_gb(6408) > 1.0);
  }

  TEST_CASE("unnormalisable ensembles are configuration errors") {
    CHECK_THROWS_AS(build_experiment(parse_config("n_ions = 1\nbeta_q = -0.5\n")), ConfigError);
  }

  TEST_CASE("output formatting") {
    CHECK(io::format_double(0.1) == "1.0000000000000001e-01");
    CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    io::Csv csv({"a", "b"});
    CHECK_THROWS_AS(csv.row({1.0}), DimensionMismatch);
  }

  TEST_CASE("parallel loop covers every index once") {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                      if (i == 5) throw Error("boom");
                    }),
                    Error);
  }
}
