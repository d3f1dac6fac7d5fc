#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "ggfr/config.hpp"

using namespace ggfr::cli;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("empty document gives the seven-ion defaults") {
    const auto c = parse_config("");
    CHECK(c.scenario == Scenario::QjeSweep);
    CHECK(c.n_ions == 7);
    CHECK(c.omega_com == 3.0);
    CHECK(c.omega_at == 10.0);
    CHECK(c.n_max == 0);
    CHECK(c.g_ini == 2.0);
    REQUIRE(c.stages.size() == 1);
    CHECK(c.stages[0].g == 3.0);
    CHECK(c.stages[0].alpha == 0.5);
    CHECK(c.stages[0].swept());
    CHECK(c.g_fin == 1.0);
    CHECK(c.alpha_fin == 0.0);
    CHECK(c.beta == 0.1);
    CHECK(c.beta_q == 0.3);
    CHECK_FALSE(c.beta_prime.has_value());
    CHECK(c.t_fin_tau == doctest::Approx(2 * std::numbers::pi * 1.024));
    CHECK(c.t_min_tau == doctest::Approx(2 * std::numbers::pi * 1e-3));
    CHECK(c.t_max_tau == doctest::Approx(2 * std::numbers::pi * 100));
    CHECK(c.per_decade == 11);
  }

  TEST_CASE("range and key errors") {
    const auto alpha = error_of("alpha_ini = 1.5\n");
    CHECK(alpha.find("alpha") != std::string::npos);
    CHECK(alpha.find("line 1") != std::string::npos);
    const auto key = error_of("# comment\nbetaa = 0.1\n");
    CHECK(key.find("betaa") != std::string::npos);
    CHECK(key.find("line 2") != std::string::npos);
    CHECK(error_of("beta = 0.1\nbeta = 0.2\n").find("duplicate") != std::string::npos);
    CHECK(error_of("beta 0.1\n").find("key = value") != std::string::npos);
    CHECK(error_of("beta = fast\n").find("not a number") != std::string::npos);
    CHECK(error_of("n_ions = 2.5\n").find("not an integer") != std::string::npos);
    CHECK(error_of("scenario = plots\n").find("unknown scenario") != std::string::npos);
    CHECK(error_of("stages = 3:0.5:1\n").find("tfin") != std::string::npos);
    CHECK(error_of("hypothesis = Z\n").find("unknown charge") != std::string::npos);
    CHECK(error_of("time_unit = fortnight\n").find("time_unit") != std::string::npos);
    CHECK(error_of("scenario = reveal\nreveal_times = 1,2\n").find("3 protocols") != std::string::npos);
  }

  TEST_CASE("time units") {
    CHECK(to_tau(1.0, "us") == doctest::Approx(2 * std::numbers::pi));
    CHECK(to_tau(1.0, "ns") == doctest::Approx(2 * std::numbers::pi * 1e-3));
    CHECK(to_tau(1.0, "tau") == 1.0);
    const auto c = parse_config("time_unit = ns\nt_fin = 1024\nstages = 3:0.5:tfin, 1:0:5\n");
    CHECK(c.t_fin_tau == doctest::Approx(2 * std::numbers::pi * 1.024));
    CHECK(c.stages[1].duration_tau == doctest::Approx(2 * std::numbers::pi * 5e-3));
  }

  TEST_CASE("canonical text round trips") {
    const auto c = parse_config(
        "scenario = reveal  # trailing comment\nn_ions = 3\nn_max = 50\nbeta_prime = 0.2\nhypothesis = none\n"
        "reveal_times = 0.1, 1, 10\nstages = 2:0:0.5, 3:0.5:tfin\nseed = 18446744073709551615\n");
    CHECK(c.hypothesis.empty());
    CHECK(c.beta_prime == 0.2);
    CHECK(c.seed == 18446744073709551615ULL);
    const auto again = parse_config(c.to_text());
    CHECK(again.to_text() == c.to_text());
    CHECK(again.stages[0].duration_tau == c.stages[0].duration_tau);
    CHECK(again.reveal_times_tau == c.reveal_times_tau);
  }

  TEST_CASE("endpoint charges") {
    CHECK(endpoint_charges(0.0) == std::vector<std::string>{"Q"});
    CHECK(endpoint_charges(1.0) == std::vector<std::string>{"Qprime"});
    CHECK(endpoint_charges(0.5).empty());
  }
}
