#include "ggfr/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "ggfr/dicke.hpp"

namespace ggfr::cli {

namespace {

struct ScenarioName {
  Scenario scenario;
  const char* name;
};

constexpr ScenarioName kScenarios[] = {
    {Scenario::QjeSweep, "qje_sweep"},   {Scenario::TcrPanels, "tcr_panels"},
    {Scenario::MarginalTcr, "marginal_tcr"}, {Scenario::Reveal, "reveal"},
    {Scenario::ConvergenceSweep, "convergence_sweep"}, {Scenario::Sample, "sample"},
};

// key -> default, in document order
const std::vector<std::pair<std::string, std::string>>& defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"scenario", "qje_sweep"},
      {"n_ions", "7"},
      {"omega_com", "3"},
      {"omega_at", "10"},
      {"n_max", "auto"},
      {"g_ini", "2"},
      {"alpha_ini", "0"},
      {"stages", "3:0.5:tfin"},
      {"g_fin", "1"},
      {"alpha_fin", "0"},
      {"time_unit", "us"},
      {"t_fin", "1.024"},
      {"t_min", "0.001"},
      {"t_max", "100"},
      {"per_decade", "11"},
      {"reveal_times", "0.1,0.3,1,3,10"},
      {"beta", "0.1"},
      {"beta_q", "0.3"},
      {"beta_prime", "same"},
      {"beta_q_prime", "same"},
      {"excluded_charge", "Q"},
      {"hypothesis", "Q"},
      {"n_max_list", "40,60,80,100,120,140"},
      {"shots", "100000"},
      {"reveal_shots", "0"},
      {"bootstrap", "1000"},
      {"merge_tolerance", "1e-9"},
      {"out_dir", "out"},
      {"seed", "0"},
      {"threads", "1"},
      {"mem_cap_gb", "4"},
      {"full_scale", "false"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

struct Entry {
  std::string value;
  int line{0};
};

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  const std::string& raw(const std::string& key) const { return entries_.at(key).value; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(what, entries_.at(key).line, key);
  }

  double number(const std::string& key, const std::string& text) const {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) fail(key, "'" + text + "' is not a number");
    if (!std::isfinite(v)) fail(key, "value must be finite");
    return v;
  }
  double number(const std::string& key) const { return number(key, raw(key)); }

  template <class Int>
  Int integer(const std::string& key, const std::string& text) const {
    Int v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) fail(key, "'" + text + "' is not an integer");
    return v;
  }
  template <class Int>
  Int integer(const std::string& key) const {
    return integer<Int>(key, raw(key));
  }

  bool boolean(const std::string& key) const {
    const auto& v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, "'" + v + "' is not a boolean");
  }

  std::optional<double> number_or_same(const std::string& key) const {
    if (raw(key) == "same") return std::nullopt;
    return number(key);
  }

 private:
  std::map<std::string, Entry> entries_;
};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + f(xs[i]);
  return out;
}

bool known_charge(const std::string& id) {
  return id == dicke::kChargeQ || id == dicke::kChargeQPrime || id == dicke::kChargeParity;
}

}  // namespace

const char* to_string(Scenario s) {
  for (const auto& n : kScenarios)
    if (n.scenario == s) return n.name;
  return "?";
}

Scenario scenario_from_string(const std::string& name) {
  for (const auto& n : kScenarios)
    if (name == n.name) return n.scenario;
  throw ConfigError("unknown scenario '" + name + "'", 0, "scenario");
}

double to_tau(double value, const std::string& unit) {
  if (unit == "us") return 2.0 * std::numbers::pi * value;
  if (unit == "ns") return 2.0 * std::numbers::pi * value * 1e-3;
  if (unit == "tau") return value;
  throw ConfigError("unknown time unit '" + unit + "' (us, ns or tau)", 0, "time_unit");
}

std::vector<std::string> endpoint_charges(double alpha) {
  if (alpha == 0.0) return {dicke::kChargeQ};
  if (alpha == 1.0) return {dicke::kChargeQPrime};
  return {};
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, Entry> entries;
  for (const auto& [k, v] : defaults()) entries[k] = {v, 0};

  std::istringstream in(text);
  std::string line;
  std::map<std::string, int> seen;
  for (int number = 1; std::getline(in, line); ++number) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", number);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", number);
    if (!entries.count(key)) throw ConfigError("unknown key '" + key + "'", number, key);
    if (seen.count(key))
      throw ConfigError("duplicate key (first set on line " + std::to_string(seen[key]) + ")", number, key);
    seen[key] = number;
    entries[key] = {value, number};
  }

  const Reader r(std::move(entries));
  RunConfig c;
  try {
    c.scenario = scenario_from_string(r.raw("scenario"));
  } catch (const ConfigError& e) {
    r.fail("scenario", "unknown scenario '" + r.raw("scenario") + "'");
  }
  const std::string unit = r.raw("time_unit");
  if (unit != "us" && unit != "ns" && unit != "tau") r.fail("time_unit", "must be us, ns or tau");
  auto time = [&](const std::string& key, const std::string& text) { return to_tau(r.number(key, text), unit); };

  c.n_ions = r.integer<int>("n_ions");
  c.omega_com = r.number("omega_com");
  c.omega_at = r.number("omega_at");
  c.n_max = r.raw("n_max") == "auto" ? 0 : r.integer<int>("n_max");
  if (r.raw("n_max") != "auto" && c.n_max < 1) r.fail("n_max", "must be >= 1 or 'auto'");
  c.g_ini = r.number("g_ini");
  c.alpha_ini = r.number("alpha_ini");
  c.g_fin = r.number("g_fin");
  c.alpha_fin = r.number("alpha_fin");

  c.stages.clear();
  for (const auto& item : split(r.raw("stages"), ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3) r.fail("stages", "stage '" + item + "' is not g:alpha:duration");
    StageSpec s{r.number("stages", parts[0]), r.number("stages", parts[1]), -1.0};
    if (parts[2] != "tfin") {
      s.duration_tau = time("stages", parts[2]);
      if (s.duration_tau < 0.0) r.fail("stages", "stage durations must be >= 0");
    }
    c.stages.push_back(s);
  }

  c.t_fin_tau = time("t_fin", r.raw("t_fin"));
  c.t_min_tau = time("t_min", r.raw("t_min"));
  c.t_max_tau = time("t_max", r.raw("t_max"));
  c.per_decade = r.integer<int>("per_decade");
  c.reveal_times_tau.clear();
  for (const auto& t : split(r.raw("reveal_times"), ',')) c.reveal_times_tau.push_back(time("reveal_times", t));

  c.beta = r.number("beta");
  c.beta_q = r.number("beta_q");
  c.beta_prime = r.number_or_same("beta_prime");
  c.beta_q_prime = r.number_or_same("beta_q_prime");

  c.excluded_charge = r.raw("excluded_charge");
  c.hypothesis.clear();
  if (r.raw("hypothesis") != "none")
    for (const auto& id : split(r.raw("hypothesis"), ',')) c.hypothesis.push_back(id);
  c.n_max_list.clear();
  for (const auto& n : split(r.raw("n_max_list"), ',')) c.n_max_list.push_back(r.integer<int>("n_max_list", n));

  c.shots = r.integer<std::uint64_t>("shots");
  c.reveal_shots = r.integer<std::uint64_t>("reveal_shots");
  c.bootstrap = r.integer<int>("bootstrap");
  c.merge_tolerance = r.number("merge_tolerance");
  c.out_dir = r.raw("out_dir");
  c.seed = r.integer<std::uint64_t>("seed");
  c.threads = r.integer<int>("threads");
  c.mem_cap_gb = r.number("mem_cap_gb");
  c.full_scale = r.boolean("full_scale");

  // Re-raise validation failures with the offending line when the key was set.
  try {
    c.validate();
  } catch (const ConfigError& e) {
    if (!e.key.empty() && seen.count(e.key)) throw ConfigError(e.what(), seen[e.key]);
    throw;
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(what, 0, key);
  };
  require(n_ions >= 1, "n_ions", "must be >= 1");
  require(omega_com > 0.0, "omega_com", "must be > 0");
  require(omega_at > 0.0, "omega_at", "must be > 0");
  require(n_max >= 0, "n_max", "must be >= 1 or auto");
  require(g_ini >= 0.0, "g_ini", "must be >= 0");
  require(g_fin >= 0.0, "g_fin", "must be >= 0");
  require(alpha_ini >= 0.0 && alpha_ini <= 1.0, "alpha_ini", "alpha must lie in [0, 1]");
  require(alpha_fin >= 0.0 && alpha_fin <= 1.0, "alpha_fin", "alpha must lie in [0, 1]");
  require(!stages.empty(), "stages", "need at least one stage");
  int swept = 0;
  for (const auto& s : stages) {
    require(s.g >= 0.0, "stages", "stage g must be >= 0");
    require(s.alpha >= 0.0 && s.alpha <= 1.0, "stages", "alpha must lie in [0, 1]");
    swept += s.swept();
  }
  require(swept == 1, "stages", "exactly one stage must have duration 'tfin'");
  require(t_fin_tau >= 0.0, "t_fin", "must be >= 0");
  require(t_min_tau > 0.0 && t_max_tau > t_min_tau, "t_min", "need 0 < t_min < t_max");
  require(per_decade >= 1, "per_decade", "must be >= 1");
  for (double t : reveal_times_tau) require(t >= 0.0, "reveal_times", "times must be >= 0");
  require(beta_prime.value_or(beta) != 0.0 || beta != 0.0, "beta", "beta and beta' cannot both vanish");
  for (const auto& id : hypothesis) require(known_charge(id), "hypothesis", "unknown charge '" + id + "'");
  require(known_charge(excluded_charge), "excluded_charge", "unknown charge '" + excluded_charge + "'");
  for (int n : n_max_list) require(n >= 1, "n_max_list", "entries must be >= 1");
  require(bootstrap >= 0, "bootstrap", "must be >= 0");
  require(merge_tolerance > 0.0, "merge_tolerance", "must be > 0");
  require(threads >= 1, "threads", "must be >= 1");
  require(mem_cap_gb > 0.0, "mem_cap_gb", "must be > 0");

  switch (scenario) {
    case Scenario::Sample: require(shots >= 1, "shots", "sample needs shots >= 1"); break;
    case Scenario::Reveal:
      require(reveal_times_tau.size() >= hypothesis.size() + 2, "reveal_times",
              "need at least " + std::to_string(hypothesis.size() + 2) + " protocols");
      break;
    case Scenario::ConvergenceSweep: require(!n_max_list.empty(), "n_max_list", "must not be empty"); break;
    case Scenario::MarginalTcr:
      require(!endpoint_charges(alpha_ini).empty(), "alpha_ini", "marginal test needs a conserved initial charge");
      break;
    default: break;
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  auto same = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("same"); };
  o << "scenario = " << to_string(scenario) << '\n'
    << "n_ions = " << n_ions << '\n'
    << "omega_com = " << format_number(omega_com) << '\n'
    << "omega_at = " << format_number(omega_at) << '\n'
    << "n_max = " << (n_max == 0 ? std::string("auto") : std::to_string(n_max)) << '\n'
    << "g_ini = " << format_number(g_ini) << '\n'
    << "alpha_ini = " << format_number(alpha_ini) << '\n'
    << "stages = " << join(stages, [](const StageSpec& s) {
         return format_number(s.g) + ":" + format_number(s.alpha) + ":" +
                (s.swept() ? std::string("tfin") : format_number(s.duration_tau));
       }) << '\n'
    << "g_fin = " << format_number(g_fin) << '\n'
    << "alpha_fin = " << format_number(alpha_fin) << '\n'
    << "time_unit = tau\n"
    << "t_fin = " << format_number(t_fin_tau) << '\n'
    << "t_min = " << format_number(t_min_tau) << '\n'
    << "t_max = " << format_number(t_max_tau) << '\n'
    << "per_decade = " << per_decade << '\n'
    << "reveal_times = " << join(reveal_times_tau, format_number) << '\n'
    << "beta = " << format_number(beta) << '\n'
    << "beta_q = " << format_number(beta_q) << '\n'
    << "beta_prime = " << same(beta_prime) << '\n'
    << "beta_q_prime = " << same(beta_q_prime) << '\n'
    << "excluded_charge = " << excluded_charge << '\n'
    << "hypothesis = " << (hypothesis.empty() ? std::string("none") : join(hypothesis, [](const std::string& s) {
                             return s;
                           })) << '\n'
    << "n_max_list = " << join(n_max_list, [](int n) { return std::to_string(n); }) << '\n'
    << "shots = " << shots << '\n'
    << "reveal_shots = " << reveal_shots << '\n'
    << "bootstrap = " << bootstrap << '\n'
    << "merge_tolerance = " << format_number(merge_tolerance) << '\n'
    << "out_dir = " << out_dir << '\n'
    << "seed = " << seed << '\n'
    << "threads = " << threads << '\n'
    << "mem_cap_gb = " << format_number(mem_cap_gb) << '\n'
    << "full_scale = " << (full_scale ? "true" : "false") << '\n';
  return o.str();
}

}  // namespace ggfr::cli
