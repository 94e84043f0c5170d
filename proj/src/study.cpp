#include "netar/study.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "netar/lintest.hpp"
#include "netar/qmle.hpp"

namespace netar {

std::string test_kind_name(TestKind k) {
  switch (k) {
    case TestKind::Chi2: return "chi2";
    case TestKind::Davies: return "davies";
    case TestKind::Bootstrap: return "bootstrap";
  }
  return "?";
}

namespace {

Family parse_family(const std::string& s) {
  if (s == "linear") return Family::Linear;
  if (s == "drift") return Family::InterceptDrift;
  if (s == "stnar") return Family::STNAR;
  if (s == "tnar") return Family::TNAR;
  throw std::invalid_argument("unknown family '" + s + "'");
}

Domain parse_domain(const std::string& s) {
  if (s == "count") return Domain::Count;
  if (s == "continuous" || s == "cont") return Domain::Continuous;
  throw std::invalid_argument("unknown domain '" + s + "'");
}

TestKind parse_test(const std::string& s) {
  if (s == "chi2") return TestKind::Chi2;
  if (s == "davies") return TestKind::Davies;
  if (s == "bootstrap") return TestKind::Bootstrap;
  throw std::invalid_argument("unknown test '" + s + "'");
}

std::string agg_name(Aggregate g) { return g == Aggregate::Sup ? "sup" : "ave"; }

}  // namespace

ModelSpec Scenario::dgp_spec() const {
  if (theta.size() != 3) throw std::invalid_argument("scenario " + id + ": theta needs b0,b1,b2");
  std::ostringstream text;
  text.precision(17);
  text << family_name(family);
  const char* sep = ":";
  for (const auto& [key, value] : theta2) {
    text << sep << key << '=' << value;
    sep = ",";
  }
  return parse_model_spec(text.str(), theta, domain);
}

void Scenario::validate() const {
  const ModelSpec spec = dgp_spec();
  if (N < 1 || T < 3) throw std::invalid_argument("scenario " + id + ": need N >= 1 and T >= 3");
  if (S < 1) throw std::invalid_argument("scenario " + id + ": S must be at least 1");
  if (burn_in < 0) throw std::invalid_argument("scenario " + id + ": burn_in must be nonnegative");
  if (init != "default" && init != "linear-stationary")
    throw std::invalid_argument("scenario " + id + ": init must be default or linear-stationary");
  if (init == "linear-stationary" && domain != Domain::Continuous)
    throw std::invalid_argument("scenario " + id + ": linear-stationary init needs a continuous domain");
  if (levels.empty()) throw std::invalid_argument("scenario " + id + ": no levels");
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (!(levels[k] > 0.0 && levels[k] < 1.0)) throw std::invalid_argument("scenario " + id + ": level outside (0,1)");
    if (k > 0 && !(levels[k] < levels[k - 1]))
      throw std::invalid_argument("scenario " + id + ": levels must be sorted descending");
  }
  if (network.model != "sbm" && network.model != "er")
    throw std::invalid_argument("scenario " + id + ": network model must be sbm or er");
  if (test != TestKind::Chi2) {
    nuisance_block_size(alternative);
    if (test == TestKind::Davies && alternative != Family::STNAR)
      throw std::invalid_argument("scenario " + id + ": the Davies bound needs the stnar alternative");
    if (test == TestKind::Bootstrap && J < 1) throw std::invalid_argument("scenario " + id + ": J must be positive");
    parse_grid(grid);
  }
  if (domain == Domain::Continuous && !(sigma > 0.0))
    throw std::invalid_argument("scenario " + id + ": sigma must be positive");
  (void)spec;
}

void StudyConfig::validate() const {
  if (threads < 1) throw std::invalid_argument("study: threads must be positive");
  if (scenarios.empty()) throw std::invalid_argument("study: no scenarios");
  for (const auto& s : scenarios) s.validate();
}

std::optional<GammaGrid> parse_grid(const std::string& text) {
  if (text == "auto") return std::nullopt;
  const auto a = text.find(':');
  const auto b = text.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) throw std::invalid_argument("grid must be lo:hi:n or auto");
  try {
    std::size_t used = 0;
    const std::string lo_s = text.substr(0, a), hi_s = text.substr(a + 1, b - a - 1), n_s = text.substr(b + 1);
    const double lo = std::stod(lo_s, &used);
    if (used != lo_s.size()) throw std::invalid_argument("lo");
    const double hi = std::stod(hi_s, &used);
    if (used != hi_s.size()) throw std::invalid_argument("hi");
    const int n = std::stoi(n_s, &used);
    if (used != n_s.size()) throw std::invalid_argument("n");
    return linspace_grid(lo, hi, n);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("grid must be lo:hi:n or auto, got '" + text + "'");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("grid must be lo:hi:n or auto, got '" + text + "'");
  }
}

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.id = j.value("id", std::string("scenario"));
  if (j.contains("network")) {
    const auto& n = j.at("network");
    s.network.model = n.value("model", std::string("sbm"));
    s.network.blocks = n.value("blocks", 2);
    if (n.contains("p") && !n.at("p").is_null()) s.network.p = n.at("p").get<double>();
  }
  s.N = j.value("N", s.N);
  s.T = j.value("T", s.T);
  s.domain = parse_domain(j.value("domain", std::string("continuous")));
  s.family = parse_family(j.value("family", std::string("linear")));
  if (j.contains("theta")) s.theta = j.at("theta").get<std::vector<double>>();
  if (j.contains("theta2")) s.theta2 = j.at("theta2").get<std::map<std::string, double>>();
  s.copula = parse_copula(j.value("copula", std::string("indep")));
  s.sigma = j.value("sigma", s.sigma);
  s.burn_in = j.value("burn_in", s.burn_in);
  s.init = j.value("init", s.init);
  s.S = j.value("S", s.S);
  s.test = parse_test(j.value("test", std::string("chi2")));
  s.alternative = parse_family(j.value("alternative", std::string("stnar")));
  s.grid = j.value("grid", s.grid);
  s.J = j.value("J", s.J);
  s.agg = parse_aggregate(j.value("agg", std::string("sup")));
  if (j.contains("levels")) s.levels = j.at("levels").get<std::vector<double>>();
  if (j.contains("base_seed")) s.base_seed = j.at("base_seed").get<std::uint64_t>();
  s.redraw_network = j.value("redraw_network", false);
  return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json net{{"model", s.network.model}, {"blocks", s.network.blocks}};
  net["p"] = s.network.p ? nlohmann::json(*s.network.p) : nlohmann::json(nullptr);
  nlohmann::json j{{"id", s.id},
                   {"network", net},
                   {"N", s.N},
                   {"T", s.T},
                   {"domain", std::string(domain_name(s.domain))},
                   {"family", std::string(family_name(s.family))},
                   {"theta", s.theta},
                   {"theta2", s.theta2},
                   {"copula", format_copula(s.copula)},
                   {"sigma", s.sigma},
                   {"burn_in", s.burn_in},
                   {"init", s.init},
                   {"S", s.S},
                   {"test", test_kind_name(s.test)},
                   {"alternative", std::string(family_name(s.alternative))},
                   {"grid", s.grid},
                   {"J", s.J},
                   {"agg", agg_name(s.agg)},
                   {"levels", s.levels},
                   {"redraw_network", s.redraw_network}};
  if (s.base_seed) j["base_seed"] = *s.base_seed;
  return j;
}

StudyConfig study_from_json(const nlohmann::json& j) {
  StudyConfig cfg;
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  cfg.threads = j.value("threads", cfg.threads);
  for (const auto& s : j.at("scenarios")) cfg.scenarios.push_back(scenario_from_json(s));
  cfg.validate();
  return cfg;
}

nlohmann::json study_to_json(const StudyConfig& cfg) {
  nlohmann::json scenarios = nlohmann::json::array();
  for (const auto& s : cfg.scenarios) scenarios.push_back(scenario_to_json(s));
  return {{"base_seed", cfg.base_seed}, {"threads", cfg.threads}, {"scenarios", scenarios}};
}

namespace {

constexpr std::uint64_t kSimStream = 0;
constexpr std::uint64_t kNetworkStream = 1;
constexpr std::uint64_t kBootStream = 2;

Network draw_network(const NetworkDesign& d, int n, std::uint64_t seed) {
  if (d.model == "sbm") return gen_sbm(n, d.blocks, seed);
  return gen_er(n, d.p, seed);
}

}  // namespace

std::pair<double, double> run_replication(const Scenario& sc, const Network& net, const GaussianLaw* law,
                                          std::uint64_t seed) {
  const ModelSpec spec = sc.dgp_spec();
  SimConfig cfg;
  cfg.T = sc.T;
  cfg.burn_in = sc.burn_in;
  cfg.sigma = sc.sigma;
  cfg.seed = derive_seed(seed, kSimStream);
  if (sc.init == "linear-stationary") cfg.init = InitKind::LinearStationary;
  const Panel panel = sc.domain == Domain::Count ? simulate_count(spec, net, sc.copula, cfg)
                                                 : simulate_gaussian(spec, net, cfg, law);
  const LaggedPanel data(panel, net);
  const FitResult null_fit = fit_linear_null(data);
  if (!null_fit.converged) throw std::runtime_error("null fit did not converge");

  if (sc.test == TestKind::Chi2) {
    const TestResult r = lm_test(data, null_fit);
    return {r.statistic, r.p_value};
  }
  const auto explicit_grid = parse_grid(sc.grid);
  const GammaGrid grid = explicit_grid ? *explicit_grid : default_grid(sc.alternative, data);
  SupTestOptions opts;
  opts.davies = sc.test == TestKind::Davies;
  opts.bootstrap = sc.test == TestKind::Bootstrap;
  opts.boot_aggregate = sc.agg;
  opts.replications = sc.J;
  opts.seed = derive_seed(seed, kBootStream);
  const ProfileTestResult r = sup_test(data, null_fit, sc.alternative, grid, opts);
  if (opts.davies) return {r.g_sup, r.davies_p.value()};
  return {sc.agg == Aggregate::Sup ? r.g_sup : r.g_ave, r.boot_p.value()};
}

ScenarioResult run_scenario(const Scenario& sc, std::uint64_t base_seed, std::size_t index, int threads) {
  sc.validate();
  const auto start = std::chrono::steady_clock::now();
  ScenarioResult out;
  out.id = sc.id;
  out.seed = sc.base_seed.value_or(base_seed);
  const std::uint64_t scenario_key = derive_seed(out.seed, index);

  const ModelSpec spec = sc.dgp_spec();
  const bool stationary_start =
      sc.domain == Domain::Continuous && (spec.family == Family::Linear || sc.init == "linear-stationary");
  std::optional<Network> shared_net;
  std::optional<GaussianLaw> shared_law;
  if (!sc.redraw_network) {
    shared_net = draw_network(sc.network, sc.N, derive_seed(scenario_key, std::numeric_limits<std::uint64_t>::max()));
    if (stationary_start) shared_law = prepare_stationary_law(spec.linear_part(), *shared_net, sc.sigma);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.statistics.assign(sc.S, nan);
  out.p_values.assign(sc.S, nan);
  std::vector<std::string> errors(sc.S);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < sc.S; r = next++) {
      const std::uint64_t seed = replication_seed(out.seed, index, static_cast<std::uint64_t>(r));
      try {
        if (shared_net) {
          const auto [stat, p] = run_replication(sc, *shared_net, shared_law ? &*shared_law : nullptr, seed);
          out.statistics[r] = stat;
          out.p_values[r] = p;
        } else {
          const Network net = draw_network(sc.network, sc.N, derive_seed(seed, kNetworkStream));
          std::optional<GaussianLaw> law;
          if (stationary_start) law = prepare_stationary_law(spec.linear_part(), net, sc.sigma);
          const auto [stat, p] = run_replication(sc, net, law ? &*law : nullptr, seed);
          out.statistics[r] = stat;
          out.p_values[r] = p;
        }
      } catch (const std::exception& e) {
        errors[r] = e.what();
        if (errors[r].empty()) errors[r] = "unknown failure";
      }
    }
  };
  const int workers = std::max(1, std::min(threads, sc.S));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (int r = 0; r < sc.S; ++r) {
    if (errors[r].empty()) {
      ++out.completed;
    } else {
      ++out.failures;
      if (out.first_error.empty()) out.first_error = "replication " + std::to_string(r) + ": " + errors[r];
    }
  }
  out.aborted = out.failures > 0.01 * sc.S;
  out.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out.aborted || out.completed == 0) {
    out.aborted = true;
    return out;
  }
  for (double level : sc.levels) {
    int rejections = 0;
    for (int r = 0; r < sc.S; ++r)
      if (errors[r].empty() && out.p_values[r] <= level) ++rejections;
    StudyRow row;
    row.scenario = sc.id;
    row.level = level;
    row.rejection_rate = static_cast<double>(rejections) / out.completed;
    row.mc_se = std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / out.completed);
    row.elapsed = out.elapsed;
    out.rows.push_back(row);
  }
  return out;
}

std::vector<ScenarioResult> run_mc_study(const StudyConfig& cfg) {
  cfg.validate();
  std::vector<ScenarioResult> out;
  for (std::size_t s = 0; s < cfg.scenarios.size(); ++s)
    out.push_back(run_scenario(cfg.scenarios[s], cfg.base_seed, s, cfg.threads));
  return out;
}

void emit_report(std::ostream& out, const StudyConfig& cfg, const std::vector<ScenarioResult>& results,
                 ReportFormat format) {
  if (results.size() != cfg.scenarios.size()) throw std::invalid_argument("emit_report: results do not match config");
  if (format == ReportFormat::Csv) {
    out << "scenario,level,rejection_rate,mc_se,completed,failures,seed,elapsed_s\n";
    char buf[256];
    for (const auto& r : results) {
      for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof buf, "%.4f,%.6f,%.6f,%d,%d,%llu,%.3f", row.level, row.rejection_rate, row.mc_se,
                      r.completed, r.failures, static_cast<unsigned long long>(r.seed), row.elapsed);
        out << row.scenario << ',' << buf << '\n';
      }
    }
    return;
  }
  nlohmann::json scenarios = nlohmann::json::array();
  for (std::size_t s = 0; s < results.size(); ++s) {
    const auto& r = results[s];
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
      rows.push_back({{"level", row.level}, {"rejection_rate", row.rejection_rate}, {"mc_se", row.mc_se}});
    scenarios.push_back({{"id", r.id},
                         {"config", scenario_to_json(cfg.scenarios[s])},
                         {"seed", r.seed},
                         {"completed", r.completed},
                         {"failures", r.failures},
                         {"aborted", r.aborted},
                         {"first_error", r.first_error},
                         {"elapsed_s", r.elapsed},
                         {"rows", rows}});
  }
  nlohmann::json doc{{"tool", "netar"}, {"version", NETAR_VERSION}, {"base_seed", cfg.base_seed},
                     {"scenarios", scenarios}};
  out << doc.dump(2) << '\n';
}

void emit_qq(std::ostream& out, const std::vector<ScenarioResult>& results) {
  out << "scenario,replication,statistic,p_value\n";
  char buf[96];
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.statistics.size(); ++k) {
      if (std::isnan(r.statistics[k])) continue;
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g", k, r.statistics[k], r.p_values[k]);
      out << r.id << ',' << buf << '\n';
    }
  }
}

}  // namespace netar
