// netar: network autoregression simulation, fitting and linearity tests.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "netar/dgp.hpp"
#include "netar/io.hpp"
#include "netar/lintest.hpp"
#include "netar/model.hpp"
#include "netar/network.hpp"
#include "netar/nuisance.hpp"
#include "netar/qmle.hpp"
#include "netar/study.hpp"

using nlohmann::json;

namespace {

netar::Domain domain_of(const std::string& family) {
  if (family == "pnar") return netar::Domain::Count;
  if (family == "nar") return netar::Domain::Continuous;
  throw CLI::ValidationError("--family", "expected pnar or nar");
}

std::vector<double> parse_csv_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) throw std::invalid_argument("bad number '" + cell + "' in '" + text + "'");
    out.push_back(v);
  }
  return out;
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

json fit_json(const netar::FitResult& fit) {
  json j{{"spec", netar::format_model_spec(fit.spec)},
         {"domain", std::string(netar::domain_name(fit.spec.domain))},
         {"method", netar::method_name(fit.method)},
         {"theta_hat", to_json(fit.theta_hat)},
         {"se", to_json(fit.se)},
         {"loglik", fit.loglik},
         {"converged", fit.converged},
         {"iterations", fit.iterations},
         {"jitter_applied", fit.jitter_applied},
         {"score_at_opt", to_json(fit.score_at_opt)},
         {"hessian", to_json(fit.hessian)},
         {"opg", to_json(fit.opg)},
         {"cov", to_json(fit.cov)}};
  if (fit.method == netar::FitMethod::OLS) j["sigma2"] = fit.sigma2;
  return j;
}

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

netar::Panel load_checked_panel(const std::string& path, netar::Domain domain, const netar::Network& net) {
  return netar::load_panel_csv(path, domain, net.size());
}

void warn_network(const netar::Network& net) {
  for (const auto& w : net.warnings()) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear network autoregression: simulate, fit and test linearity"};
  app.set_version_flag("--version", std::string(NETAR_VERSION));
  app.require_subcommand(1);

  // net gen / net info
  auto* net_cmd = app.add_subcommand("net", "Network generation and inspection");
  net_cmd->require_subcommand(1);
  std::string net_model = "sbm", net_out, net_in;
  int net_nodes = 0, net_blocks = 2;
  double net_p = -1.0;
  std::uint64_t net_seed = 0;
  auto* net_gen = net_cmd->add_subcommand("gen", "Draw an SBM or Erdos-Renyi digraph");
  net_gen->add_option("--model", net_model, "sbm or er")->check(CLI::IsMember({"sbm", "er"}));
  net_gen->add_option("--nodes", net_nodes, "Node count")->required()->check(CLI::PositiveNumber);
  net_gen->add_option("--blocks", net_blocks, "SBM block count")->check(CLI::PositiveNumber);
  net_gen->add_option("--p", net_p, "ER edge probability (default N^-0.3)");
  net_gen->add_option("--seed", net_seed, "Generator seed")->required();
  net_gen->add_option("-o,--output", net_out, "Edge-list file")->required();
  auto* net_info = net_cmd->add_subcommand("info", "Summarise an edge list");
  net_info->add_option("--net", net_in, "Edge-list file")->required()->check(CLI::ExistingFile);

  // sim
  std::string sim_family, sim_spec = "linear", sim_theta, sim_net, sim_out, sim_copula = "indep", sim_init;
  int sim_T = 0, sim_burn = 300;
  double sim_sigma = 1.0;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("sim", "Simulate a panel");
  sim->add_option("--family", sim_family, "pnar (counts) or nar (continuous)")->required()->check(CLI::IsMember({"pnar", "nar"}));
  sim->add_option("--spec", sim_spec, "linear | drift:gamma=G | stnar:alpha=A,gamma=G | tnar:a0=..,a1=..,a2=..,gamma=G");
  sim->add_option("--theta", sim_theta, "b0,b1,b2")->required();
  sim->add_option("--net", sim_net, "Edge-list file")->required()->check(CLI::ExistingFile);
  sim->add_option("--T", sim_T, "Number of kept time points")->required()->check(CLI::PositiveNumber);
  sim->add_option("--burn-in", sim_burn, "Discarded initial steps");
  sim->add_option("--copula", sim_copula, "indep | gaussian-ar1:RHO | gaussian-exch:RHO (pnar)");
  sim->add_option("--sigma", sim_sigma, "Error standard deviation (nar)");
  sim->add_option("--init", sim_init, "stationary | linear-stationary | fixed:V | zero | linear-mean (default by family)");
  sim->add_option("--seed", sim_seed, "Simulation seed")->required();
  sim->add_option("-o,--output", sim_out, "Panel CSV")->required();

  // fit
  std::string fit_family, fit_spec = "linear", fit_net, fit_panel, fit_theta0, fit_out;
  auto* fit = app.add_subcommand("fit", "Fit a model (OLS or Poisson QMLE)");
  fit->add_option("--family", fit_family, "pnar or nar")->required()->check(CLI::IsMember({"pnar", "nar"}));
  fit->add_option("--spec", fit_spec, "Model specification; nuisance gamma is held fixed");
  fit->add_option("--net", fit_net, "Edge-list file")->required()->check(CLI::ExistingFile);
  fit->add_option("--panel", fit_panel, "Panel CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--theta0", fit_theta0, "Starting b0,b1,b2");
  fit->add_option("-o,--output", fit_out, "fit.json (stdout if omitted)");

  // test score / test sup
  auto* test = app.add_subcommand("test", "Linearity tests");
  test->require_subcommand(1);
  std::string ts_family, ts_alt = "drift", ts_net, ts_panel, ts_out;
  auto* score = test->add_subcommand("score", "Quasi-score test against the intercept-drift alternative");
  score->add_option("--family", ts_family, "pnar or nar")->required()->check(CLI::IsMember({"pnar", "nar"}));
  score->add_option("--alt", ts_alt, "Alternative")->check(CLI::IsMember({"drift"}));
  score->add_option("--net", ts_net, "Edge-list file")->required()->check(CLI::ExistingFile);
  score->add_option("--panel", ts_panel, "Panel CSV")->required()->check(CLI::ExistingFile);
  score->add_option("-o,--output", ts_out, "test.json (stdout if omitted)");

  std::string sup_family, sup_alt, sup_grid = "auto", sup_method = "both", sup_agg = "sup", sup_net, sup_panel, sup_out;
  int sup_reps = 499;
  std::uint64_t sup_seed = 0;
  auto* sup = test->add_subcommand("sup", "Sup/ave LM test with a nuisance parameter");
  sup->add_option("--family", sup_family, "pnar or nar")->required()->check(CLI::IsMember({"pnar", "nar"}));
  sup->add_option("--alt", sup_alt, "stnar or tnar")->required()->check(CLI::IsMember({"stnar", "tnar"}));
  sup->add_option("--grid", sup_grid, "lo:hi:n or auto");
  sup->add_option("--method", sup_method, "davies, bootstrap or both")->check(CLI::IsMember({"davies", "bootstrap", "both"}));
  sup->add_option("--boot-reps", sup_reps, "Bootstrap replications J")->check(CLI::PositiveNumber);
  sup->add_option("--agg", sup_agg, "Bootstrap functional")->check(CLI::IsMember({"sup", "ave"}));
  sup->add_option("--seed", sup_seed, "Bootstrap seed");
  sup->add_option("--net", sup_net, "Edge-list file")->required()->check(CLI::ExistingFile);
  sup->add_option("--panel", sup_panel, "Panel CSV")->required()->check(CLI::ExistingFile);
  sup->add_option("-o,--output", sup_out, "result.json (stdout if omitted)");

  // mc run
  auto* mc = app.add_subcommand("mc", "Monte Carlo studies");
  mc->require_subcommand(1);
  std::string mc_config, mc_out, mc_qq, mc_format;
  int mc_threads = 0;
  auto* mc_run = mc->add_subcommand("run", "Run a study configuration");
  mc_run->add_option("--config", mc_config, "study.json")->required()->check(CLI::ExistingFile);
  mc_run->add_option("-o,--output", mc_out, "Report file (.csv or .json)")->required();
  mc_run->add_option("--format", mc_format, "csv or json (default from extension)")->check(CLI::IsMember({"csv", "json"}));
  mc_run->add_option("--qq-out", mc_qq, "Per-replication statistics CSV");
  mc_run->add_option("--threads", mc_threads, "Worker threads (overrides config)")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (net_gen->parsed()) {
      const netar::Network net = net_model == "sbm"
                                     ? netar::gen_sbm(net_nodes, net_blocks, net_seed)
                                     : netar::gen_er(net_nodes, net_p < 0.0 ? std::nullopt : std::optional<double>(net_p), net_seed);
      netar::save_edges(net_out, net);
      warn_network(net);
      const auto s = netar::network_summary(net);
      std::cerr << "nodes " << s.nodes << ", edges " << s.edges << ", density " << s.density << '\n';
    } else if (net_info->parsed()) {
      const netar::Network net = netar::load_edges(net_in);
      warn_network(net);
      const auto s = netar::network_summary(net);
      write_json({{"nodes", s.nodes},
                  {"edges", s.edges},
                  {"density", s.density},
                  {"median_out_degree", s.median_out_degree},
                  {"zero_out_degree", s.zero_out_degree}},
                 "");
    } else if (sim->parsed()) {
      const netar::Domain domain = domain_of(sim_family);
      const netar::Network net = netar::load_edges(sim_net);
      warn_network(net);
      const auto theta = parse_csv_doubles(sim_theta);
      const netar::ModelSpec spec = netar::parse_model_spec(sim_spec, theta, domain);
      netar::SimConfig cfg;
      cfg.T = sim_T;
      cfg.burn_in = sim_burn;
      cfg.seed = sim_seed;
      cfg.sigma = sim_sigma;
      if (sim_init == "stationary") {
        cfg.init = netar::InitKind::Stationary;
      } else if (sim_init == "linear-stationary") {
        cfg.init = netar::InitKind::LinearStationary;
      } else if (sim_init == "zero") {
        cfg.init = netar::InitKind::Zero;
      } else if (sim_init == "linear-mean") {
        cfg.init = netar::InitKind::LinearMean;
      } else if (sim_init.rfind("fixed:", 0) == 0) {
        cfg.init = netar::InitKind::Fixed;
        cfg.init_values = Eigen::VectorXd::Constant(net.size(), parse_csv_doubles(sim_init.substr(6)).at(0));
      } else if (!sim_init.empty()) {
        throw std::invalid_argument("unknown --init '" + sim_init + "'");
      }
      std::vector<std::string> warnings;
      const netar::Panel panel = domain == netar::Domain::Count
                                     ? netar::simulate_count(spec, net, netar::parse_copula(sim_copula), cfg, &warnings)
                                     : netar::simulate_gaussian(spec, net, cfg);
      if (domain == netar::Domain::Continuous) {
        const auto verdict = netar::stability_check(spec, &net);
        if (!verdict.sufficient_holds) warnings.push_back("stability: " + verdict.condition_name);
      }
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      netar::save_panel_csv(sim_out, panel);
    } else if (fit->parsed()) {
      const netar::Domain domain = domain_of(fit_family);
      const netar::Network net = netar::load_edges(fit_net);
      warn_network(net);
      const netar::LaggedPanel data(load_checked_panel(fit_panel, domain, net), net);
      std::vector<double> beta{1.0, 0.0, 0.0};
      if (!fit_theta0.empty()) beta = parse_csv_doubles(fit_theta0);
      netar::ModelSpec start = netar::parse_model_spec(fit_spec, beta, domain);
      netar::FitResult result;
      if (start.family == netar::Family::Linear && domain == netar::Domain::Continuous) {
        result = netar::ols_fit_linear(data);
      } else {
        if (fit_theta0.empty()) start = netar::default_start(data, start);
        result = netar::qmle_fit(data, start);
      }
      if (!result.converged) std::cerr << "warning: fit did not converge\n";
      write_json(fit_json(result), fit_out);
    } else if (score->parsed()) {
      const netar::Domain domain = domain_of(ts_family);
      const netar::Network net = netar::load_edges(ts_net);
      warn_network(net);
      const netar::LaggedPanel data(load_checked_panel(ts_panel, domain, net), net);
      const netar::TestResult r = netar::lm_test(data);
      write_json({{"statistic", r.statistic},
                  {"df", r.df},
                  {"p_value", r.p_value},
                  {"method", r.method},
                  {"alternative", ts_alt},
                  {"partial_score", to_json(r.partial_score)},
                  {"sigma", to_json(r.sigma_used)},
                  {"null_fit", fit_json(r.null_fit)}},
                 ts_out);
    } else if (sup->parsed()) {
      const netar::Domain domain = domain_of(sup_family);
      const netar::Family alt = sup_alt == "stnar" ? netar::Family::STNAR : netar::Family::TNAR;
      const netar::Network net = netar::load_edges(sup_net);
      warn_network(net);
      const netar::LaggedPanel data(load_checked_panel(sup_panel, domain, net), net);
      const auto explicit_grid = netar::parse_grid(sup_grid);
      const netar::GammaGrid grid = explicit_grid ? *explicit_grid : netar::default_grid(alt, data);
      netar::SupTestOptions opts;
      opts.davies = sup_method != "bootstrap";
      opts.bootstrap = sup_method != "davies";
      if (opts.davies && alt == netar::Family::TNAR) {
        if (sup_method == "davies") throw std::invalid_argument("the Davies bound is not available for tnar");
        opts.davies = false;
      }
      opts.boot_aggregate = netar::parse_aggregate(sup_agg);
      opts.replications = sup_reps;
      opts.seed = sup_seed;
      const auto null_fit = netar::fit_linear_null(data);
      const netar::ProfileTestResult r = netar::sup_test(data, null_fit, alt, grid, opts);
      json dropped = json::array();
      for (const auto& d : r.profile.dropped) {
        std::cerr << "warning: grid point " << d.gamma << " dropped (" << d.reason << ")\n";
        dropped.push_back({{"gamma", d.gamma}, {"reason", d.reason}});
      }
      json out{{"g_sup", r.g_sup},
               {"g_ave", r.g_ave},
               {"davies_p", r.davies_p ? json(*r.davies_p) : json(nullptr)},
               {"boot_p", r.boot_p ? json(*r.boot_p) : json(nullptr)},
               {"agg", sup_agg},
               {"J", r.J},
               {"V", r.V},
               {"k2", r.profile.k2},
               {"grid_source", netar::grid_source_name(grid.source)},
               {"grid", r.profile.grid},
               {"profile", r.profile.lm},
               {"dropped_points", dropped},
               {"seed", r.seed},
               {"null_fit", fit_json(null_fit)}};
      write_json(out, sup_out);
    } else if (mc_run->parsed()) {
      std::ifstream in(mc_config);
      netar::StudyConfig cfg = netar::study_from_json(json::parse(in));
      if (mc_threads > 0) cfg.threads = mc_threads;
      const auto results = netar::run_mc_study(cfg);
      std::string format = mc_format;
      if (format.empty()) format = mc_out.size() >= 5 && mc_out.substr(mc_out.size() - 5) == ".json" ? "json" : "csv";
      std::ofstream out(mc_out);
      if (!out) throw std::runtime_error("cannot open '" + mc_out + "' for writing");
      netar::emit_report(out, cfg, results, format == "json" ? netar::ReportFormat::Json : netar::ReportFormat::Csv);
      if (!mc_qq.empty()) {
        std::ofstream qq(mc_qq);
        if (!qq) throw std::runtime_error("cannot open '" + mc_qq + "' for writing");
        netar::emit_qq(qq, results);
      }
      int status = 0;
      for (const auto& r : results) {
        std::cerr << r.id << ": " << r.completed << " completed, " << r.failures << " failed, " << r.elapsed << " s\n";
        if (r.aborted) {
          std::cerr << "error: scenario " << r.id << " aborted (" << r.first_error << ")\n";
          status = 3;
        }
      }
      return status;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
