#include <sstream>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "netar/dgp.hpp"
#include "netar/io.hpp"
#include "netar/lintest.hpp"
#include "netar/nuisance.hpp"
#include "netar/qmle.hpp"
#include "netar/study.hpp"

namespace py = pybind11;
using namespace netar;

namespace {

Domain domain_of(const std::string& family) {
  if (family == "pnar") return Domain::Count;
  if (family == "nar") return Domain::Continuous;
  throw std::invalid_argument("family must be pnar or nar, got '" + family + "'");
}

InitKind init_of(const std::string& text) {
  if (text.empty() || text == "auto") return InitKind::Auto;
  if (text == "stationary") return InitKind::Stationary;
  if (text == "linear-stationary") return InitKind::LinearStationary;
  if (text == "zero") return InitKind::Zero;
  if (text == "linear-mean") return InitKind::LinearMean;
  throw std::invalid_argument("unknown init '" + text + "'");
}

Panel panel_of(const Eigen::MatrixXd& y, Domain domain, const Network& net) {
  Panel p;
  p.values = y;
  p.domain = domain;
  p.labels = default_labels(static_cast<int>(y.rows()));
  p.validate();
  if (p.nodes() != net.size()) throw std::invalid_argument("panel rows do not match the network size");
  return p;
}

py::dict fit_dict(const FitResult& fit) {
  py::dict d;
  d["spec"] = format_model_spec(fit.spec);
  d["method"] = method_name(fit.method);
  d["theta_hat"] = fit.theta_hat;
  d["se"] = fit.se;
  d["cov"] = fit.cov;
  d["loglik"] = fit.loglik;
  d["converged"] = fit.converged;
  d["iterations"] = fit.iterations;
  if (fit.method == FitMethod::OLS) d["sigma2"] = fit.sigma2;
  return d;
}

nlohmann::json to_nlohmann(const py::object& obj) {
  const std::string text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

py::object from_nlohmann(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_netar, m) {
  m.doc() = "Network autoregression: simulation, estimation and linearity tests";
  m.attr("__version__") = NETAR_VERSION;

  py::class_<Network>(m, "Network")
      .def_property_readonly("size", &Network::size)
      .def_property_readonly("edge_count", &Network::edge_count)
      .def("edges", &Network::edges)
      .def("dense_w", &Network::dense_w)
      .def("zero_degree_nodes", &Network::zero_degree_nodes)
      .def_property_readonly("warnings", &Network::warnings)
      .def("__repr__", [](const Network& n) {
        return "<Network nodes=" + std::to_string(n.size()) + " edges=" + std::to_string(n.edge_count()) + ">";
      });

  m.def(
      "network_from_edges",
      [](const EdgeList& edges, int n, bool drop_self_loops) {
        NormalizeOptions opts;
        opts.drop_self_loops = drop_self_loops;
        return row_normalize(edges, n, opts);
      },
      py::arg("edges"), py::arg("n"), py::arg("drop_self_loops") = false, "Row-normalised network from directed edges.");
  m.def("gen_sbm", &gen_sbm, py::arg("n"), py::arg("blocks"), py::arg("seed"));
  m.def("gen_er", &gen_er, py::arg("n"), py::arg("p") = std::nullopt, py::arg("seed"));
  m.def(
      "load_edges", [](const std::string& path) { return load_edges(path); }, py::arg("path"));
  m.def("save_edges", &save_edges, py::arg("path"), py::arg("net"));

  m.def(
      "simulate",
      [](const std::string& family, const std::vector<double>& theta, const Network& net, int T, const std::string& spec,
         int burn_in, const std::string& copula, double sigma, const std::string& init, std::uint64_t seed) {
        const Domain domain = domain_of(family);
        const ModelSpec model = parse_model_spec(spec, theta, domain);
        SimConfig cfg;
        cfg.T = T;
        cfg.burn_in = burn_in;
        cfg.sigma = sigma;
        cfg.seed = seed;
        cfg.init = init_of(init);
        py::gil_scoped_release release;
        const Panel p = domain == Domain::Count ? simulate_count(model, net, parse_copula(copula), cfg)
                                                : simulate_gaussian(model, net, cfg);
        return p.values;
      },
      py::arg("family"), py::arg("theta"), py::arg("net"), py::arg("T"), py::arg("spec") = "linear",
      py::arg("burn_in") = 300, py::arg("copula") = "indep", py::arg("sigma") = 1.0, py::arg("init") = "auto",
      py::arg("seed") = 0, "Simulate an N x T panel.");

  m.def(
      "fit",
      [](const std::string& family, const Network& net, const Eigen::MatrixXd& y, const std::string& spec) {
        const Domain domain = domain_of(family);
        const LaggedPanel data(panel_of(y, domain, net), net);
        ModelSpec start = parse_model_spec(spec, std::vector<double>{1.0, 0.0, 0.0}, domain);
        if (start.family == Family::Linear && domain == Domain::Continuous) return fit_dict(ols_fit_linear(data));
        return fit_dict(qmle_fit(data, default_start(data, start)));
      },
      py::arg("family"), py::arg("net"), py::arg("y"), py::arg("spec") = "linear",
      "OLS (continuous linear) or Poisson QMLE; a nuisance gamma in `spec` is held fixed.");

  m.def(
      "score_test",
      [](const std::string& family, const Network& net, const Eigen::MatrixXd& y) {
        const Domain domain = domain_of(family);
        const TestResult r = lm_test(panel_of(y, domain, net), net);
        py::dict d;
        d["statistic"] = r.statistic;
        d["df"] = r.df;
        d["p_value"] = r.p_value;
        d["null_fit"] = fit_dict(r.null_fit);
        return d;
      },
      py::arg("family"), py::arg("net"), py::arg("y"), "Quasi-score test against the intercept-drift alternative.");

  m.def(
      "sup_test",
      [](const std::string& family, const Network& net, const Eigen::MatrixXd& y, const std::string& alt,
         const std::string& grid, const std::string& method, int boot_reps, const std::string& agg, std::uint64_t seed) {
        const Domain domain = domain_of(family);
        if (alt != "stnar" && alt != "tnar") throw std::invalid_argument("alt must be stnar or tnar");
        if (method != "davies" && method != "bootstrap" && method != "both")
          throw std::invalid_argument("method must be davies, bootstrap or both");
        const Family fam = alt == "stnar" ? Family::STNAR : Family::TNAR;
        const LaggedPanel data(panel_of(y, domain, net), net);
        const auto explicit_grid = parse_grid(grid);
        const GammaGrid g = explicit_grid ? *explicit_grid : default_grid(fam, data);
        SupTestOptions opts;
        opts.davies = method != "bootstrap";
        opts.bootstrap = method != "davies";
        if (opts.davies && fam == Family::TNAR) {
          if (method == "davies") throw std::invalid_argument("the Davies bound is not available for tnar");
          opts.davies = false;
        }
        opts.boot_aggregate = parse_aggregate(agg);
        opts.replications = boot_reps;
        opts.seed = seed;
        const FitResult null_fit = fit_linear_null(data);
        const ProfileTestResult r = sup_test(data, null_fit, fam, g, opts);
        py::dict d;
        d["g_sup"] = r.g_sup;
        d["g_ave"] = r.g_ave;
        d["davies_p"] = r.davies_p ? py::object(py::float_(*r.davies_p)) : py::object(py::none());
        d["boot_p"] = r.boot_p ? py::object(py::float_(*r.boot_p)) : py::object(py::none());
        d["V"] = r.V;
        d["grid"] = r.profile.grid;
        d["profile"] = r.profile.lm;
        d["null_fit"] = fit_dict(null_fit);
        return d;
      },
      py::arg("family"), py::arg("net"), py::arg("y"), py::arg("alt"), py::arg("grid") = "auto",
      py::arg("method") = "both", py::arg("boot_reps") = 499, py::arg("agg") = "sup", py::arg("seed") = 0,
      "Sup/ave LM test with Davies and/or score-bootstrap p-values.");

  m.def("chi2_sf", &chi2_sf, py::arg("x"), py::arg("df"));
  m.def("davies_bound", &davies_bound, py::arg("m"), py::arg("v"), py::arg("k2") = 1);

  m.def(
      "run_study",
      [](const py::object& config) {
        const StudyConfig cfg = study_from_json(to_nlohmann(config));
        std::vector<ScenarioResult> results;
        {
          py::gil_scoped_release release;
          results = run_mc_study(cfg);
        }
        std::ostringstream out;
        emit_report(out, cfg, results, ReportFormat::Json);
        return from_nlohmann(nlohmann::json::parse(out.str()));
      },
      py::arg("config"), "Run a Monte Carlo study described by a StudyConfig-shaped dict; returns the JSON report.");
}
