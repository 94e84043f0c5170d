#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "netar/dgp.hpp"
#include "netar/model.hpp"
#include "netar/nuisance.hpp"

namespace netar {

enum class TestKind { Chi2, Davies, Bootstrap };

std::string test_kind_name(TestKind k);

struct NetworkDesign {
  std::string model = "sbm";  ///< "sbm" or "er"
  int blocks = 2;
  std::optional<double> p;
};

/// One Monte Carlo cell: a data-generating model, a test and its levels.
struct Scenario {
  std::string id;
  NetworkDesign network;
  int N = 100;
  int T = 100;
  Domain domain = Domain::Continuous;
  /// Family of the data-generating model; `theta2` holds its nonlinear
  /// coordinates by name (gamma, alpha, a0, a1, a2).
  Family family = Family::Linear;
  std::vector<double> theta{1.0, 0.3, 0.2};
  std::map<std::string, double> theta2;
  CopulaSpec copula;
  double sigma = 1.0;
  int burn_in = 300;
  /// "default" or "linear-stationary" (continuous: Y_0 from the stationary
  /// law of the linear part and no burn-in, whatever the family).
  std::string init = "default";
  int S = 500;
  TestKind test = TestKind::Chi2;
  /// Alternative for the nuisance tests (stnar or tnar).
  Family alternative = Family::STNAR;
  /// "auto" or "lo:hi:n".
  std::string grid = "auto";
  int J = 299;
  Aggregate agg = Aggregate::Sup;
  std::vector<double> levels{0.10, 0.05, 0.01};
  std::optional<std::uint64_t> base_seed;
  bool redraw_network = false;

  /// The data-generating ModelSpec.
  ModelSpec dgp_spec() const;
  void validate() const;
};

struct StudyConfig {
  std::uint64_t base_seed = 20240101;
  int threads = 1;
  std::vector<Scenario> scenarios;

  void validate() const;
};

StudyConfig study_from_json(const nlohmann::json& j);
nlohmann::json study_to_json(const StudyConfig& cfg);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

/// Parses "lo:hi:n" or "auto".
std::optional<GammaGrid> parse_grid(const std::string& text);

struct StudyRow {
  std::string scenario;
  double level = 0.0;
  double rejection_rate = 0.0;
  double mc_se = 0.0;
  double elapsed = 0.0;
};

struct ScenarioResult {
  std::string id;
  std::uint64_t seed = 0;
  int completed = 0;
  int failures = 0;
  bool aborted = false;
  std::string first_error;
  double elapsed = 0.0;
  /// Per replication (NaN for failures): LM for chi2, sup LM otherwise.
  std::vector<double> statistics;
  std::vector<double> p_values;
  std::vector<StudyRow> rows;
};

/// Seed for replication r of scenario s.
inline std::uint64_t replication_seed(std::uint64_t base, std::uint64_t s, std::uint64_t r) {
  return derive_seed(base, s, r);
}

/// Simulates, fits and tests one replication; returns (statistic, p-value).
std::pair<double, double> run_replication(const Scenario& sc, const Network& net, const GaussianLaw* law,
                                          std::uint64_t seed);

/// Runs S replications on `threads` workers. Failed replications are
/// excluded and counted; more than 1% failures marks the scenario aborted.
/// Results do not depend on the thread count.
ScenarioResult run_scenario(const Scenario& sc, std::uint64_t base_seed, std::size_t index, int threads);

std::vector<ScenarioResult> run_mc_study(const StudyConfig& cfg);

enum class ReportFormat { Json, Csv };

void emit_report(std::ostream& out, const StudyConfig& cfg, const std::vector<ScenarioResult>& results,
                 ReportFormat format);
/// One line per completed replication: scenario,replication,statistic,p_value.
void emit_qq(std::ostream& out, const std::vector<ScenarioResult>& results);

}  // namespace netar
