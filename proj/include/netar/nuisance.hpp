#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netar/model.hpp"
#include "netar/qmle.hpp"

namespace netar {

enum class GridSource { Explicit, StnarDefault, TnarQuantile };

struct GammaGrid {
  std::vector<double> values;
  GridSource source = GridSource::Explicit;

  /// Throws unless nonempty, finite and strictly increasing.
  void validate() const;
};

std::string grid_source_name(GridSource s);

/// n equidistant points on [lo, hi]; n = 1 gives {lo}.
GammaGrid linspace_grid(double lo, double hi, int n, GridSource source = GridSource::Explicit);

struct GridOptions {
  double stnar_lo = 0.05;
  double stnar_hi = 2.0;
  int points = 10;
  double lower_quantile = 0.10;
  double upper_quantile = 0.90;
};

/// STNAR: equidistant points on [0.05, 2]. TNAR: equidistant points between
/// the smallest per-node 10% quantile and the largest per-node 90% quantile
/// of the lagged regressor X_{i,t-1}; points at or beyond the overall range of
/// X are removed since the indicator is constant there.
GammaGrid default_grid(Family family, const LaggedPanel& data, const GridOptions& opts = {});

/// Second-block basis h_t(gamma) size for a nuisance family: 1 (STNAR) or 3 (TNAR).
int nuisance_block_size(Family family);

struct DroppedPoint {
  double gamma = 0.0;
  std::string reason;
};

/// LM_T(gamma) over a grid at the constrained null fit.
struct LMProfile {
  Family family = Family::STNAR;
  Domain domain = Domain::Count;
  int k2 = 1;
  /// Grid points that survived the degeneracy screen.
  std::vector<double> grid;
  std::vector<double> lm;
  /// Per kept point: k2 x (T-1) efficient per-time scores
  /// s~_t^(2)(gamma) - H21 H11^-1 s~_t^(1), with each h column scaled to unit
  /// max-abs (LM does not depend on it). They sum to S2 up to the null fit's
  /// first-block score.
  std::vector<Eigen::MatrixXd> per_time_scores;
  /// Per kept point: pseudo-inverse of Sigma~(gamma, gamma) in the same scaling.
  std::vector<Eigen::MatrixXd> sigma_pinv;
  std::vector<DroppedPoint> dropped;
  FitResult null_fit;

  std::size_t size() const { return lm.size(); }
};

/// For each gamma, builds Z_t(gamma) = (1, X, Y, h_t(gamma)), the scores at
/// (beta~, 0), H~ and B~ = sum_t s~_t s~_t', and LM = S2' Sigma~^-1 S2 with the
/// corrected Sigma~. Counts divide by lambda~ (H~ = sum Y Z Z' / lambda~^2);
/// continuous panels use raw residuals (H~ = sum Z Z'). A point is dropped
/// when min eig Sigma~ <= 1e-9 * max diag B~22. Throws if every point drops.
LMProfile lm_profile(const LaggedPanel& data, Family family, const GammaGrid& grid);
LMProfile lm_profile(const LaggedPanel& data, const FitResult& null_fit, Family family, const GammaGrid& grid);

enum class Aggregate { Sup, Ave };

Aggregate parse_aggregate(const std::string& text);
double aggregate(const std::vector<double>& lm, Aggregate g);
double aggregate(const LMProfile& profile, Aggregate g);

/// Total variation sum |sqrt(LM_{j+1}) - sqrt(LM_j)| along the grid.
double total_variation(const std::vector<double>& lm);

/// Davies' bound for P(sup LM >= M), capped at 1. Scalar STNAR nuisance only.
double davies_pvalue(const LMProfile& profile);
double davies_bound(double m, double v, int k2);

/// Profile recomputed with the scores perturbed by nu_t (shared by all grid
/// points) and the unperturbed Sigma~. nu = 1 reproduces `profile.lm`.
std::vector<double> perturbed_profile(const LMProfile& profile, const Eigen::VectorXd& nu);

struct BootstrapResult {
  double p_value = 1.0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::vector<double> draws;
};

/// Score bootstrap: draw j perturbs with nu_{t,j} ~ N(0,1) from the stream
/// derive_seed(seed, j); p = share of draws with g~_j >= g_T.
BootstrapResult hansen_bootstrap(const LMProfile& profile, Aggregate g, int replications, std::uint64_t seed);

struct ProfileTestResult {
  double g_sup = 0.0;
  double g_ave = 0.0;
  std::optional<double> davies_p;
  std::optional<double> boot_p;
  Aggregate boot_aggregate = Aggregate::Sup;
  int J = 0;
  double V = 0.0;
  std::uint64_t seed = 0;
  LMProfile profile;
};

struct SupTestOptions {
  bool davies = true;
  bool bootstrap = false;
  Aggregate boot_aggregate = Aggregate::Sup;
  int replications = 499;
  std::uint64_t seed = 0;
};

/// Profile plus the requested p-values. Davies is skipped for TNAR.
ProfileTestResult sup_test(const LaggedPanel& data, const FitResult& null_fit, Family family, const GammaGrid& grid,
                           const SupTestOptions& opts);

}  // namespace netar
