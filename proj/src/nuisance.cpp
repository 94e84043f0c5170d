#include "netar/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "netar/lintest.hpp"
#include "netar/rng.hpp"

namespace netar {

void GammaGrid::validate() const {
  if (values.empty()) throw std::invalid_argument("gamma grid is empty");
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) throw std::invalid_argument("gamma grid has a non-finite point");
    if (j > 0 && !(values[j] > values[j - 1])) throw std::invalid_argument("gamma grid must be strictly increasing");
  }
}

std::string grid_source_name(GridSource s) {
  switch (s) {
    case GridSource::Explicit: return "explicit";
    case GridSource::StnarDefault: return "stnar-default";
    case GridSource::TnarQuantile: return "tnar-quantile";
  }
  return "?";
}

GammaGrid linspace_grid(double lo, double hi, int n, GridSource source) {
  if (n < 1) throw std::invalid_argument("grid needs at least one point");
  if (n > 1 && !(hi > lo)) throw std::invalid_argument("grid upper end must exceed lower end");
  GammaGrid grid;
  grid.source = source;
  grid.values.resize(n);
  for (int j = 0; j < n; ++j) grid.values[j] = n == 1 ? lo : lo + (hi - lo) * j / (n - 1);
  if (n > 1) grid.values.back() = hi;
  return grid;
}

namespace {

// Hyndman-Fan type 7, the default of most statistics packages.
double quantile7(std::vector<double>& v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

}  // namespace

int nuisance_block_size(Family family) {
  switch (family) {
    case Family::STNAR: return 1;
    case Family::TNAR: return 3;
    default: throw std::invalid_argument("nuisance tests are defined for stnar and tnar only");
  }
}

GammaGrid default_grid(Family family, const LaggedPanel& data, const GridOptions& opts) {
  if (family == Family::STNAR) return linspace_grid(opts.stnar_lo, opts.stnar_hi, opts.points, GridSource::StnarDefault);
  if (family != Family::TNAR) throw std::invalid_argument("default_grid: stnar or tnar expected");

  const int steps = data.steps();
  const auto lagged = data.x.leftCols(steps);
  const double x_min = lagged.minCoeff();
  const double x_max = lagged.maxCoeff();
  if (!(x_max > x_min)) throw std::invalid_argument("default_grid: network regressor is constant");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> row(steps);
  for (int i = 0; i < data.nodes(); ++i) {
    for (int t = 0; t < steps; ++t) row[t] = lagged(i, t);
    lo = std::min(lo, quantile7(row, opts.lower_quantile));
    hi = std::max(hi, quantile7(row, opts.upper_quantile));
  }
  GammaGrid raw = hi > lo ? linspace_grid(lo, hi, opts.points, GridSource::TnarQuantile)
                          : linspace_grid(lo, lo, 1, GridSource::TnarQuantile);
  GammaGrid grid;
  grid.source = GridSource::TnarQuantile;
  for (double g : raw.values)
    if (g > x_min && g < x_max) grid.values.push_back(g);
  if (grid.values.empty()) throw std::invalid_argument("default_grid: no threshold inside the range of X");
  return grid;
}

namespace {

void fill_h(Family family, double gamma, double x, double y, double* h) {
  if (family == Family::STNAR) {
    h[0] = std::exp(-gamma * x * x) * x;
    return;
  }
  const double ind = x <= gamma ? 1.0 : 0.0;
  h[0] = ind;
  h[1] = ind * x;
  h[2] = ind * y;
}

}  // namespace

LMProfile lm_profile(const LaggedPanel& data, const FitResult& null_fit, Family family, const GammaGrid& grid) {
  grid.validate();
  const ModelSpec& null = null_fit.spec;
  if (null.family != Family::Linear || null.domain != data.domain)
    throw std::invalid_argument("lm_profile: null fit must be the linear model of the panel's domain");
  if (!null_fit.converged) throw std::runtime_error("lm_profile: null fit did not converge");

  LMProfile out;
  out.family = family;
  out.domain = data.domain;
  out.k2 = nuisance_block_size(family);
  out.null_fit = null_fit;
  const int k2 = out.k2;
  const int k = kLinearSize + k2;
  const int n = data.nodes();
  const int steps = data.steps();
  const bool count = data.domain == Domain::Count;

  // Null intensity and the residual weight each cell contributes to s_t.
  Eigen::MatrixXd resid(n, steps);
  Eigen::MatrixXd outer(n, steps);
  for (int t = 1; t <= steps; ++t) {
    for (int i = 0; i < n; ++i) {
      const double lambda = null.b0() + null.b1() * data.x(i, t - 1) + null.b2() * data.y(i, t - 1);
      const double obs = data.y(i, t);
      if (count) {
        if (!(lambda >= kMinIntensity)) throw std::domain_error("lm_profile: null intensity below admissible floor");
        resid(i, t - 1) = (obs - lambda) / lambda;
        outer(i, t - 1) = obs / (lambda * lambda);
      } else {
        resid(i, t - 1) = obs - lambda;
        outer(i, t - 1) = 1.0;
      }
    }
  }

  Eigen::VectorXd z(k);
  Eigen::VectorXd h_scale(k2);
  for (double gamma : grid.values) {
    // LM is invariant to rescaling the columns of h, and exp(-gamma X^2)
    // underflows for large X; scale each column to unit max-abs first.
    h_scale.setZero();
    for (int t = 1; t <= steps; ++t) {
      for (int i = 0; i < n; ++i) {
        fill_h(family, gamma, data.x(i, t - 1), data.y(i, t - 1), z.data() + kLinearSize);
        h_scale = h_scale.cwiseMax(z.tail(k2).cwiseAbs());
      }
    }
    if (!(h_scale.minCoeff() > 0.0)) {
      out.dropped.push_back({gamma, "nonlinear regressors vanish"});
      continue;
    }
    Eigen::MatrixXd per_time = Eigen::MatrixXd::Zero(k, steps);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, k);
    for (int t = 1; t <= steps; ++t) {
      auto s_t = per_time.col(t - 1);
      for (int i = 0; i < n; ++i) {
        const double xv = data.x(i, t - 1);
        const double yv = data.y(i, t - 1);
        z[0] = 1.0;
        z[1] = xv;
        z[2] = yv;
        fill_h(family, gamma, xv, yv, z.data() + kLinearSize);
        z.tail(k2).array() /= h_scale.array();
        s_t.noalias() += resid(i, t - 1) * z;
        h.selfadjointView<Eigen::Lower>().rankUpdate(z, outer(i, t - 1));
      }
    }
    h = h.selfadjointView<Eigen::Lower>();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, k);
    b.selfadjointView<Eigen::Lower>().rankUpdate(per_time);
    b = b.selfadjointView<Eigen::Lower>();

    const double scale = b.bottomRightCorner(k2, k2).diagonal().maxCoeff();
    if (!(scale > 0.0) || !b.allFinite() || !h.allFinite()) {
      out.dropped.push_back({gamma, "nonlinear regressors vanish"});
      continue;
    }
    Eigen::MatrixXd sigma;
    try {
      sigma = sigma_correction(h, b, kLinearSize);
    } catch (const std::invalid_argument&) {
      out.dropped.push_back({gamma, "linear block of H is singular"});
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 1e-9 * scale)) {
      out.dropped.push_back({gamma, "corrected covariance is singular"});
      continue;
    }
    const double top = ev.maxCoeff();
    Eigen::VectorXd inv_ev = Eigen::VectorXd::Zero(k2);
    for (int c = 0; c < k2; ++c)
      if (ev[c] > 1e-12 * top) inv_ev[c] = 1.0 / ev[c];
    Eigen::MatrixXd pinv = eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose();
    pinv = 0.5 * (pinv + pinv.transpose());

    const Eigen::VectorXd s2 = per_time.bottomRows(k2).rowwise().sum();
    // Efficient per-time scores s2_t - H21 H11^-1 s1_t; their outer products
    // sum to the corrected covariance, which is what the bootstrap needs.
    const Eigen::MatrixXd a =
        h.topLeftCorner(kLinearSize, kLinearSize).fullPivLu().solve(h.topRightCorner(kLinearSize, k2)).transpose();
    Eigen::MatrixXd partial = per_time.bottomRows(k2) - a * per_time.topRows(kLinearSize);
    const double lm = s2.dot(pinv * s2);
    if (!std::isfinite(lm)) {
      out.dropped.push_back({gamma, "statistic is not finite"});
      continue;
    }
    out.grid.push_back(gamma);
    out.lm.push_back(std::max(0.0, lm));
    out.per_time_scores.push_back(std::move(partial));
    out.sigma_pinv.push_back(std::move(pinv));
  }
  if (out.lm.empty()) throw std::runtime_error("lm_profile: every grid point is degenerate");
  return out;
}

LMProfile lm_profile(const LaggedPanel& data, Family family, const GammaGrid& grid) {
  const FitResult null_fit = fit_linear_null(data);
  return lm_profile(data, null_fit, family, grid);
}

Aggregate parse_aggregate(const std::string& text) {
  if (text == "sup") return Aggregate::Sup;
  if (text == "ave") return Aggregate::Ave;
  throw std::invalid_argument("aggregate must be sup or ave, got '" + text + "'");
}

double aggregate(const std::vector<double>& lm, Aggregate g) {
  if (lm.empty()) throw std::invalid_argument("aggregate: empty profile");
  if (g == Aggregate::Sup) return *std::max_element(lm.begin(), lm.end());
  return std::accumulate(lm.begin(), lm.end(), 0.0) / static_cast<double>(lm.size());
}

double aggregate(const LMProfile& profile, Aggregate g) { return aggregate(profile.lm, g); }

double total_variation(const std::vector<double>& lm) {
  double v = 0.0;
  for (std::size_t j = 1; j < lm.size(); ++j) v += std::abs(std::sqrt(lm[j]) - std::sqrt(lm[j - 1]));
  return v;
}

double davies_bound(double m, double v, int k2) {
  if (k2 < 1) throw std::invalid_argument("davies_bound: k2 must be at least 1");
  if (!(m > 0.0)) return 1.0;
  const double tail = chi2_sf(m, k2);
  const double correction = v * std::pow(m, 0.5 * (k2 - 1)) * std::exp(-0.5 * m) * std::pow(2.0, -0.5 * k2) /
                            boost::math::tgamma(0.5 * k2);
  return std::min(1.0, tail + correction);
}

double davies_pvalue(const LMProfile& profile) {
  if (profile.family != Family::STNAR || profile.k2 != 1)
    throw std::invalid_argument("davies_pvalue: needs a scalar smooth nuisance (stnar); use the bootstrap for tnar");
  if (profile.size() < 2) throw std::invalid_argument("davies_pvalue: needs at least two grid points");
  return davies_bound(aggregate(profile, Aggregate::Sup), total_variation(profile.lm), profile.k2);
}

std::vector<double> perturbed_profile(const LMProfile& profile, const Eigen::VectorXd& nu) {
  std::vector<double> out(profile.size());
  for (std::size_t j = 0; j < profile.size(); ++j) {
    const Eigen::MatrixXd& s = profile.per_time_scores[j];
    if (s.cols() != nu.size()) throw std::invalid_argument("perturbed_profile: weight length does not match T-1");
    const Eigen::VectorXd snu = s * nu;
    out[j] = std::max(0.0, snu.dot(profile.sigma_pinv[j] * snu));
  }
  return out;
}

BootstrapResult hansen_bootstrap(const LMProfile& profile, Aggregate g, int replications, std::uint64_t seed) {
  if (replications < 1) throw std::invalid_argument("hansen_bootstrap: need at least one replication");
  if (profile.size() == 0) throw std::invalid_argument("hansen_bootstrap: empty profile");
  const double observed = aggregate(profile, g);
  const auto steps = profile.per_time_scores.front().cols();
  BootstrapResult out;
  out.replications = replications;
  out.seed = seed;
  out.draws.resize(replications);
  Eigen::VectorXd nu(steps);
  int exceed = 0;
  for (int j = 0; j < replications; ++j) {
    Stream stream(derive_seed(seed, static_cast<std::uint64_t>(j)));
    for (Eigen::Index t = 0; t < steps; ++t) nu[t] = stream.normal();
    out.draws[j] = aggregate(perturbed_profile(profile, nu), g);
    if (out.draws[j] >= observed) ++exceed;
  }
  out.p_value = static_cast<double>(exceed) / replications;
  return out;
}

ProfileTestResult sup_test(const LaggedPanel& data, const FitResult& null_fit, Family family, const GammaGrid& grid,
                           const SupTestOptions& opts) {
  ProfileTestResult out;
  out.profile = lm_profile(data, null_fit, family, grid);
  out.g_sup = aggregate(out.profile, Aggregate::Sup);
  out.g_ave = aggregate(out.profile, Aggregate::Ave);
  out.V = total_variation(out.profile.lm);
  out.seed = opts.seed;
  out.boot_aggregate = opts.boot_aggregate;
  if (opts.davies && family == Family::STNAR && out.profile.size() >= 2) out.davies_p = davies_pvalue(out.profile);
  if (opts.bootstrap) {
    out.J = opts.replications;
    out.boot_p = hansen_bootstrap(out.profile, opts.boot_aggregate, opts.replications, opts.seed).p_value;
  }
  return out;
}

}  // namespace netar
