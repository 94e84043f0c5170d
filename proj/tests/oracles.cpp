#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "netar/lintest.hpp"
#include "netar/nuisance.hpp"
#include "netar/qmle.hpp"

namespace oracle {

using netar::Domain;
using netar::Family;
using netar::ModelSpec;

namespace {

Eigen::MatrixXd weights_from_edges(const netar::Network& net) {
  const int n = net.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : net.edges()) a(i, j) = 1.0;
  for (int i = 0; i < n; ++i) {
    const double deg = a.row(i).sum();
    if (deg > 0) a.row(i) /= deg;
  }
  return a;
}

double naive_cell(const ModelSpec& s, double x, double y) {
  const auto& p = s.theta;
  const double lin = p[0] + p[1] * x + p[2] * y;
  switch (s.family) {
    case Family::Linear: return lin;
    case Family::InterceptDrift: {
      const double base = s.domain == Domain::Count ? 1.0 + x : 1.0 + std::fabs(x);
      return p[0] / std::pow(base, p[3]) + p[1] * x + p[2] * y;
    }
    case Family::STNAR: return p[0] + (p[1] + p[3] * std::exp(-p[4] * x * x)) * x + p[2] * y;
    case Family::TNAR: return lin + (x <= p[6] ? p[3] + p[4] * x + p[5] * y : 0.0);
  }
  return lin;
}

std::vector<int> free_indices(const ModelSpec& s) {
  std::vector<int> idx(s.theta.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (s.family == Family::STNAR || s.family == Family::TNAR) idx.pop_back();
  return idx;
}

double uniform(netar::Stream& st, double lo, double hi) { return lo + (hi - lo) * st.uniform(); }

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref) {
  const double scale = std::max(ref.cwiseAbs().maxCoeff(), 1e-300);
  return (a - ref).cwiseAbs().maxCoeff() / scale;
}

netar::Panel small_panel(const ModelSpec& truth, const netar::Network& net, int T, std::uint64_t seed) {
  netar::SimConfig cfg;
  cfg.T = T;
  cfg.burn_in = 50;
  cfg.seed = seed;
  if (truth.domain == Domain::Count) return netar::simulate_count(truth, net, netar::parse_copula("indep"), cfg);
  cfg.init = netar::InitKind::LinearMean;
  return netar::simulate_gaussian(truth, net, cfg);
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(3);
  o << v;
  return o.str();
}

}  // namespace

double naive_loglik(const netar::Panel& panel, const Eigen::MatrixXd& w, const ModelSpec& spec) {
  const int n = panel.nodes();
  double total = 0.0;
  for (int t = 1; t < panel.periods(); ++t) {
    for (int i = 0; i < n; ++i) {
      double x = 0.0;
      for (int j = 0; j < n; ++j) x += w(i, j) * panel.values(j, t - 1);
      const double lambda = naive_cell(spec, x, panel.values(i, t - 1));
      const double y = panel.values(i, t);
      if (spec.domain == Domain::Count)
        total += y * std::log(lambda) - lambda;
      else
        total += -0.5 * (y - lambda) * (y - lambda);
    }
  }
  return total;
}

Eigen::MatrixXd naive_opg(const netar::Panel& panel, const Eigen::MatrixXd& w, const ModelSpec& spec) {
  const auto idx = free_indices(spec);
  const int m = static_cast<int>(idx.size());
  const int n = panel.nodes();
  Eigen::MatrixXd opg = Eigen::MatrixXd::Zero(m, m);
  for (int t = 1; t < panel.periods(); ++t) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
      double x = 0.0;
      for (int j = 0; j < n; ++j) x += w(i, j) * panel.values(j, t - 1);
      const double yl = panel.values(i, t - 1);
      const double y = panel.values(i, t);
      const double lambda = naive_cell(spec, x, yl);
      for (int k = 0; k < m; ++k) {
        ModelSpec up = spec, dn = spec;
        const double h = 1e-6 * std::max(1.0, std::fabs(spec.theta[idx[k]]));
        up.theta[idx[k]] += h;
        dn.theta[idx[k]] -= h;
        const double d = (naive_cell(up, x, yl) - naive_cell(dn, x, yl)) / (2 * h);
        s[k] += (spec.domain == Domain::Count ? y / lambda - 1.0 : y - lambda) * d;
      }
    }
    opg += s * s.transpose();
  }
  return opg;
}

Eigen::MatrixXd naive_sigma(const Eigen::MatrixXd& h, const Eigen::MatrixXd& b, int m1) {
  const int m2 = static_cast<int>(h.rows()) - m1;
  const Eigen::MatrixXd h11i = h.topLeftCorner(m1, m1).inverse();
  const Eigen::MatrixXd h12 = h.topRightCorner(m1, m2), h21 = h.bottomLeftCorner(m2, m1);
  const Eigen::MatrixXd b11 = b.topLeftCorner(m1, m1), b12 = b.topRightCorner(m1, m2);
  const Eigen::MatrixXd b21 = b.bottomLeftCorner(m2, m1), b22 = b.bottomRightCorner(m2, m2);
  return b22 - h21 * h11i * b12 - b21 * h11i * h12 + h21 * h11i * b11 * h11i * h12;
}

Eigen::Vector3d nelder_mead_ls(const netar::Panel& panel, const Eigen::MatrixXd& w) {
  const int n = panel.nodes();
  std::vector<std::array<double, 4>> rows;  // x, ylag, y
  for (int t = 1; t < panel.periods(); ++t)
    for (int i = 0; i < n; ++i) {
      double x = 0.0;
      for (int j = 0; j < n; ++j) x += w(i, j) * panel.values(j, t - 1);
      rows.push_back({x, panel.values(i, t - 1), panel.values(i, t), 0.0});
    }
  auto loss = [&](const Eigen::Vector3d& b) {
    long double acc = 0.0;
    for (const auto& r : rows) {
      const long double e = r[2] - b[0] - b[1] * r[0] - b[2] * r[1];
      acc += e * e;
    }
    return static_cast<double>(acc / rows.size());
  };

  Eigen::Vector3d best(0.5, 0.1, 0.1);
  double scale = 0.5;
  for (int restart = 0; restart < 60; ++restart) {
    std::array<Eigen::Vector3d, 4> p;
    std::array<double, 4> f;
    p[0] = best;
    for (int k = 0; k < 3; ++k) {
      p[k + 1] = best;
      p[k + 1][k] += scale;
    }
    for (int k = 0; k < 4; ++k) f[k] = loss(p[k]);
    for (int it = 0; it < 5000; ++it) {
      std::array<int, 4> order{0, 1, 2, 3};
      std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
      auto pp = p;
      auto ff = f;
      for (int k = 0; k < 4; ++k) {
        p[k] = pp[order[k]];
        f[k] = ff[order[k]];
      }
      if (f[3] - f[0] <= 1e-17 * std::max(1.0, std::fabs(f[0]))) break;
      const Eigen::Vector3d c = (p[0] + p[1] + p[2]) / 3.0;
      const Eigen::Vector3d r = c + (c - p[3]);
      const double fr = loss(r);
      if (fr < f[0]) {
        const Eigen::Vector3d e = c + 2.0 * (c - p[3]);
        const double fe = loss(e);
        if (fe < fr) {
          p[3] = e;
          f[3] = fe;
        } else {
          p[3] = r;
          f[3] = fr;
        }
      } else if (fr < f[2]) {
        p[3] = r;
        f[3] = fr;
      } else {
        const Eigen::Vector3d k = fr < f[3] ? Eigen::Vector3d(c + 0.5 * (r - c)) : Eigen::Vector3d(c + 0.5 * (p[3] - c));
        const double fk = loss(k);
        if (fk < std::min(fr, f[3])) {
          p[3] = k;
          f[3] = fk;
        } else {
          for (int j = 1; j < 4; ++j) {
            p[j] = p[0] + 0.5 * (p[j] - p[0]);
            f[j] = loss(p[j]);
          }
        }
      }
    }
    const int arg = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
    const double moved = (p[arg] - best).cwiseAbs().maxCoeff();
    best = p[arg];
    scale = std::max(1e-9, std::min(scale * 0.5, 10.0 * moved + 1e-9));
  }
  return best;
}

double chi2_1_tail(double x) { return std::erfc(std::sqrt(0.5 * x)); }

double chi2_tail_quadrature(double x, int df) {
  // Substitute u = sqrt(v) to remove the v^(-1/2) singularity at zero.
  const double k = 0.5 * df;
  auto density_u = [&](double u) {
    const double v = u * u;
    if (v == 0.0) return df == 1 ? 2.0 / (std::pow(2.0, k) * std::tgamma(k)) : 0.0;
    return 2.0 * u * std::pow(v, k - 1.0) * std::exp(-0.5 * v) / (std::pow(2.0, k) * std::tgamma(k));
  };
  const double a = std::sqrt(x), b = std::sqrt(x + 200.0);
  const int steps = 200000;
  const double h = (b - a) / steps;
  double s = density_u(a) + density_u(b);
  for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * density_u(a + i * h);
  return s * h / 3.0;
}

Eigen::MatrixXd random_spd(int m, netar::Stream& stream) {
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = uniform(stream, -1.0, 1.0);
  return a * a.transpose() + m * Eigen::MatrixXd::Identity(m, m);
}

ModelSpec random_spec(Family family, Domain domain, netar::Stream& st) {
  const double b0 = uniform(st, 0.5, 2.0), b1 = uniform(st, 0.05, 0.35), b2 = uniform(st, 0.05, 0.35);
  switch (family) {
    case Family::Linear: return ModelSpec::linear(domain, b0, b1, b2);
    case Family::InterceptDrift: return ModelSpec::drift(domain, b0, b1, b2, uniform(st, 0.0, 1.5));
    case Family::STNAR: return ModelSpec::stnar(domain, b0, b1, b2, uniform(st, 0.0, 0.3), uniform(st, 0.05, 1.0));
    case Family::TNAR:
      return ModelSpec::tnar(domain, b0, b1, b2, uniform(st, 0.0, 0.5), uniform(st, 0.0, 0.2), uniform(st, 0.0, 0.2),
                             uniform(st, 1.0, 3.0));
  }
  return ModelSpec::linear(domain, b0, b1, b2);
}

Check fd_score_hessian(int points, std::uint64_t seed) {
  netar::Stream st(seed);
  const netar::Network net = netar::gen_sbm(8, 2, netar::derive_seed(seed, 1));
  const Eigen::MatrixXd w = weights_from_edges(net);
  const Family families[] = {Family::Linear, Family::InterceptDrift, Family::STNAR, Family::TNAR};
  double worst_score = 0.0, worst_hess = 0.0;
  for (int p = 0; p < points; ++p) {
    const Family fam = families[p % 4];
    const Domain dom = (p / 4) % 2 == 0 ? Domain::Count : Domain::Continuous;
    const ModelSpec spec = random_spec(fam, dom, st);
    const ModelSpec truth = ModelSpec::linear(dom, 1.0, 0.3, 0.2);
    const netar::Panel panel = small_panel(truth, net, 30, netar::derive_seed(seed, 2, p));
    const netar::LaggedPanel data(panel, net);
    const auto q = netar::evaluate_quasi_lik(data, spec, true);
    const auto idx = free_indices(spec);
    const int m = static_cast<int>(idx.size());
    Eigen::VectorXd fd_score(m);
    Eigen::MatrixXd fd_hess(m, m);
    for (int k = 0; k < m; ++k) {
      ModelSpec up = spec, dn = spec;
      const double h = 1e-5 * std::max(1.0, std::fabs(spec.theta[idx[k]]));
      up.theta[idx[k]] += h;
      dn.theta[idx[k]] -= h;
      fd_score[k] = (naive_loglik(panel, w, up) - naive_loglik(panel, w, dn)) / (2 * h);
      const auto qu = netar::evaluate_quasi_lik(data, up, false);
      const auto qd = netar::evaluate_quasi_lik(data, dn, false);
      fd_hess.col(k) = -(qu.score - qd.score) / (2 * h);
    }
    worst_score = std::max(worst_score, max_rel(q.score, fd_score));
    worst_hess = std::max(worst_hess, max_rel(q.hessian, fd_hess));
  }
  Check c;
  c.pass = worst_score < 1e-6 && worst_hess < 1e-5;
  c.detail = "max rel err score " + fmt(worst_score) + ", hessian " + fmt(worst_hess) + " over " +
             std::to_string(points) + " points";
  return c;
}

Check ols_vs_minimizer(std::uint64_t seed) {
  const netar::Network net = netar::gen_sbm(20, 2, netar::derive_seed(seed, 1));
  const ModelSpec truth = ModelSpec::linear(Domain::Continuous, 1.0, 0.3, 0.2);
  netar::SimConfig cfg;
  cfg.T = 60;
  cfg.seed = netar::derive_seed(seed, 2);
  const netar::Panel panel = netar::simulate_gaussian(truth, net, cfg);
  const auto fit = netar::ols_fit_linear(panel, net);
  const Eigen::Vector3d nm = nelder_mead_ls(panel, weights_from_edges(net));
  const double diff = (fit.theta_hat - nm).cwiseAbs().maxCoeff();
  return {diff < 1e-6, "max |OLS - Nelder-Mead| = " + fmt(diff)};
}

Check copula_poisson_gof(std::uint64_t seed) {
  const int draws = 100000;
  const netar::GaussianCopula cop(netar::parse_copula("gaussian-ar1:0.5"), 3);
  netar::Stream st(seed);
  const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(3, 2.0);
  const int top = 9;  // bins 0..8 and >= 9
  std::vector<double> counts(top + 1, 0.0);
  for (int d = 0; d < draws; ++d) {
    const Eigen::VectorXd y = netar::copula_poisson_draw(lambda, cop, st);
    counts[std::min(static_cast<int>(y[1]), top)] += 1.0;
  }
  double stat = 0.0, cum = 0.0;
  for (int k = 0; k <= top; ++k) {
    const double pk = k < top ? std::exp(k * std::log(2.0) - 2.0 - std::lgamma(k + 1.0)) : 1.0 - cum;
    cum += k < top ? pk : 0.0;
    const double e = draws * pk;
    stat += (counts[k] - e) * (counts[k] - e) / e;
  }
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(top), stat));
  return {p > 0.01, "GOF chi2 " + fmt(stat) + " on " + std::to_string(top) + " df, p = " + fmt(p)};
}

Check row_stochastic(std::uint64_t seed) {
  const netar::Network nets[] = {netar::gen_sbm(200, 2, netar::derive_seed(seed, 1)),
                                 netar::gen_sbm(200, 5, netar::derive_seed(seed, 2)),
                                 netar::gen_er(200, std::nullopt, netar::derive_seed(seed, 3))};
  double worst = 0.0;
  bool zero_rows_ok = true;
  for (const auto& net : nets) {
    const Eigen::VectorXd sums = net.dense_w().rowwise().sum();
    for (int i = 0; i < net.size(); ++i) {
      if (net.out_degree(i) == 0)
        zero_rows_ok = zero_rows_ok && sums[i] == 0.0;
      else
        worst = std::max(worst, std::fabs(sums[i] - 1.0));
    }
  }
  return {worst <= 1e-12 && zero_rows_ok, "max |row sum - 1| = " + fmt(worst)};
}

Check reduction_identities(std::uint64_t seed) {
  netar::Stream st(seed);
  int mismatches = 0, cells = 0;
  for (Domain dom : {Domain::Count, Domain::Continuous}) {
    for (int r = 0; r < 1000; ++r) {
      const double b0 = uniform(st, 0.1, 3.0), b1 = uniform(st, 0.0, 0.5), b2 = uniform(st, 0.0, 0.5);
      const double lo = dom == Domain::Count ? 0.0 : -5.0;
      const double x = uniform(st, lo, 10.0), y = uniform(st, lo, 10.0), g = uniform(st, 0.0, 5.0);
      const double lin = netar::cond_mean_cell(ModelSpec::linear(dom, b0, b1, b2), x, y);
      const double a = netar::cond_mean_cell(ModelSpec::drift(dom, b0, b1, b2, 0.0), x, y);
      const double s = netar::cond_mean_cell(ModelSpec::stnar(dom, b0, b1, b2, 0.0, g), x, y);
      const double t = netar::cond_mean_cell(ModelSpec::tnar(dom, b0, b1, b2, 0.0, 0.0, 0.0, g), x, y);
      mismatches += (a != lin) + (s != lin) + (t != lin);
      cells += 3;
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " inexact of " + std::to_string(cells) + " cells"};
}

Check sigma_correction_naive(std::uint64_t seed) {
  netar::Stream st(seed);
  double worst = 0.0;
  for (int r = 0; r < 50; ++r) {
    const int m = r % 2 ? 5 : 4;
    const Eigen::MatrixXd h = random_spd(m, st), b = random_spd(m, st);
    const Eigen::MatrixXd ref = naive_sigma(h, b, 3);
    const Eigen::MatrixXd got = netar::sigma_correction(h, b, 3);
    worst = std::max(worst, (got - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
  return {worst <= 1e-12, "max scaled diff " + fmt(worst) + " over 50 random pairs"};
}

Check davies_dominates_tail(std::uint64_t seed) {
  netar::Stream st(seed);
  int violations = 0;
  for (int r = 0; r < 100; ++r) {
    netar::LMProfile prof;
    prof.family = Family::STNAR;
    prof.k2 = 1;
    const double scale = uniform(st, 0.5, 3.0);
    double z = st.normal();
    for (int j = 0; j < 10; ++j) {
      z = 0.8 * z + 0.6 * st.normal();
      prof.grid.push_back(0.05 + j * 0.2);
      prof.lm.push_back(scale * z * z);
    }
    const double p = netar::davies_pvalue(prof);
    const double sup = *std::max_element(prof.lm.begin(), prof.lm.end());
    if (p < chi2_1_tail(sup) - 1e-14) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations on 100 profiles"};
}

Check bootstrap_unit_weights(std::uint64_t seed) {
  double worst = 0.0;
  int profiles = 0;
  std::string where;
  for (Domain dom : {Domain::Continuous, Domain::Count}) {
    const netar::Network net = netar::gen_sbm(30, 2, netar::derive_seed(seed, 1));
    const netar::Panel panel = small_panel(ModelSpec::linear(dom, 1.0, 0.3, 0.2), net, 100, netar::derive_seed(seed, 2));
    const netar::LaggedPanel data(panel, net);
    const auto null_fit = netar::fit_linear_null(data);
    for (Family fam : {Family::STNAR, Family::TNAR}) {
      const auto grid = netar::default_grid(fam, data);
      const auto prof = netar::lm_profile(data, null_fit, fam, grid);
      const auto again = netar::perturbed_profile(prof, Eigen::VectorXd::Ones(data.steps()));
      for (std::size_t j = 0; j < prof.size(); ++j) {
        const double d = std::fabs(again[j] - prof.lm[j]) / std::max(1.0, prof.lm[j]);
        if (d > worst) {
          worst = d;
          where = std::string(netar::domain_name(dom)) + "/" + std::string(netar::family_name(fam)) + " gamma " +
                  fmt(prof.grid[j]) + " lm " + fmt(prof.lm[j]);
        }
      }
      ++profiles;
    }
  }
  return {worst <= 1e-8, "max rel diff " + fmt(worst) + " over " + std::to_string(profiles) + " profiles (" + where + ")"};
}

}  // namespace oracle
