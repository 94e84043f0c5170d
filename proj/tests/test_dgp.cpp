#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "doctest.h"
#include "netar/dgp.hpp"
#include "oracles.hpp"

using namespace netar;

namespace {

double sample_corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Large-sample SE of a Pearson correlation under normality.
double corr_se(double rho, double n) { return (1 - rho * rho) / std::sqrt(n); }

}  // namespace

TEST_CASE("closed-form copula factors agree with a dense Cholesky") {
  for (const char* text : {"gaussian-ar1:0.5", "gaussian-ar1:-0.7", "gaussian-exch:0.5", "gaussian-exch:-0.03", "indep"}) {
    const CopulaSpec spec = parse_copula(text);
    for (int n : {1, 2, 7, 25}) {
      const Eigen::MatrixXd r = spec.correlation(n);
      const Eigen::MatrixXd ref = r.llt().matrixL();
      const GaussianCopula cop(spec, n);
      INFO(text << " n=" << n);
      CHECK((cop.cholesky() - ref).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK((r.diagonal().array() == 1.0).all());
    }
  }
  CHECK(parse_copula("gaussian-ar1:0.5").correlation(3)(0, 2) == doctest::Approx(0.25));
  CHECK_THROWS_AS(GaussianCopula(parse_copula("gaussian-exch:-0.5"), 4), std::invalid_argument);
  CHECK(format_copula(parse_copula("gaussian-exch:0.25")) == "gaussian-exch:0.25");
  CHECK_THROWS(parse_copula("clayton:2"));
}

TEST_CASE("independent copula uniforms pass KS and are uncorrelated") {
  const int n = 100000;
  Stream st(21);
  const CopulaSpec spec = parse_copula("indep");
  std::vector<double> u0, z0, z1;
  for (int d = 0; d < n; ++d) {
    const Eigen::VectorXd u = draw_copula_uniform(spec, 2, st);
    u0.push_back(u[0]);
    z0.push_back(normal_quantile(u[0]));
    z1.push_back(normal_quantile(u[1]));
  }
  std::sort(u0.begin(), u0.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) ks = std::max({ks, (i + 1.0) / n - u0[i], u0[i] - static_cast<double>(i) / n});
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(n)));  // 1% critical value
  CHECK(std::fabs(sample_corr(z0, z1)) < 3 * corr_se(0.0, n));
}

TEST_CASE("ar1 copula correlations") {
  const int n = 100000;
  Stream st(22);
  const GaussianCopula cop(parse_copula("gaussian-ar1:0.5"), 3);
  std::vector<double> a, b, c;
  for (int d = 0; d < n; ++d) {
    const Eigen::VectorXd u = cop.draw_uniform(st);
    a.push_back(normal_quantile(u[0]));
    b.push_back(normal_quantile(u[1]));
    c.push_back(normal_quantile(u[2]));
  }
  CHECK(std::fabs(sample_corr(a, b) - 0.5) < 3 * corr_se(0.5, n));
  CHECK(std::fabs(sample_corr(a, c) - 0.25) < 3 * corr_se(0.25, n));
}

TEST_CASE("rho = 0 reproduces independent draws") {
  for (const char* text : {"gaussian-ar1:0", "gaussian-exch:0"}) {
    Stream s1(5), s2(5);
    const Eigen::VectorXd a = draw_copula_uniform(parse_copula(text), 6, s1);
    const Eigen::VectorXd b = draw_copula_uniform(parse_copula("indep"), 6, s2);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("copula poisson draws") {
  Stream st(3);
  const GaussianCopula indep(parse_copula("indep"), 2);
  CHECK(copula_poisson_draw(Eigen::VectorXd::Zero(2), indep, st).isZero());
  CHECK_THROWS(copula_poisson_draw(Eigen::Vector2d(1.0, -1.0), indep, st));

  const int n = 100000;
  double sum = 0, sq = 0;
  for (int d = 0; d < n; ++d) {
    const double y = copula_poisson_draw(Eigen::Vector2d(2.0, 2.0), indep, st)[0];
    sum += y;
    sq += y * y;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  CHECK(std::fabs(mean - 2.0) < 3 * std::sqrt(2.0 / n));
  // Var of the sample variance for Poisson(2): (mu4 - s^4)/n with mu4 = 2 + 3*4.
  CHECK(std::fabs(var - 2.0) < 3 * std::sqrt((14.0 - 4.0) / n));

  const auto gof = oracle::copula_poisson_gof(77);
  INFO(gof.detail);
  CHECK(gof.pass);

  const GaussianCopula ar(parse_copula("gaussian-ar1:0.5"), 2);
  std::vector<double> y1, y2;
  for (int d = 0; d < 20000; ++d) {
    const Eigen::VectorXd y = copula_poisson_draw(Eigen::Vector2d(3.0, 3.0), ar, st);
    y1.push_back(y[0]);
    y2.push_back(y[1]);
  }
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < y1.size(); ++i) {
    m1 += y1[i];
    m2 += y2[i];
  }
  m1 /= y1.size();
  m2 /= y2.size();
  CHECK(std::fabs(m1 - 3.0) < 3 * std::sqrt(3.0 / y1.size()));
  CHECK(std::fabs(m2 - 3.0) < 3 * std::sqrt(3.0 / y2.size()));
  CHECK(sample_corr(y1, y2) > 3 * corr_se(0.0, y1.size()));
}

TEST_CASE("stationary gaussian law") {
  const Network net = gen_sbm(6, 2, 8);
  const ModelSpec spec = ModelSpec::linear(Domain::Continuous, 1.5, 0.4, 0.5);
  const auto [mu, cov] = stationary_init_linear_gaussian(spec, net, 1.0);
  const Eigen::MatrixXd g = 0.4 * net.dense_w() + 0.5 * Eigen::MatrixXd::Identity(6, 6);
  const Eigen::VectorXd mu_ref = (Eigen::MatrixXd::Identity(6, 6) - g).inverse() * Eigen::VectorXd::Constant(6, 1.5);
  CHECK((mu - mu_ref).cwiseAbs().maxCoeff() < 1e-12);
  EdgeList cycle;
  for (int i = 0; i < 6; ++i) cycle.emplace_back(i, (i + 1) % 6);
  const auto law = stationary_init_linear_gaussian(spec, row_normalize(cycle, 6), 1.0);
  CHECK((law.first.array() - 15.0).abs().maxCoeff() < 1e-12);
  CHECK((cov - g * cov * g.transpose() - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-9);

  // vec(Sigma) = (I - G (x) G)^-1 vec(I).
  const Eigen::MatrixXd kron = Eigen::kroneckerProduct(g, g);
  const Eigen::MatrixXd id6 = Eigen::MatrixXd::Identity(6, 6);
  const Eigen::VectorXd vec_i = Eigen::Map<const Eigen::VectorXd>(id6.data(), 36);
  const Eigen::VectorXd vec_s = (Eigen::MatrixXd::Identity(36, 36) - kron).lu().solve(vec_i);
  const Eigen::MatrixXd ref = Eigen::Map<const Eigen::MatrixXd>(vec_s.data(), 6, 6);
  CHECK((cov - ref).cwiseAbs().maxCoeff() < 1e-8);

  // No edges: G = b2 I and Sigma = sigma^2 / (1 - b2^2) I.
  const Network empty = gen_er(4, 0.0, 1);
  const auto [mu0, cov0] = stationary_init_linear_gaussian(ModelSpec::linear(Domain::Continuous, 1, 0.4, 0.5), empty, 2.0);
  CHECK((cov0 - 4.0 / 0.75 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(mu0[0] == doctest::Approx(2.0));
}

TEST_CASE("gaussian simulation contracts") {
  const Network net = gen_sbm(10, 2, 4);
  const ModelSpec spec = ModelSpec::linear(Domain::Continuous, 1.5, 0.4, 0.5);
  SimConfig cfg;
  cfg.T = 20;
  cfg.seed = 9;
  const Panel a = simulate_gaussian(spec, net, cfg), b = simulate_gaussian(spec, net, cfg);
  CHECK(a.values == b.values);
  CHECK(a.periods() == 20);

  SimConfig still = cfg;
  still.sigma = 0.0;
  still.burn_in = 0;
  still.init = InitKind::Fixed;
  still.init_values = Eigen::VectorXd::Constant(10, 15.0);
  const Panel s = simulate_gaussian(spec, net, still);
  CHECK((s.values.array() - 15.0).abs().maxCoeff() < 1e-12);

  SimConfig stat = cfg;
  stat.init = InitKind::Stationary;
  CHECK_THROWS_AS(simulate_gaussian(ModelSpec::stnar(Domain::Continuous, 1, 0.3, 0.2, 0.5, 1), net, stat),
                  std::invalid_argument);
  stat.init = InitKind::LinearStationary;
  CHECK_NOTHROW(simulate_gaussian(ModelSpec::stnar(Domain::Continuous, 1, 0.3, 0.2, 0.5, 1), net, stat));
  CHECK_THROWS(simulate_gaussian(ModelSpec::linear(Domain::Count, 1, 0.3, 0.2), net, cfg));
}

TEST_CASE("count simulation contracts") {
  const Network net = gen_sbm(10, 2, 4);
  SimConfig cfg;
  cfg.T = 1;
  cfg.burn_in = 0;
  cfg.init = InitKind::Zero;
  const Panel z = simulate_count(ModelSpec::linear(Domain::Count, 0.0, 0.3, 0.2), net, parse_copula("indep"), cfg);
  CHECK(z.values.isZero());

  SimConfig run;
  run.T = 50;
  run.seed = 12;
  const ModelSpec spec = ModelSpec::linear(Domain::Count, 1, 0.3, 0.2);
  const CopulaSpec cop = parse_copula("gaussian-ar1:0.5");
  const Panel a = simulate_count(spec, net, cop, run), b = simulate_count(spec, net, cop, run);
  CHECK(a.values == b.values);
  CHECK_NOTHROW(a.validate());
  CHECK_THROWS(simulate_count(ModelSpec::linear(Domain::Count, 1, 0.9, 0.9), net, cop, run));
}
