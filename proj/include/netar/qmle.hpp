#pragma once

#include <string>

#include <Eigen/Dense>

#include "netar/dgp.hpp"
#include "netar/model.hpp"
#include "netar/network.hpp"

namespace netar {

/// A panel paired with its network regressor X = W Y, column by column.
///
/// Likelihood terms run over columns t = 1..T-1; column 0 only conditions.
struct LaggedPanel {
  Eigen::MatrixXd y;
  Eigen::MatrixXd x;
  Domain domain = Domain::Count;

  LaggedPanel(const Panel& panel, const Network& net);

  int nodes() const { return static_cast<int>(y.rows()); }
  int steps() const { return static_cast<int>(y.cols()) - 1; }
  /// Number of likelihood terms N (T - 1).
  double nt() const { return static_cast<double>(nodes()) * steps(); }
};

/// Everything one pass over the panel produces at a parameter value.
///
/// Count: l = sum Y log(lambda) - lambda. Continuous: l = -1/2 sum (Y - lambda)^2.
/// `hessian` is minus the second derivative of l, `per_time` holds the score
/// contributions s_t as columns and `opg` = sum_t s_t s_t'.
struct QuasiLik {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian;
  Eigen::MatrixXd opg;
  Eigen::MatrixXd per_time;
  /// Count only: sum lambda^-1 d d', the expected-information surrogate.
  Eigen::MatrixXd fisher;
};

/// Intensities below this make a count-domain parameter inadmissible.
inline constexpr double kMinIntensity = 1e-10;

/// Throws std::domain_error when a count intensity falls below kMinIntensity.
QuasiLik evaluate_quasi_lik(const LaggedPanel& data, const ModelSpec& spec, bool with_hessian = true);

double poisson_quasi_loglik(const Panel& panel, const Network& net, const ModelSpec& spec);
Eigen::VectorXd poisson_score(const Panel& panel, const Network& net, const ModelSpec& spec);
/// m x (T-1) matrix of per-time score contributions.
Eigen::MatrixXd poisson_score_by_time(const Panel& panel, const Network& net, const ModelSpec& spec);
Eigen::MatrixXd poisson_hessian(const Panel& panel, const Network& net, const ModelSpec& spec);

double ls_quasi_loglik(const Panel& panel, const Network& net, const ModelSpec& spec);
Eigen::VectorXd ls_score(const Panel& panel, const Network& net, const ModelSpec& spec);
Eigen::MatrixXd ls_hessian(const Panel& panel, const Network& net, const ModelSpec& spec);

struct SandwichResult {
  Eigen::MatrixXd cov;
  Eigen::VectorXd se;
  int jitter_applied = 0;
};

/// H^-1 B H^-1. A non-positive-definite H gets up to two ridges of
/// 1e-8 * trace(H) / m; std::runtime_error if it is still singular.
SandwichResult sandwich_cov(const Eigen::MatrixXd& hessian, const Eigen::MatrixXd& opg);

enum class FitMethod { OLS, QMLE };

struct FitResult {
  ModelSpec spec;
  Eigen::VectorXd theta_hat;
  double loglik = 0.0;
  Eigen::VectorXd score_at_opt;
  Eigen::MatrixXd hessian;
  Eigen::MatrixXd opg;
  Eigen::MatrixXd cov;
  Eigen::VectorXd se;
  int iterations = 0;
  bool converged = false;
  FitMethod method = FitMethod::QMLE;
  int jitter_applied = 0;
  /// Moment estimate of the error variance (OLS only).
  double sigma2 = 0.0;
  double nt = 0.0;
};

std::string method_name(FitMethod m);

/// Least squares of Y_t on (1, X_{t-1}, Y_{t-1}). Throws on rank deficiency.
FitResult ols_fit_linear(const Panel& panel, const Network& net);
FitResult ols_fit_linear(const LaggedPanel& data);

struct QmleOptions {
  int max_iter = 200;
  /// Converged when max |score| < score_tol * N(T-1) ...
  double score_tol = 1e-12;
  /// ... or when the largest coordinate step is below step_tol.
  double step_tol = 1e-9;
  /// Box for count-domain coordinates.
  double lower = 1e-8;
};

/// Start used when none is given: b0 = 0.6 mean(Y), b1 = b2 = 0.2, other
/// free coordinates at the lower box edge (count) or zero (continuous).
ModelSpec default_start(const LaggedPanel& data, const ModelSpec& shape);

/// Newton ascent on the quasi-likelihood with step halving and projection
/// onto the box. Nuisance coordinates of `start` are held fixed. Fisher
/// scoring replaces Newton whenever H is not positive definite. A run that
/// hits max_iter returns its best iterate with converged = false.
FitResult qmle_fit(const LaggedPanel& data, const ModelSpec& start, const QmleOptions& opts = {});
FitResult qmle_fit(const Panel& panel, const Network& net, const ModelSpec& start, const QmleOptions& opts = {});

/// The constrained null estimate used by the tests: OLS for continuous
/// panels, Poisson QMLE of the linear model for counts.
FitResult fit_linear_null(const LaggedPanel& data);

}  // namespace netar
