#include "netar/qmle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace netar {

LaggedPanel::LaggedPanel(const Panel& panel, const Network& net) : y(panel.values), domain(panel.domain) {
  if (panel.nodes() != net.size())
    throw std::invalid_argument("panel has " + std::to_string(panel.nodes()) + " nodes, network has " +
                                std::to_string(net.size()));
  if (panel.periods() < 2) throw std::invalid_argument("panel needs at least two time points");
  x = net.apply_columns(y);
}

QuasiLik evaluate_quasi_lik(const LaggedPanel& data, const ModelSpec& spec, bool with_hessian) {
  if (spec.domain != data.domain) throw std::invalid_argument("model and panel domains differ");
  spec.validate();
  const int m = spec.free_size();
  const int n = data.nodes();
  const int steps = data.steps();
  const bool count = data.domain == Domain::Count;
  const bool curved = with_hessian && has_curvature(spec);

  QuasiLik out;
  out.score = Eigen::VectorXd::Zero(m);
  out.per_time = Eigen::MatrixXd::Zero(m, steps);
  out.hessian = Eigen::MatrixXd::Zero(m, m);
  if (count) out.fisher = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd d(m);

  for (int t = 1; t <= steps; ++t) {
    auto s_t = out.per_time.col(t - 1);
    for (int i = 0; i < n; ++i) {
      const double xv = data.x(i, t - 1);
      const double yv = data.y(i, t - 1);
      const double obs = data.y(i, t);
      const double lambda = cond_mean_cell(spec, xv, yv);
      cond_mean_grad_cell(spec, xv, yv, d.data());
      double resid_weight;  // multiplies d in the score
      double outer_weight;  // multiplies d d' in H
      if (count) {
        if (!(lambda >= kMinIntensity))
          throw std::domain_error("conditional mean " + std::to_string(lambda) + " below admissible floor");
        out.loglik += (obs > 0.0 ? obs * std::log(lambda) : 0.0) - lambda;
        resid_weight = obs / lambda - 1.0;
        outer_weight = obs / (lambda * lambda);
      } else {
        const double e = obs - lambda;
        out.loglik -= 0.5 * e * e;
        resid_weight = e;
        outer_weight = 1.0;
      }
      s_t.noalias() += resid_weight * d;
      if (!with_hessian) continue;
      out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(d, outer_weight);
      if (count) out.fisher.selfadjointView<Eigen::Lower>().rankUpdate(d, 1.0 / lambda);
      if (curved) {
        cond_mean_hess_cell(spec, xv, yv, d2);
        out.hessian.triangularView<Eigen::Lower>() -= resid_weight * d2;
      }
    }
  }
  out.score = out.per_time.rowwise().sum();
  out.opg = Eigen::MatrixXd::Zero(m, m);
  out.opg.selfadjointView<Eigen::Lower>().rankUpdate(out.per_time);
  out.opg = out.opg.selfadjointView<Eigen::Lower>();
  if (with_hessian) {
    out.hessian = out.hessian.selfadjointView<Eigen::Lower>();
    if (count) out.fisher = out.fisher.selfadjointView<Eigen::Lower>();
  }
  return out;
}

namespace {

LaggedPanel checked(const Panel& panel, const Network& net, Domain domain) {
  if (panel.domain != domain)
    throw std::invalid_argument(std::string("expected a ") + std::string(domain_name(domain)) + " panel");
  return LaggedPanel(panel, net);
}

}  // namespace

double poisson_quasi_loglik(const Panel& panel, const Network& net, const ModelSpec& spec) {
  return evaluate_quasi_lik(checked(panel, net, Domain::Count), spec, false).loglik;
}

Eigen::VectorXd poisson_score(const Panel& panel, const Network& net, const ModelSpec& spec) {
  return evaluate_quasi_lik(checked(panel, net, Domain::Count), spec, false).score;
}

Eigen::MatrixXd poisson_score_by_time(const Panel& panel, const Network& net, const ModelSpec& spec) {
  return evaluate_quasi_lik(checked(panel, net, Domain::Count), spec, false).per_time;
}

Eigen::MatrixXd poisson_hessian(const Panel& panel, const Network& net, const ModelSpec& spec) {
  return evaluate_quasi_lik(checked(panel, net, Domain::Count), spec, true).hessian;
}

double ls_quasi_loglik(const Panel& panel, const Network& net, const ModelSpec& spec) {
  return evaluate_quasi_lik(checked(panel, net, Domain::Continuous), spec, false).loglik;
}

Eigen::VectorXd ls_score(const Panel& panel, const Network& net, const ModelSpec& spec) {
  return evaluate_quasi_lik(checked(panel, net, Domain::Continuous), spec, false).score;
}

Eigen::MatrixXd ls_hessian(const Panel& panel, const Network& net, const ModelSpec& spec) {
  return evaluate_quasi_lik(checked(panel, net, Domain::Continuous), spec, true).hessian;
}

SandwichResult sandwich_cov(const Eigen::MatrixXd& hessian, const Eigen::MatrixXd& opg) {
  const auto m = hessian.rows();
  if (hessian.cols() != m || opg.rows() != m || opg.cols() != m)
    throw std::invalid_argument("sandwich_cov: dimension mismatch");
  Eigen::MatrixXd h = 0.5 * (hessian + hessian.transpose());
  const double ridge = 1e-8 * std::abs(h.trace()) / static_cast<double>(m);
  SandwichResult out;
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  while (llt.info() != Eigen::Success) {
    if (out.jitter_applied == 2 || !(ridge > 0.0)) throw std::runtime_error("sandwich_cov: Hessian is singular");
    h.diagonal().array() += ridge;
    ++out.jitter_applied;
    llt.compute(h);
  }
  const Eigen::MatrixXd hinv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  out.cov = hinv * opg * hinv;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.se = out.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

std::string method_name(FitMethod m) { return m == FitMethod::OLS ? "OLS" : "QMLE"; }

namespace {

void fill_inference(FitResult& fit, const QuasiLik& q) {
  fit.loglik = q.loglik;
  fit.score_at_opt = q.score;
  fit.hessian = q.hessian;
  fit.opg = q.opg;
  const auto sw = sandwich_cov(q.hessian, q.opg);
  fit.cov = sw.cov;
  fit.se = sw.se;
  fit.jitter_applied = sw.jitter_applied;
}

}  // namespace

FitResult ols_fit_linear(const LaggedPanel& data) {
  if (data.domain != Domain::Continuous) throw std::invalid_argument("ols_fit_linear: continuous panel required");
  if (data.steps() < 2) throw std::invalid_argument("ols_fit_linear: need at least three time points");
  const int n = data.nodes();
  const int steps = data.steps();
  const Eigen::Index rows = static_cast<Eigen::Index>(n) * steps;
  Eigen::MatrixXd design(rows, kLinearSize);
  Eigen::VectorXd response(rows);
  for (int t = 1; t <= steps; ++t) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(t - 1) * n;
    design.block(r0, 0, n, 1).setOnes();
    design.block(r0, 1, n, 1) = data.x.col(t - 1);
    design.block(r0, 2, n, 1) = data.y.col(t - 1);
    response.segment(r0, n) = data.y.col(t);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < kLinearSize) throw std::runtime_error("ols_fit_linear: design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(response);

  FitResult fit;
  fit.method = FitMethod::OLS;
  fit.spec = ModelSpec::linear(Domain::Continuous, beta[0], beta[1], beta[2]);
  fit.theta_hat = beta;
  fit.converged = true;
  fit.nt = data.nt();
  fit.sigma2 = (response - design * beta).squaredNorm() / fit.nt;
  fill_inference(fit, evaluate_quasi_lik(data, fit.spec));
  return fit;
}

FitResult ols_fit_linear(const Panel& panel, const Network& net) {
  return ols_fit_linear(checked(panel, net, Domain::Continuous));
}

ModelSpec default_start(const LaggedPanel& data, const ModelSpec& shape) {
  ModelSpec start = shape;
  start.domain = data.domain;
  const double floor = data.domain == Domain::Count ? 1e-8 : 0.0;
  double mean = data.y.rightCols(data.steps()).mean();
  if (data.domain == Domain::Count) mean = std::max(mean, 1e-4);
  start.theta[0] = 0.6 * mean;
  start.theta[1] = 0.2;
  start.theta[2] = 0.2;
  for (int g = kLinearSize; g < start.free_size(); ++g) start.theta[g] = floor;
  return start;
}

FitResult qmle_fit(const LaggedPanel& data, const ModelSpec& start, const QmleOptions& opts) {
  if (start.domain != data.domain) throw std::invalid_argument("qmle_fit: start and panel domains differ");
  start.validate();
  const bool boxed = data.domain == Domain::Count;
  const int m = start.free_size();
  auto project = [&](Eigen::VectorXd v) {
    if (boxed) v = v.cwiseMax(opts.lower);
    return v;
  };
  auto try_eval = [&](const ModelSpec& s, bool hess, QuasiLik& out) {
    try {
      out = evaluate_quasi_lik(data, s, hess);
      return std::isfinite(out.loglik);
    } catch (const std::domain_error&) {
      return false;
    }
  };

  FitResult fit;
  fit.method = FitMethod::QMLE;
  fit.nt = data.nt();
  Eigen::VectorXd theta = project(start.free_params());
  ModelSpec current = start.with_free_params(theta);
  QuasiLik q;
  if (!try_eval(current, true, q)) throw std::invalid_argument("qmle_fit: start value is inadmissible");

  const double score_tol = opts.score_tol * data.nt();
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (q.score.cwiseAbs().maxCoeff() < score_tol) {
      fit.converged = true;
      break;
    }
    Eigen::VectorXd direction;
    Eigen::LLT<Eigen::MatrixXd> llt(q.hessian);
    if (llt.info() == Eigen::Success) {
      direction = llt.solve(q.score);
    } else {
      Eigen::MatrixXd fallback = boxed ? q.fisher : q.hessian;
      const double ridge = 1e-8 * std::abs(fallback.trace()) / m + 1e-300;
      for (int k = 0; k < 3 && llt.compute(fallback).info() != Eigen::Success; ++k)
        fallback.diagonal().array() += ridge * std::pow(10.0, k);
      if (llt.info() != Eigen::Success) break;
      direction = llt.solve(q.score);
    }

    // Judged on the undamped step so heavy halving never passes for convergence.
    const double full_step = (project(theta + direction) - theta).cwiseAbs().maxCoeff();
    bool accepted = false;
    double scale = 1.0;
    for (int half = 0; half < 40; ++half, scale *= 0.5) {
      const Eigen::VectorXd candidate = project(theta + scale * direction);
      const ModelSpec trial = current.with_free_params(candidate);
      QuasiLik qc;
      if (!try_eval(trial, true, qc)) continue;
      if (qc.loglik >= q.loglik - 1e-12 * std::abs(q.loglik)) {
        theta = candidate;
        current = trial;
        q = std::move(qc);
        accepted = true;
        fit.iterations = iter + 1;
        if (full_step < opts.step_tol) fit.converged = true;
        break;
      }
    }
    if (!accepted || fit.converged) break;
  }
  if (!fit.converged && q.score.cwiseAbs().maxCoeff() < score_tol) fit.converged = true;

  fit.spec = current;
  fit.theta_hat = theta;
  fill_inference(fit, q);
  return fit;
}

FitResult qmle_fit(const Panel& panel, const Network& net, const ModelSpec& start, const QmleOptions& opts) {
  return qmle_fit(LaggedPanel(panel, net), start, opts);
}

FitResult fit_linear_null(const LaggedPanel& data) {
  if (data.domain == Domain::Continuous) return ols_fit_linear(data);
  return qmle_fit(data, default_start(data, ModelSpec::linear(Domain::Count, 1.0, 0.0, 0.0)));
}

}  // namespace netar
