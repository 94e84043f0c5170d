#include "netar/lintest.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace netar {

Eigen::MatrixXd sigma_correction(const Eigen::MatrixXd& h, const Eigen::MatrixXd& b, int m1) {
  const auto m = h.rows();
  if (h.cols() != m || b.rows() != m || b.cols() != m) throw std::invalid_argument("sigma_correction: dimension mismatch");
  if (m1 < 1 || m1 >= m) throw std::invalid_argument("sigma_correction: block size out of range");
  const auto m2 = m - m1;
  const Eigen::MatrixXd h11 = h.topLeftCorner(m1, m1);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(h11);
  if (!lu.isInvertible()) throw std::invalid_argument("sigma_correction: H11 is singular");
  // A = H21 H11^-1, so the four terms read B22 - A B12 - B21 A' + A B11 A'.
  const Eigen::MatrixXd a = lu.solve(h.topRightCorner(m1, m2)).transpose();
  const Eigen::MatrixXd b12 = b.topRightCorner(m1, m2);
  Eigen::MatrixXd sigma = b.bottomRightCorner(m2, m2) - a * b12 - b12.transpose() * a.transpose() +
                          a * b.topLeftCorner(m1, m1) * a.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

LmValue lm_from_blocks(const Eigen::VectorXd& partial_score, const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != partial_score.size() || sigma.cols() != partial_score.size())
    throw std::invalid_argument("lm_from_blocks: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (sigma + sigma.transpose()));
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = values.maxCoeff();
  if (!(top > 0.0)) throw std::runtime_error("lm_from_blocks: Sigma has no positive eigenvalue");
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * partial_score;
  LmValue out;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values[k] <= 1e-12 * top) {
      ++out.rank_deficiency;
      continue;
    }
    out.statistic += proj[k] * proj[k] / values[k];
  }
  return out;
}

double chi2_sf(double x, int df) {
  if (df < 1) throw std::invalid_argument("chi2_sf: df must be at least 1");
  if (!(x >= 0.0)) throw std::invalid_argument("chi2_sf: statistic must be nonnegative");
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

TestResult lm_test(const LaggedPanel& data, const FitResult& null_fit) {
  if (!null_fit.converged) throw std::runtime_error("lm_test: null fit did not converge");
  const ModelSpec& f = null_fit.spec;
  const ModelSpec alt = ModelSpec::drift(data.domain, f.b0(), f.b1(), f.b2(), 0.0);
  const QuasiLik q = evaluate_quasi_lik(data, alt, true);

  TestResult out;
  out.df = alt.nonlinear_size();
  out.partial_score = q.score.tail(out.df);
  out.sigma_used = data.domain == Domain::Count ? sigma_correction(q.hessian, q.opg, kLinearSize)
                                                : sigma_correction(q.opg, q.opg, kLinearSize);
  out.statistic = lm_from_blocks(out.partial_score, out.sigma_used).statistic;
  out.p_value = chi2_sf(out.statistic, out.df);
  out.null_fit = null_fit;
  return out;
}

TestResult lm_test(const LaggedPanel& data) { return lm_test(data, fit_linear_null(data)); }

TestResult lm_test(const Panel& panel, const Network& net) { return lm_test(LaggedPanel(panel, net)); }

}  // namespace netar
