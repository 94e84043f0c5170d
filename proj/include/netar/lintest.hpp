#pragma once

#include <string>

#include <Eigen/Dense>

#include "netar/dgp.hpp"
#include "netar/model.hpp"
#include "netar/network.hpp"
#include "netar/qmle.hpp"

namespace netar {

/// Covariance of the partial score S2 after projecting out the estimated
/// linear block:
///   B22 - H21 H11^-1 B12 - B21 H11^-1 H12 + H21 H11^-1 B11 H11^-1 H12.
/// With B = H this is the Schur complement H22 - H21 H11^-1 H12.
Eigen::MatrixXd sigma_correction(const Eigen::MatrixXd& h, const Eigen::MatrixXd& b, int m1);

struct LmValue {
  double statistic = 0.0;
  /// Eigenvalues dropped by the pseudo-inverse.
  int rank_deficiency = 0;
};

/// s' Sigma^+ s with a symmetric eigendecomposition; eigenvalues below
/// 1e-12 * max eigenvalue are discarded. Never negative.
LmValue lm_from_blocks(const Eigen::VectorXd& partial_score, const Eigen::MatrixXd& sigma);

/// Upper tail of the chi-square distribution, Q(df/2, x/2).
double chi2_sf(double x, int df);

struct TestResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::string method = "chi2";
  Eigen::VectorXd partial_score;
  Eigen::MatrixXd sigma_used;
  FitResult null_fit;
};

/// Quasi-score test of the linear model against the intercept-drift
/// alternative (gamma > 0). The null is fitted internally; counts use the
/// full corrected Sigma, continuous panels the OPG form B22 - B21 B11^-1 B12.
/// Throws std::runtime_error when the null fit fails to converge.
TestResult lm_test(const Panel& panel, const Network& net);
TestResult lm_test(const LaggedPanel& data);
/// Same statistic for an already fitted null.
TestResult lm_test(const LaggedPanel& data, const FitResult& null_fit);

}  // namespace netar
