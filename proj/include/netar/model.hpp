#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "netar/network.hpp"

namespace netar {

enum class Family { Linear, InterceptDrift, STNAR, TNAR };
enum class Domain { Count, Continuous };

/// Size of the linear block (b0, b1, b2) that leads every parameter vector.
inline constexpr int kLinearSize = 3;

/// One of the four conditional-mean families together with its parameters.
///
/// Parameter layout (linear block first, always):
///   Linear          (b0, b1, b2)
///   InterceptDrift  (b0, b1, b2, gamma)
///   STNAR           (b0, b1, b2, alpha, gamma)
///   TNAR            (b0, b1, b2, a0, a1, a2, gamma)
///
/// For STNAR and TNAR the trailing gamma is a nuisance coordinate: it is held
/// fixed and never differentiated, so the "free" parameters are theta minus
/// gamma. For InterceptDrift gamma is identifiable and free.
struct ModelSpec {
  Family family = Family::Linear;
  Domain domain = Domain::Count;
  std::vector<double> theta{1.0, 0.0, 0.0};

  static ModelSpec linear(Domain d, double b0, double b1, double b2);
  static ModelSpec drift(Domain d, double b0, double b1, double b2, double gamma);
  static ModelSpec stnar(Domain d, double b0, double b1, double b2, double alpha, double gamma);
  static ModelSpec tnar(Domain d, double b0, double b1, double b2, double a0, double a1, double a2,
                        double gamma);

  int size() const { return static_cast<int>(theta.size()); }
  /// Number of differentiated coordinates (width of the Jacobian).
  int free_size() const;
  /// m2: length of the nonlinear block of theta.
  int nonlinear_size() const { return size() - kLinearSize; }
  bool has_nuisance() const { return family == Family::STNAR || family == Family::TNAR; }

  double b0() const { return theta[0]; }
  double b1() const { return theta[1]; }
  double b2() const { return theta[2]; }
  /// The smoothing/threshold parameter; 0 for Linear.
  double gamma() const { return family == Family::Linear ? 0.0 : theta.back(); }

  Eigen::VectorXd free_params() const;
  ModelSpec with_free_params(const Eigen::VectorXd& free) const;
  ModelSpec with_gamma(double gamma) const;
  /// The embedded linear model (b0, b1, b2).
  ModelSpec linear_part() const;

  /// Throws std::invalid_argument on a malformed or inadmissible vector.
  void validate() const;
};

std::string_view family_name(Family f);
std::string_view domain_name(Domain d);

/// Parses "linear | drift:gamma=G | stnar:alpha=A,gamma=G | tnar:a0=..,a1=..,a2=..,gamma=G".
ModelSpec parse_model_spec(std::string_view text, std::span<const double> beta, Domain domain);
std::string format_model_spec(const ModelSpec& spec);

// Elementwise kernels: x is the network regressor X_{i,t-1}, y the own lag Y_{i,t-1}.

double cond_mean_cell(const ModelSpec& spec, double x, double y);
/// Writes free_size() partial derivatives of the cell mean.
void cond_mean_grad_cell(const ModelSpec& spec, double x, double y, double* out);
/// Second derivatives with respect to the free coordinates (free_size square).
void cond_mean_hess_cell(const ModelSpec& spec, double x, double y, Eigen::Ref<Eigen::MatrixXd> out);
/// True when the cell mean is nonlinear in its free coordinates.
bool has_curvature(const ModelSpec& spec);

/// lambda_i = f_i(X_i, Y_i) with X = W y_prev.
Eigen::VectorXd cond_mean(const ModelSpec& spec, const Network& net, const Eigen::VectorXd& y_prev);

/// N x free_size() Jacobian of the conditional mean.
Eigen::MatrixXd cond_mean_grad(const ModelSpec& spec, const Network& net, const Eigen::VectorXd& y_prev);

struct StabilityVerdict {
  double condition_value = 0.0;
  double threshold = 1.0;
  /// False means the sufficient condition is not met: stability is then
  /// undecided, not refuted.
  bool sufficient_holds = false;
  std::string condition_name;
};

/// Family-specific sufficient contraction condition. TNAR count needs the
/// network for its column-sum norm and throws without one.
StabilityVerdict stability_check(const ModelSpec& spec, const Network* net = nullptr);

}  // namespace netar
