#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netar/model.hpp"
#include "netar/network.hpp"
#include "netar/rng.hpp"

namespace netar {

enum class CopulaStructure { Identity, AR1, Exchangeable };

/// Gaussian copula with correlation R_ij = rho^|i-j| (AR1) or rho (Exchangeable).
struct CopulaSpec {
  CopulaStructure structure = CopulaStructure::Identity;
  double rho = 0.0;

  /// Dense R, for tests and diagnostics.
  Eigen::MatrixXd correlation(int n) const;
};

/// Parses "indep", "gaussian-ar1:RHO" or "gaussian-exch:RHO".
CopulaSpec parse_copula(std::string_view text);
std::string format_copula(const CopulaSpec& cop);

/// A copula bound to a dimension, with its Cholesky factor in closed form.
///
/// Both structured factors cost O(n) per draw: AR1 is a first-order
/// recursion and the exchangeable factor has constant sub-diagonal columns.
class GaussianCopula {
 public:
  /// Throws std::invalid_argument if R is not positive definite.
  GaussianCopula(const CopulaSpec& spec, int n);

  int size() const { return n_; }
  const CopulaSpec& spec() const { return spec_; }

  /// z = L e with e ~ N(0, I) drawn from `stream`.
  void draw_normals(Stream& stream, double* z) const;
  Eigen::VectorXd draw_uniform(Stream& stream) const;

  /// Dense lower factor L (L L' = R), for tests.
  Eigen::MatrixXd cholesky() const;

 private:
  CopulaSpec spec_;
  int n_ = 0;
  double ar_scale_ = 1.0;
  std::vector<double> exch_sub_;
  std::vector<double> exch_diag_;
};

Eigen::VectorXd draw_copula_uniform(const CopulaSpec& cop, int n, Stream& stream);

/// Joint counts with exact Poisson(lambda_i) marginals: unit-rate waiting
/// times -log U with U drawn from the copula, counted up to lambda_i.
Eigen::VectorXd copula_poisson_draw(const Eigen::VectorXd& lambda, const GaussianCopula& cop, Stream& stream);
Eigen::VectorXd copula_poisson_draw(const Eigen::VectorXd& lambda, const CopulaSpec& cop, Stream& stream);

/// N x T observations; column t is time t0 + t.
struct Panel {
  Eigen::MatrixXd values;
  std::vector<std::string> labels;
  Domain domain = Domain::Count;
  int t0 = 0;

  int nodes() const { return static_cast<int>(values.rows()); }
  int periods() const { return static_cast<int>(values.cols()); }

  /// Throws if labels, domain or entries are inconsistent.
  void validate() const;
};

std::vector<std::string> default_labels(int n);

enum class InitKind {
  Auto,        ///< count: Fixed(ones); continuous linear: Stationary; otherwise LinearMean
  Stationary,  ///< Y_0 drawn from the stationary Gaussian law (linear continuous only)
  Fixed,       ///< count: lambda_0 = init; continuous: Y_0 = init
  Zero,
  LinearMean,  ///< Y_0 = mean of the embedded linear model (continuous only)
  /// Y_0 drawn from the stationary law of the embedded linear model, no
  /// burn-in (continuous only); any family.
  LinearStationary,
};

/// Count simulations abort once an intensity exceeds this; the waiting-time
/// draw costs O(lambda) and such paths are explosive anyway.
inline constexpr double kMaxSimIntensity = 1e7;

struct SimConfig {
  int T = 100;
  int burn_in = 300;
  std::uint64_t seed = 0;
  double sigma = 1.0;
  InitKind init = InitKind::Auto;
  Eigen::VectorXd init_values;

  void validate() const;
};

/// Stationary law of the linear Gaussian NAR with its Cholesky factor.
struct GaussianLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd chol_lower;
};

/// Mean (I - G)^-1 beta0 1 and the solution of S = G S G' + sigma^2 I with
/// G = b1 W + b2 I. The Lyapunov equation is solved by the doubling iteration
/// (S += A S A', A <- A^2), stopped when the update is below 1e-10 max-abs.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> stationary_init_linear_gaussian(const ModelSpec& linear,
                                                                            const Network& net, double sigma);
GaussianLaw prepare_stationary_law(const ModelSpec& linear, const Network& net, double sigma);

/// Continuous recursion Y_t = cond_mean(Y_{t-1}) + sigma * e_t. Returns the
/// last T of the simulated steps. A precomputed law skips the Lyapunov solve
/// for stationary starts.
Panel simulate_gaussian(const ModelSpec& spec, const Network& net, const SimConfig& cfg,
                        const GaussianLaw* law = nullptr);

/// Count recursion with copula-Poisson draws: Y_0 ~ draw(lambda_0), then
/// burn_in + T steps of which the last T are returned. When `warnings` is
/// given, a failed stability condition is reported there.
Panel simulate_count(const ModelSpec& spec, const Network& net, const CopulaSpec& cop, const SimConfig& cfg,
                     std::vector<std::string>* warnings = nullptr);

}  // namespace netar
