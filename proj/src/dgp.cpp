#include "netar/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace netar {

Eigen::MatrixXd CopulaSpec::correlation(int n) const {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
  if (structure == CopulaStructure::Identity) return r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) r(i, j) = structure == CopulaStructure::AR1 ? std::pow(rho, std::abs(i - j)) : rho;
  return r;
}

CopulaSpec parse_copula(std::string_view text) {
  if (text == "indep" || text == "identity") return {};
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  if (colon == std::string_view::npos) throw std::invalid_argument("copula: expected KIND:RHO, got '" + std::string(text) + "'");
  CopulaSpec cop;
  if (head == "gaussian-ar1") {
    cop.structure = CopulaStructure::AR1;
  } else if (head == "gaussian-exch") {
    cop.structure = CopulaStructure::Exchangeable;
  } else {
    throw std::invalid_argument("copula: unknown kind '" + std::string(head) + "'");
  }
  const std::string rho(text.substr(colon + 1));
  std::size_t used = 0;
  try {
    cop.rho = std::stod(rho, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != rho.size()) throw std::invalid_argument("copula: bad rho '" + rho + "'");
  if (!(cop.rho > -1.0 && cop.rho < 1.0)) throw std::invalid_argument("copula: rho must lie in (-1,1)");
  return cop;
}

std::string format_copula(const CopulaSpec& cop) {
  if (cop.structure == CopulaStructure::Identity) return "indep";
  std::ostringstream os;
  os.precision(17);
  os << (cop.structure == CopulaStructure::AR1 ? "gaussian-ar1:" : "gaussian-exch:") << cop.rho;
  return os.str();
}

GaussianCopula::GaussianCopula(const CopulaSpec& spec, int n) : spec_(spec), n_(n) {
  if (n < 1) throw std::invalid_argument("GaussianCopula: dimension must be positive");
  if (spec.structure == CopulaStructure::Identity) return;
  if (!(spec.rho > -1.0 && spec.rho < 1.0)) throw std::invalid_argument("GaussianCopula: rho must lie in (-1,1)");
  if (spec.structure == CopulaStructure::AR1) {
    ar_scale_ = std::sqrt(1.0 - spec.rho * spec.rho);
    return;
  }
  exch_sub_.resize(n);
  exch_diag_.resize(n);
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    const double d2 = 1.0 - s;
    if (!(d2 > 1e-14))
      throw std::invalid_argument("GaussianCopula: exchangeable correlation is not positive definite for rho=" +
                                  std::to_string(spec.rho) + ", n=" + std::to_string(n));
    exch_diag_[j] = std::sqrt(d2);
    exch_sub_[j] = (spec.rho - s) / exch_diag_[j];
    s += exch_sub_[j] * exch_sub_[j];
  }
}

void GaussianCopula::draw_normals(Stream& stream, double* z) const {
  switch (spec_.structure) {
    case CopulaStructure::Identity:
      for (int i = 0; i < n_; ++i) z[i] = stream.normal();
      return;
    case CopulaStructure::AR1:
      z[0] = stream.normal();
      for (int i = 1; i < n_; ++i) z[i] = spec_.rho * z[i - 1] + ar_scale_ * stream.normal();
      return;
    case CopulaStructure::Exchangeable: {
      double run = 0.0;
      for (int i = 0; i < n_; ++i) {
        const double e = stream.normal();
        z[i] = run + exch_diag_[i] * e;
        run += exch_sub_[i] * e;
      }
      return;
    }
  }
}

Eigen::VectorXd GaussianCopula::draw_uniform(Stream& stream) const {
  Eigen::VectorXd u(n_);
  draw_normals(stream, u.data());
  for (int i = 0; i < n_; ++i) u[i] = normal_cdf(u[i]);
  return u;
}

Eigen::MatrixXd GaussianCopula::cholesky() const {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n_, n_);
  switch (spec_.structure) {
    case CopulaStructure::Identity:
      l.setIdentity();
      break;
    case CopulaStructure::AR1:
      for (int i = 0; i < n_; ++i) {
        l(i, 0) = std::pow(spec_.rho, i);
        for (int k = 1; k <= i; ++k) l(i, k) = ar_scale_ * std::pow(spec_.rho, i - k);
      }
      break;
    case CopulaStructure::Exchangeable:
      for (int i = 0; i < n_; ++i) {
        for (int k = 0; k < i; ++k) l(i, k) = exch_sub_[k];
        l(i, i) = exch_diag_[i];
      }
      break;
  }
  return l;
}

Eigen::VectorXd draw_copula_uniform(const CopulaSpec& cop, int n, Stream& stream) {
  return GaussianCopula(cop, n).draw_uniform(stream);
}

Eigen::VectorXd copula_poisson_draw(const Eigen::VectorXd& lambda, const GaussianCopula& cop, Stream& stream) {
  const int n = static_cast<int>(lambda.size());
  if (n != cop.size()) throw std::invalid_argument("copula_poisson_draw: intensity length does not match copula");
  double max_lambda = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(lambda[i]) || lambda[i] < 0.0)
      throw std::invalid_argument("copula_poisson_draw: intensities must be finite and nonnegative");
    max_lambda = std::max(max_lambda, lambda[i]);
  }
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
  if (max_lambda == 0.0) return counts;

  const double cap = 10.0 * (max_lambda + 10.0 * std::sqrt(max_lambda) + 50.0);
  std::vector<double> arrival(n, 0.0);
  std::vector<double> z(n);
  for (long events = 1;; ++events) {
    if (static_cast<double>(events) > cap)
      throw std::runtime_error("copula_poisson_draw: event cap exceeded (max intensity " + std::to_string(max_lambda) +
                               ")");
    cop.draw_normals(stream, z.data());
    double min_arrival = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      arrival[i] -= std::log(normal_cdf(z[i]));
      if (arrival[i] <= lambda[i]) counts[i] += 1.0;
      min_arrival = std::min(min_arrival, arrival[i]);
    }
    if (min_arrival > max_lambda) break;
  }
  return counts;
}

Eigen::VectorXd copula_poisson_draw(const Eigen::VectorXd& lambda, const CopulaSpec& cop, Stream& stream) {
  return copula_poisson_draw(lambda, GaussianCopula(cop, static_cast<int>(lambda.size())), stream);
}

void Panel::validate() const {
  if (values.rows() < 1 || values.cols() < 1) throw std::invalid_argument("Panel: empty");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != values.rows())
    throw std::invalid_argument("Panel: label count does not match node count");
  for (Eigen::Index t = 0; t < values.cols(); ++t) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      const double v = values(i, t);
      if (!std::isfinite(v)) throw std::invalid_argument("Panel: non-finite value");
      if (domain == Domain::Count && (v < 0.0 || v != std::floor(v)))
        throw std::invalid_argument("Panel: count panels hold nonnegative integers only");
    }
  }
}

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> out(n);
  for (int i = 0; i < n; ++i) out[i] = "n" + std::to_string(i);
  return out;
}

void SimConfig::validate() const {
  if (T < 1) throw std::invalid_argument("SimConfig: T must be at least 1");
  if (burn_in < 0) throw std::invalid_argument("SimConfig: burn_in must be nonnegative");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("SimConfig: sigma must be nonnegative");
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> stationary_init_linear_gaussian(const ModelSpec& linear,
                                                                            const Network& net, double sigma) {
  if (linear.family != Family::Linear) throw std::invalid_argument("stationary law: linear model required");
  if (!(sigma > 0.0)) throw std::invalid_argument("stationary law: sigma must be positive");
  const double b0 = linear.b0(), b1 = linear.b1(), b2 = linear.b2();
  if (std::abs(b1) + std::abs(b2) >= 1.0)
    throw std::invalid_argument("stationary law: |b1|+|b2| >= 1, no stationary solution guaranteed");
  const int n = net.size();
  Eigen::MatrixXd a = b1 * net.dense_w();
  a.diagonal().array() += b2;
  // (I - G) mu = b0 1; zero-degree rows of W make mu differ from b0 / (1 - b1 - b2).
  const Eigen::VectorXd mu =
      (Eigen::MatrixXd::Identity(n, n) - a).partialPivLu().solve(Eigen::VectorXd::Constant(n, b0));
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n) * (sigma * sigma);
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::MatrixXd step = a * cov * a.transpose();
    cov += step;
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
    a = a * a;
  }
  cov = 0.5 * (cov + cov.transpose());
  return {mu, cov};
}

GaussianLaw prepare_stationary_law(const ModelSpec& linear, const Network& net, double sigma) {
  auto [mu, cov] = stationary_init_linear_gaussian(linear, net, sigma);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("stationary law: covariance is not positive definite");
  return {std::move(mu), std::move(cov), llt.matrixL()};
}

namespace {

Eigen::VectorXd linear_mean(const ModelSpec& spec, int n) {
  const double denom = 1.0 - spec.b1() - spec.b2();
  if (!(denom > 0.0)) throw std::invalid_argument("simulate: embedded linear model has no finite mean");
  return Eigen::VectorXd::Constant(n, spec.b0() / denom);
}

Eigen::VectorXd fixed_init(const SimConfig& cfg, int n, double fallback) {
  if (cfg.init_values.size() == 0) return Eigen::VectorXd::Constant(n, fallback);
  if (cfg.init_values.size() != n) throw std::invalid_argument("simulate: init vector length does not match network");
  return cfg.init_values;
}

void require_finite(const Eigen::VectorXd& v, int step) {
  if (!v.allFinite())
    throw std::runtime_error("simulate: non-finite conditional mean at step " + std::to_string(step) +
                             " (explosive parameters?)");
}

}  // namespace

Panel simulate_gaussian(const ModelSpec& spec, const Network& net, const SimConfig& cfg, const GaussianLaw* law) {
  if (spec.domain != Domain::Continuous) throw std::invalid_argument("simulate_gaussian: continuous model required");
  spec.validate();
  cfg.validate();
  const int n = net.size();
  InitKind init = cfg.init;
  if (init == InitKind::Auto) init = spec.family == Family::Linear ? InitKind::Stationary : InitKind::LinearMean;
  if (init == InitKind::Stationary && spec.family != Family::Linear)
    throw std::invalid_argument("simulate_gaussian: stationary start needs the linear family; use a fixed start with burn-in");

  Stream stream(cfg.seed);
  Eigen::VectorXd y(n);
  int burn = cfg.burn_in;
  switch (init) {
    case InitKind::Stationary:
    case InitKind::LinearStationary: {
      GaussianLaw local;
      if (law == nullptr) {
        local = prepare_stationary_law(spec.linear_part(), net, cfg.sigma);
        law = &local;
      }
      if (law->mean.size() != n) throw std::invalid_argument("simulate_gaussian: law dimension mismatch");
      Eigen::VectorXd e(n);
      for (int i = 0; i < n; ++i) e[i] = stream.normal();
      y = law->mean + law->chol_lower * e;
      burn = 0;
      break;
    }
    case InitKind::Fixed: y = fixed_init(cfg, n, 0.0); break;
    case InitKind::Zero: y.setZero(); break;
    case InitKind::LinearMean:
    case InitKind::Auto: y = linear_mean(spec, n); break;
  }

  Panel panel;
  panel.domain = Domain::Continuous;
  panel.labels = default_labels(n);
  panel.values.resize(n, cfg.T);
  Eigen::VectorXd x(n);
  const int total = burn + cfg.T;
  for (int step = 1; step <= total; ++step) {
    net.apply(y.data(), x.data());
    for (int i = 0; i < n; ++i) y[i] = cond_mean_cell(spec, x[i], y[i]) + cfg.sigma * stream.normal();
    require_finite(y, step);
    if (step > burn) panel.values.col(step - burn - 1) = y;
  }
  return panel;
}

Panel simulate_count(const ModelSpec& spec, const Network& net, const CopulaSpec& cop, const SimConfig& cfg,
                     std::vector<std::string>* warnings) {
  if (spec.domain != Domain::Count) throw std::invalid_argument("simulate_count: count model required");
  spec.validate();
  cfg.validate();
  const int n = net.size();
  if (warnings != nullptr) {
    const auto verdict = stability_check(spec, &net);
    if (!verdict.sufficient_holds) warnings->push_back("stability: " + verdict.condition_name);
  }
  Eigen::VectorXd lambda;
  switch (cfg.init) {
    case InitKind::Auto:
    case InitKind::Fixed: lambda = fixed_init(cfg, n, 1.0); break;
    case InitKind::Zero: lambda = Eigen::VectorXd::Zero(n); break;
    default: throw std::invalid_argument("simulate_count: only fixed or zero starts are defined for counts");
  }

  const GaussianCopula copula(cop, n);
  Stream stream(cfg.seed);
  Eigen::VectorXd y = copula_poisson_draw(lambda, copula, stream);

  Panel panel;
  panel.domain = Domain::Count;
  panel.labels = default_labels(n);
  panel.values.resize(n, cfg.T);
  Eigen::VectorXd x(n);
  const int total = cfg.burn_in + cfg.T;
  for (int step = 1; step <= total; ++step) {
    net.apply(y.data(), x.data());
    for (int i = 0; i < n; ++i) lambda[i] = cond_mean_cell(spec, x[i], y[i]);
    require_finite(lambda, step);
    if (lambda.maxCoeff() > kMaxSimIntensity)
      throw std::runtime_error("simulate: intensity above " + std::to_string(kMaxSimIntensity) + " at step " +
                               std::to_string(step) + " (explosive parameters?)");
    y = copula_poisson_draw(lambda, copula, stream);
    if (step > cfg.burn_in) panel.values.col(step - cfg.burn_in - 1) = y;
  }
  return panel;
}

}  // namespace netar
