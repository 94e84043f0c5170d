#include "netar/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace netar {

ModelSpec ModelSpec::linear(Domain d, double b0, double b1, double b2) {
  return {Family::Linear, d, {b0, b1, b2}};
}

ModelSpec ModelSpec::drift(Domain d, double b0, double b1, double b2, double gamma) {
  return {Family::InterceptDrift, d, {b0, b1, b2, gamma}};
}

ModelSpec ModelSpec::stnar(Domain d, double b0, double b1, double b2, double alpha, double gamma) {
  return {Family::STNAR, d, {b0, b1, b2, alpha, gamma}};
}

ModelSpec ModelSpec::tnar(Domain d, double b0, double b1, double b2, double a0, double a1, double a2,
                          double gamma) {
  return {Family::TNAR, d, {b0, b1, b2, a0, a1, a2, gamma}};
}

namespace {

int expected_size(Family f) {
  switch (f) {
    case Family::Linear: return 3;
    case Family::InterceptDrift: return 4;
    case Family::STNAR: return 5;
    case Family::TNAR: return 7;
  }
  return 0;
}

}  // namespace

int ModelSpec::free_size() const { return has_nuisance() ? size() - 1 : size(); }

Eigen::VectorXd ModelSpec::free_params() const {
  Eigen::VectorXd out(free_size());
  for (int g = 0; g < free_size(); ++g) out[g] = theta[g];
  return out;
}

ModelSpec ModelSpec::with_free_params(const Eigen::VectorXd& free) const {
  if (free.size() != free_size()) throw std::invalid_argument("with_free_params: wrong length");
  ModelSpec out = *this;
  for (int g = 0; g < free_size(); ++g) out.theta[g] = free[g];
  return out;
}

ModelSpec ModelSpec::with_gamma(double g) const {
  if (family == Family::Linear) throw std::invalid_argument("with_gamma: linear model has no gamma");
  ModelSpec out = *this;
  out.theta.back() = g;
  return out;
}

ModelSpec ModelSpec::linear_part() const { return linear(domain, theta[0], theta[1], theta[2]); }

void ModelSpec::validate() const {
  if (size() != expected_size(family))
    throw std::invalid_argument("ModelSpec: " + std::string(family_name(family)) + " expects " +
                                std::to_string(expected_size(family)) + " parameters, got " +
                                std::to_string(size()));
  for (double v : theta)
    if (!std::isfinite(v)) throw std::invalid_argument("ModelSpec: non-finite parameter");
  if (domain != Domain::Count) return;
  // TNAR's threshold may sit anywhere; every other count coordinate is nonnegative.
  const int checked = family == Family::TNAR ? size() - 1 : size();
  for (int g = 0; g < checked; ++g)
    if (theta[g] < 0.0) throw std::invalid_argument("ModelSpec: count-domain parameters must be nonnegative");
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Linear: return "linear";
    case Family::InterceptDrift: return "drift";
    case Family::STNAR: return "stnar";
    case Family::TNAR: return "tnar";
  }
  return "?";
}

std::string_view domain_name(Domain d) { return d == Domain::Count ? "count" : "continuous"; }

namespace {

double parse_double(std::string_view s) {
  std::string buf(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(buf, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != buf.size() || buf.empty()) throw std::invalid_argument("model spec: bad number '" + buf + "'");
  return v;
}

}  // namespace

ModelSpec parse_model_spec(std::string_view text, std::span<const double> beta, Domain domain) {
  if (beta.size() != 3) throw std::invalid_argument("model spec: theta needs exactly b0,b1,b2");
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  std::map<std::string, double, std::less<>> kv;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw std::invalid_argument("model spec: expected key=value in '" +
                                                                    std::string(item) + "'");
      kv[std::string(item.substr(0, eq))] = parse_double(item.substr(eq + 1));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  auto take = [&kv](std::string_view key) {
    auto it = kv.find(key);
    if (it == kv.end()) return 0.0;
    const double v = it->second;
    kv.erase(it);
    return v;
  };

  ModelSpec spec;
  if (head == "linear") {
    spec = ModelSpec::linear(domain, beta[0], beta[1], beta[2]);
  } else if (head == "drift") {
    spec = ModelSpec::drift(domain, beta[0], beta[1], beta[2], take("gamma"));
  } else if (head == "stnar") {
    const double alpha = take("alpha");
    spec = ModelSpec::stnar(domain, beta[0], beta[1], beta[2], alpha, take("gamma"));
  } else if (head == "tnar") {
    const double a0 = take("a0");
    const double a1 = take("a1");
    const double a2 = take("a2");
    spec = ModelSpec::tnar(domain, beta[0], beta[1], beta[2], a0, a1, a2, take("gamma"));
  } else {
    throw std::invalid_argument("model spec: unknown family '" + std::string(head) + "'");
  }
  if (!kv.empty()) throw std::invalid_argument("model spec: unknown key '" + kv.begin()->first + "'");
  spec.validate();
  return spec;
}

std::string format_model_spec(const ModelSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << family_name(spec.family);
  const auto& t = spec.theta;
  switch (spec.family) {
    case Family::Linear: break;
    case Family::InterceptDrift: os << ":gamma=" << t[3]; break;
    case Family::STNAR: os << ":alpha=" << t[3] << ",gamma=" << t[4]; break;
    case Family::TNAR: os << ":a0=" << t[3] << ",a1=" << t[4] << ",a2=" << t[5] << ",gamma=" << t[6]; break;
  }
  return os.str();
}

double cond_mean_cell(const ModelSpec& spec, double x, double y) {
  const auto& t = spec.theta;
  switch (spec.family) {
    case Family::Linear:
      return t[0] + t[1] * x + t[2] * y;
    case Family::InterceptDrift: {
      const double base = spec.domain == Domain::Count ? 1.0 + x : 1.0 + std::abs(x);
      return t[0] * std::pow(base, -t[3]) + t[1] * x + t[2] * y;
    }
    case Family::STNAR:
      return t[0] + (t[1] + t[3] * std::exp(-t[4] * x * x)) * x + t[2] * y;
    case Family::TNAR: {
      const double linear = t[0] + t[1] * x + t[2] * y;
      return x <= t[6] ? linear + t[3] + t[4] * x + t[5] * y : linear;
    }
  }
  return 0.0;
}

void cond_mean_grad_cell(const ModelSpec& spec, double x, double y, double* out) {
  const auto& t = spec.theta;
  out[0] = 1.0;
  out[1] = x;
  out[2] = y;
  switch (spec.family) {
    case Family::Linear:
      return;
    case Family::InterceptDrift: {
      const double base = spec.domain == Domain::Count ? 1.0 + x : 1.0 + std::abs(x);
      const double c = std::pow(base, -t[3]);
      out[0] = c;
      out[3] = -t[0] * c * std::log(base);
      return;
    }
    case Family::STNAR:
      out[3] = std::exp(-t[4] * x * x) * x;
      return;
    case Family::TNAR: {
      const double ind = x <= t[6] ? 1.0 : 0.0;
      out[3] = ind;
      out[4] = ind * x;
      out[5] = ind * y;
      return;
    }
  }
}

bool has_curvature(const ModelSpec& spec) { return spec.family == Family::InterceptDrift; }

void cond_mean_hess_cell(const ModelSpec& spec, double x, double /*y*/, Eigen::Ref<Eigen::MatrixXd> out) {
  out.setZero();
  if (spec.family != Family::InterceptDrift) return;
  const auto& t = spec.theta;
  const double base = spec.domain == Domain::Count ? 1.0 + x : 1.0 + std::abs(x);
  const double c = std::pow(base, -t[3]);
  const double l = std::log(base);
  out(0, 3) = out(3, 0) = -c * l;
  out(3, 3) = t[0] * c * l * l;
}

namespace {

void check_inputs(const ModelSpec& spec, const Network& net, const Eigen::VectorXd& y_prev) {
  spec.validate();
  if (y_prev.size() != net.size()) throw std::invalid_argument("cond_mean: y_prev length does not match network");
  for (Eigen::Index i = 0; i < y_prev.size(); ++i) {
    if (!std::isfinite(y_prev[i])) throw std::invalid_argument("cond_mean: non-finite input");
    if (spec.domain == Domain::Count && y_prev[i] < 0.0)
      throw std::invalid_argument("cond_mean: negative count in count domain");
  }
}

}  // namespace

Eigen::VectorXd cond_mean(const ModelSpec& spec, const Network& net, const Eigen::VectorXd& y_prev) {
  check_inputs(spec, net, y_prev);
  const Eigen::VectorXd x = net.apply(y_prev);
  Eigen::VectorXd lambda(net.size());
  for (int i = 0; i < net.size(); ++i) lambda[i] = cond_mean_cell(spec, x[i], y_prev[i]);
  return lambda;
}

Eigen::MatrixXd cond_mean_grad(const ModelSpec& spec, const Network& net, const Eigen::VectorXd& y_prev) {
  check_inputs(spec, net, y_prev);
  const Eigen::VectorXd x = net.apply(y_prev);
  const int m = spec.free_size();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> jac(net.size(), m);
  for (int i = 0; i < net.size(); ++i) cond_mean_grad_cell(spec, x[i], y_prev[i], jac.row(i).data());
  return jac;
}

StabilityVerdict stability_check(const ModelSpec& spec, const Network* net) {
  spec.validate();
  const auto& t = spec.theta;
  const bool count = spec.domain == Domain::Count;
  StabilityVerdict v;
  switch (spec.family) {
    case Family::Linear:
      v.condition_value = count ? t[1] + t[2] : std::abs(t[1]) + std::abs(t[2]);
      v.condition_name = count ? "linear: b1+b2<1" : "linear: |b1|+|b2|<1";
      break;
    case Family::InterceptDrift: {
      const double drift = t[0] * t[3];
      if (count) {
        v.condition_value = std::max(t[1], drift - t[1]) + t[2];
        v.condition_name = "drift: max(b1, b0*gamma-b1)+b2<1";
      } else {
        const double b1bar = std::max({std::abs(t[1]), std::abs(drift - t[1]), std::abs(t[1] - drift)});
        v.condition_value = b1bar + std::abs(t[2]);
        v.condition_name = "drift: max(|b1|,|b0*gamma-b1|,|b1-b0*gamma|)+|b2|<1";
      }
      break;
    }
    case Family::STNAR:
      if (count) {
        v.condition_value = t[1] + t[3] + t[2];
        v.condition_name = "stnar: b1+alpha+b2<1";
      } else {
        v.condition_value = std::max(std::abs(t[1]), std::abs(t[1] + t[3])) + std::abs(t[2]);
        v.condition_name = "stnar: max(|b1|,|b1+alpha|)+|b2|<1";
      }
      break;
    case Family::TNAR:
      if (count) {
        if (net == nullptr) throw std::invalid_argument("stability_check: TNAR count condition needs the network");
        // Column sums of G = (b1+a1) W + (b2+a2) I; W has a zero diagonal.
        std::vector<double> colsum(net->size(), 0.0);
        for (int i = 0; i < net->size(); ++i) {
          auto row = net->neighbors(i);
          for (int j : row) colsum[j] += 1.0 / static_cast<double>(row.size());
        }
        const double max_col = colsum.empty() ? 0.0 : *std::max_element(colsum.begin(), colsum.end());
        v.condition_value = std::abs(t[1] + t[4]) * max_col + std::abs(t[2] + t[5]);
        v.condition_name = "tnar: |||(b1+a1)W+(b2+a2)I|||_1<1";
      } else {
        const double d1 = std::max(std::abs(t[1]), std::abs(t[1] + t[4]));
        const double d2 = std::max(std::abs(t[2]), std::abs(t[2] + t[5]));
        v.condition_value = d1 + d2;
        v.condition_name = "tnar: max(|b1|,|b1+a1|)+max(|b2|,|b2+a2|)<1";
      }
      break;
  }
  v.sufficient_holds = v.condition_value < v.threshold;
  v.condition_name += v.sufficient_holds ? " (holds)" : " (not met: inconclusive)";
  return v;
}

}  // namespace netar
