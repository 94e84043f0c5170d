#include "netar/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "netar/rng.hpp"

namespace netar {

double Network::weight(int i, int j) const {
  auto row = neighbors(i);
  if (std::binary_search(row.begin(), row.end(), j)) return 1.0 / static_cast<double>(row.size());
  return 0.0;
}

void Network::apply(const double* y, double* x) const {
  for (int i = 0; i < n_; ++i) {
    const int begin = offsets_[i];
    const int end = offsets_[i + 1];
    if (begin == end) {
      x[i] = 0.0;
      continue;
    }
    double acc = 0.0;
    for (int k = begin; k < end; ++k) acc += y[targets_[k]];
    x[i] = acc / static_cast<double>(end - begin);
  }
}

Eigen::VectorXd Network::apply(const Eigen::VectorXd& y) const {
  if (y.size() != n_) throw std::invalid_argument("Network::apply: vector length does not match node count");
  Eigen::VectorXd x(n_);
  apply(y.data(), x.data());
  return x;
}

Eigen::MatrixXd Network::apply_columns(const Eigen::MatrixXd& y) const {
  if (y.rows() != n_) throw std::invalid_argument("Network::apply_columns: row count does not match node count");
  Eigen::MatrixXd x(n_, y.cols());
  for (Eigen::Index t = 0; t < y.cols(); ++t) apply(y.col(t).data(), x.col(t).data());
  return x;
}

Eigen::MatrixXd Network::dense_w() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i) {
    auto row = neighbors(i);
    for (int j : row) w(i, j) = 1.0 / static_cast<double>(row.size());
  }
  return w;
}

EdgeList Network::edges() const {
  EdgeList out;
  out.reserve(targets_.size());
  for (int i = 0; i < n_; ++i)
    for (int j : neighbors(i)) out.emplace_back(i, j);
  return out;
}

std::vector<int> Network::zero_degree_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < n_; ++i)
    if (out_degree(i) == 0) out.push_back(i);
  return out;
}

Network row_normalize(const EdgeList& edges, int n, const NormalizeOptions& opts) {
  if (n < 1) throw std::invalid_argument("row_normalize: node count must be positive");
  Network net;
  net.n_ = n;

  std::vector<std::vector<int>> rows(n);
  std::size_t self_loops = 0;
  for (const auto& [i, j] : edges) {
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw std::out_of_range("row_normalize: edge (" + std::to_string(i) + "," + std::to_string(j) +
                              ") outside [0," + std::to_string(n) + ")");
    if (i == j) {
      if (!opts.drop_self_loops)
        throw std::invalid_argument("row_normalize: self-loop on node " + std::to_string(i));
      ++self_loops;
      continue;
    }
    rows[i].push_back(j);
  }
  if (self_loops > 0) net.warnings_.push_back("dropped " + std::to_string(self_loops) + " self-loop(s)");

  std::size_t duplicates = 0;
  net.offsets_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    auto& row = rows[i];
    std::sort(row.begin(), row.end());
    const auto last = std::unique(row.begin(), row.end());
    duplicates += static_cast<std::size_t>(row.end() - last);
    row.erase(last, row.end());
    net.offsets_[i + 1] = net.offsets_[i] + static_cast<int>(row.size());
  }
  net.targets_.reserve(net.offsets_[n]);
  for (const auto& row : rows) net.targets_.insert(net.targets_.end(), row.begin(), row.end());

  if (duplicates > 0) net.warnings_.push_back("merged " + std::to_string(duplicates) + " duplicate edge(s)");
  const auto zeros = net.zero_degree_nodes();
  if (!zeros.empty())
    net.warnings_.push_back(std::to_string(zeros.size()) +
                            " node(s) with zero out-degree; their W rows are zero");
  return net;
}

EdgeList symmetrize(const EdgeList& undirected) {
  EdgeList out;
  out.reserve(2 * undirected.size());
  for (const auto& [i, j] : undirected) {
    out.emplace_back(i, j);
    out.emplace_back(j, i);
  }
  return out;
}

namespace {

// Streams 0 and 1 of a generator seed: block labels and edge coins.
constexpr std::uint64_t kLabelStream = 0;
constexpr std::uint64_t kEdgeStream = 1;

}  // namespace

std::vector<int> sbm_blocks(int n, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("gen_sbm: block count must be at least 1");
  if (k > n) throw std::invalid_argument("gen_sbm: block count exceeds node count");
  Stream labels(derive_seed(seed, kLabelStream));
  std::vector<int> block(n);
  for (auto& b : block) b = static_cast<int>(labels.below(static_cast<std::uint64_t>(k)));
  return block;
}

Network gen_sbm(int n, int k, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_sbm: node count must be positive");
  const auto block = sbm_blocks(n, k, seed);
  const double p_in = std::pow(static_cast<double>(n), -0.3);
  const double p_out = 1.0 / static_cast<double>(n);

  Stream coins(derive_seed(seed, kEdgeStream));
  EdgeList edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = block[i] == block[j] ? p_in : p_out;
      if (coins.uniform() < p) edges.emplace_back(i, j);
    }
  }
  return row_normalize(edges, n);
}

Network gen_er(int n, std::optional<double> p, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_er: node count must be positive");
  const double prob = p.value_or(default_er_probability(n));
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("gen_er: probability outside [0,1]");

  Stream coins(derive_seed(seed, kEdgeStream));
  EdgeList edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (coins.uniform() < prob) edges.emplace_back(i, j);
    }
  }
  return row_normalize(edges, n);
}

NetworkSummary network_summary(const Network& net) {
  NetworkSummary s;
  s.nodes = net.size();
  s.edges = net.edge_count();
  const double n = static_cast<double>(net.size());
  s.density = net.size() > 1 ? static_cast<double>(s.edges) / (n * (n - 1.0)) : 0.0;

  std::vector<int> degree(net.size());
  for (int i = 0; i < net.size(); ++i) {
    degree[i] = net.out_degree(i);
    if (degree[i] == 0) ++s.zero_out_degree;
  }
  std::sort(degree.begin(), degree.end());
  const std::size_t m = degree.size();
  s.median_out_degree = m % 2 == 1 ? degree[m / 2] : 0.5 * (degree[m / 2 - 1] + degree[m / 2]);
  return s;
}

}  // namespace netar
