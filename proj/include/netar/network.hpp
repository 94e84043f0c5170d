#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace netar {

using EdgeList = std::vector<std::pair<int, int>>;

struct NormalizeOptions {
  /// Drop self-loops instead of rejecting the edge list.
  bool drop_self_loops = false;
};

/// Directed graph with its row-normalised adjacency operator W.
///
/// Row i of W puts weight 1/n_i on each out-neighbour of i, where n_i is the
/// out-degree. Nodes with no out-neighbours keep an all-zero row. Adjacency
/// lists are sorted, so W*y costs O(|edges|). Immutable after construction.
class Network {
 public:
  Network() = default;

  int size() const { return n_; }
  std::size_t edge_count() const { return targets_.size(); }

  std::span<const int> neighbors(int i) const {
    return {targets_.data() + offsets_[i], targets_.data() + offsets_[i + 1]};
  }
  int out_degree(int i) const { return offsets_[i + 1] - offsets_[i]; }

  /// Entry w_ij; zero when (i,j) is not an edge.
  double weight(int i, int j) const;

  /// x = W y.
  void apply(const double* y, double* x) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
  /// Applies W to every column of a node-by-time matrix.
  Eigen::MatrixXd apply_columns(const Eigen::MatrixXd& y) const;

  Eigen::MatrixXd dense_w() const;
  EdgeList edges() const;

  /// Nodes whose W row is zero because they have no out-neighbours.
  std::vector<int> zero_degree_nodes() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

  friend Network row_normalize(const EdgeList& edges, int n, const NormalizeOptions& opts);

 private:
  int n_ = 0;
  std::vector<int> offsets_{0};
  std::vector<int> targets_;
  std::vector<std::string> warnings_;
};

/// Builds W = diag(n_1..n_N)^{-1} A from a directed edge list with 0-based
/// endpoints. Duplicate edges are merged with a warning; zero out-degree
/// rows stay zero with a warning. Throws std::out_of_range on bad indices and
/// std::invalid_argument on self-loops unless they are dropped by `opts`.
Network row_normalize(const EdgeList& edges, int n, const NormalizeOptions& opts = {});

/// Undirected pairs become two directed edges.
EdgeList symmetrize(const EdgeList& undirected);

/// Stochastic block model: each node gets a block uniformly at random, then
/// every ordered pair i != j is an edge with probability n^-0.3 inside a
/// block and 1/n across blocks.
Network gen_sbm(int n, int k, std::uint64_t seed);

/// Block labels drawn by gen_sbm for the same arguments.
std::vector<int> sbm_blocks(int n, int k, std::uint64_t seed);

/// Erdos-Renyi digraph; every ordered pair i != j is an edge independently
/// with probability p (default n^-0.3).
Network gen_er(int n, std::optional<double> p, std::uint64_t seed);

inline double default_er_probability(int n) { return std::pow(static_cast<double>(n), -0.3); }

struct NetworkSummary {
  int nodes = 0;
  std::size_t edges = 0;
  double density = 0.0;
  double median_out_degree = 0.0;
  int zero_out_degree = 0;
};

NetworkSummary network_summary(const Network& net);

}  // namespace netar
