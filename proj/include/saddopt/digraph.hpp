#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace saddopt {

using Edge = std::pair<std::size_t, std::size_t>;

/// Directed graph with a self-loop at every node. Immutable once built.
///
/// An edge i -> j means node i sends to node j, i.e. j is an out-neighbor of
/// i. Out-neighbor sets are kept sorted and always contain the node itself.
class Digraph {
 public:
  /// Builds from an edge list. Self-loops are added for every node; repeated
  /// edges are rejected, as are ids outside [0, n).
  static Digraph from_edges(std::size_t n, const std::vector<Edge>& edges);

  std::size_t size() const { return out_.size(); }
  const std::vector<std::size_t>& out_neighbors(std::size_t i) const { return out_.at(i); }
  std::size_t out_degree(std::size_t i) const { return out_.at(i).size(); }
  bool has_edge(std::size_t from, std::size_t to) const;
  /// All edges except self-loops, sorted by (src, dst).
  std::vector<Edge> edges() const;

 private:
  std::vector<std::vector<std::size_t>> out_;
};

/// Node i -> (i + 2^j) mod n for every 2^j < n, plus self-loop. n must be a
/// power of two.
Digraph build_exponential_digraph(std::size_t n);

/// Random geometric digraph in the unit square. Pairs within `radius` are
/// joined in both directions, then each non-loop directed edge is dropped
/// with probability `drop_prob`. Positions are resampled until the result is
/// strongly connected; throws ConvergenceError when `max_attempts` runs out.
Digraph build_geometric_digraph(std::size_t n, double radius, double drop_prob,
                                std::uint64_t seed, int max_attempts = 1000);

bool is_strongly_connected(const Digraph& g);

/// Dense n x n column-stochastic matrix. Entry (j, i) is the weight node j
/// applies to what it receives from node i.
class WeightMatrix {
 public:
  /// Validates non-negativity and unit column sums (1e-12).
  static WeightMatrix from_dense(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& dense() const { return entries_; }
  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t row, std::size_t col) const { return entries_(row, col); }

 private:
  explicit WeightMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {}
  Eigen::MatrixXd entries_;
};

/// b_ji = 1 / |N_i^out| for j in N_i^out. Rejects graphs that are not
/// strongly connected.
WeightMatrix column_stochastic_weights(const Digraph& g);

/// {"n": n, "edges": [[src, dst], ...]} with self-loops implied.
nlohmann::json graph_to_json(const Digraph& g);
Digraph graph_from_json(const nlohmann::json& j);

}  // namespace saddopt
