#include "saddopt/digraph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "saddopt/error.hpp"
#include "saddopt/random.hpp"

namespace saddopt {

Digraph Digraph::from_edges(std::size_t n, const std::vector<Edge>& edges) {
  if (n == 0) throw std::invalid_argument("digraph needs at least one node");
  Digraph g;
  g.out_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) g.out_[i].push_back(i);
  for (const auto& [src, dst] : edges) {
    if (src >= n || dst >= n) {
      std::ostringstream msg;
      msg << "edge (" << src << ", " << dst << ") out of range for n = " << n;
      throw std::invalid_argument(msg.str());
    }
    if (src == dst) continue;  // self-loops are implicit
    g.out_[src].push_back(dst);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& nb = g.out_[i];
    std::sort(nb.begin(), nb.end());
    if (std::adjacent_find(nb.begin(), nb.end()) != nb.end()) {
      throw std::invalid_argument("duplicate edge out of node " + std::to_string(i));
    }
  }
  return g;
}

bool Digraph::has_edge(std::size_t from, std::size_t to) const {
  const auto& nb = out_.at(from);
  return std::binary_search(nb.begin(), nb.end(), to);
}

std::vector<Edge> Digraph::edges() const {
  std::vector<Edge> result;
  for (std::size_t i = 0; i < out_.size(); ++i) {
    for (std::size_t j : out_[i]) {
      if (j != i) result.emplace_back(i, j);
    }
  }
  return result;
}

Digraph build_exponential_digraph(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("exponential digraph needs n to be a power of two, got " +
                                std::to_string(n));
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t hop = 1; hop < n; hop <<= 1) edges.emplace_back(i, (i + hop) % n);
  }
  return Digraph::from_edges(n, edges);
}

Digraph build_geometric_digraph(std::size_t n, double radius, double drop_prob,
                                std::uint64_t seed, int max_attempts) {
  if (n == 0) throw std::invalid_argument("geometric digraph needs n >= 1");
  if (!(radius > 0.0) || radius > std::sqrt(2.0) + 1e-12) {
    throw std::invalid_argument("radius must lie in (0, sqrt(2)]");
  }
  if (!(drop_prob >= 0.0) || drop_prob >= 1.0) {
    throw std::invalid_argument("drop_prob must lie in [0, 1)");
  }
  RandomStream rng(seed);
  std::vector<double> px(n), py(n);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = rng.uniform();
      py[i] = rng.uniform();
    }
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        if (std::hypot(px[i] - px[j], py[i] - py[j]) > radius) continue;
        // One uniform per ordered pair keeps the draw count independent of
        // the drop probability.
        if (rng.uniform() >= drop_prob) edges.emplace_back(i, j);
      }
    }
    auto g = Digraph::from_edges(n, edges);
    if (is_strongly_connected(g)) return g;
  }
  throw ConvergenceError("geometric digraph: no strongly connected sample within " +
                         std::to_string(max_attempts) + " attempts (radius too small?)");
}

namespace {

std::size_t reachable_count(const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<char> seen(adj.size(), 0);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop();
    for (auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        frontier.push(v);
      }
    }
  }
  return count;
}

}  // namespace

bool is_strongly_connected(const Digraph& g) {
  const auto n = g.size();
  std::vector<std::vector<std::size_t>> fwd(n), rev(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : g.out_neighbors(i)) {
      fwd[i].push_back(j);
      rev[j].push_back(i);
    }
  }
  // Node 0 reaches everyone and everyone reaches node 0.
  return reachable_count(fwd) == n && reachable_count(rev) == n;
}

WeightMatrix WeightMatrix::from_dense(Eigen::MatrixXd entries) {
  if (entries.rows() == 0 || entries.rows() != entries.cols()) {
    throw std::invalid_argument("weight matrix must be square and non-empty");
  }
  if ((entries.array() < 0.0).any() || !entries.allFinite()) {
    throw std::invalid_argument("weight matrix entries must be finite and non-negative");
  }
  for (Eigen::Index c = 0; c < entries.cols(); ++c) {
    const double sum = entries.col(c).sum();
    if (std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "weight matrix column " << c << " sums to " << sum << ", expected 1";
      throw std::invalid_argument(msg.str());
    }
  }
  return WeightMatrix(std::move(entries));
}

WeightMatrix column_stochastic_weights(const Digraph& g) {
  if (!is_strongly_connected(g)) {
    throw std::invalid_argument("column-stochastic weights need a strongly connected digraph");
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& nb = g.out_neighbors(static_cast<std::size_t>(i));
    const double w = 1.0 / static_cast<double>(nb.size());
    for (auto j : nb) b(static_cast<Eigen::Index>(j), i) = w;
  }
  return WeightMatrix::from_dense(std::move(b));
}

nlohmann::json graph_to_json(const Digraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [src, dst] : g.edges()) edges.push_back({src, dst});
  return {{"n", g.size()}, {"edges", edges}};
}

Digraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("edges")) {
    throw ConfigError("graph JSON needs fields 'n' and 'edges'");
  }
  const auto& jn = j.at("n");
  if (!jn.is_number_integer() || jn.get<long long>() < 1) {
    throw ConfigError("graph JSON field 'n' must be a positive integer");
  }
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
        e[0].get<long long>() < 0 || e[1].get<long long>() < 0) {
      throw ConfigError("graph JSON edges must be pairs of non-negative integers");
    }
    edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  try {
    return Digraph::from_edges(jn.get<std::size_t>(), edges);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("graph JSON: ") + ex.what());
  }
}

}  // namespace saddopt
