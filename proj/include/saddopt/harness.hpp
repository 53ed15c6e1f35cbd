#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "saddopt/analysis.hpp"
#include "saddopt/engine.hpp"
#include "saddopt/objective.hpp"
#include "saddopt/spectral.hpp"

namespace saddopt {

/// Graph section of an experiment config.
///   {"kind": "exponential", "n": 16}
///   {"kind": "geometric", "n": 16, "radius": 0.6, "drop_prob": 0.3, "seed": 7}
///   {"kind": "file", "path": "g.json"}
///   {"kind": "inline", "n": 2, "edges": [[0, 1], [1, 0]], "weights": [[...], ...]}
/// "weights" (optional, inline or file) replaces the uniform out-degree
/// weights; its sparsity must match the edge set.
struct GraphSpec {
  std::string kind = "exponential";
  std::size_t n = 16;
  double radius = 0.6;
  double drop_prob = 0.3;
  std::uint64_t seed = 1;
  std::filesystem::path path;
  nlohmann::json inline_graph;
};

/// Objective section.
///   quadratic: {"kind": "quadratic", "dim": 1, "sigma2": 0.01,
///               "q_range": [1, 5], "center_range": [-10, 10], "seed": 3}
///              or explicit {"costs": [{"q": [[...]], "center": [...]}, ...]}
///   logistic:  {"kind": "logistic", "dataset": "data.csv", "lambda": 0.01,
///               "partition": {"kind": "balanced" | "unbalanced", "concentration": 0.3},
///               "seed": 3}
struct ObjectiveSpec {
  std::string kind = "quadratic";
  std::size_t dim = 1;
  double sigma2 = 0.0;
  double q_lo = 1.0, q_hi = 1.0;
  double center_lo = 0.0, center_hi = 0.0;
  std::uint64_t seed = 1;
  std::vector<QuadraticCost> costs;  // explicit costs, if given
  std::filesystem::path dataset;
  double lambda = 0.0;
  PartitionScheme partition;
};

/// Step schedule section. A constant step can be given directly or as a
/// fraction of the constant-step bound ("alpha_fraction").
struct ScheduleSpec {
  std::string kind = "constant";
  std::optional<double> alpha;
  std::optional<double> alpha_fraction;
  double theta = 0.0;
  std::optional<double> m;  // defaults to the smallest admissible m
};

struct ExperimentConfig {
  GraphSpec graph;
  ObjectiveSpec objective;
  Algorithm algorithm = Algorithm::SAddopt;
  ScheduleSpec schedule;
  std::int64_t k_max = 1000;
  std::int64_t record_every = 1;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  std::string x0 = "zeros";  // "zeros" or "optimum"
  double tail_fraction = 0.5;
  std::optional<std::pair<double, double>> slope_window;
  unsigned threads = 0;
  nlohmann::json source;  // the parsed document, for digests
};

/// Parses and validates a config. Errors are ConfigError with the field
/// path, e.g. "objective.sigma2: must be >= 0". Relative file paths resolve
/// against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Builds a network from {"n", "edges", optional "weights"}.
Network network_from_json(const nlohmann::json& j);
Network build_network(const GraphSpec& spec);
Objective build_objective(const ObjectiveSpec& spec, std::size_t n);

/// Everything a run needs, resolved from a config.
struct Experiment {
  ExperimentConfig config;
  Network network;
  Objective objective;
  ReferenceSolution reference;
  Curvature curvature;
  double sigma2 = 0.0;  // declared (quadratic) or exact at z* (logistic)
  StepSchedule schedule;
  StateMatrix x0;
};

/// With `enforce_bounds`, a constant step above the constant-step bound or
/// a decaying schedule failing the admissibility conditions is a ConfigError.
Experiment prepare_experiment(const ExperimentConfig& config, bool enforce_bounds = false);

struct ExperimentResult {
  nlohmann::json summary;
  std::vector<RunTrace> traces;
  std::vector<TraceRow> mean_rows;  // replica average, row by row
  bool aborted = false;
};

/// Runs all replicas (replica r uses the stream (seed, r)), writes
/// trace_<r>.csv and summary.json into `out_dir` when given.
ExperimentResult run_experiment(const Experiment& exp,
                                const std::optional<std::filesystem::path>& out_dir = {});
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = {},
                                bool enforce_bounds = false);

/// Replica average of the recorded rows.
std::vector<TraceRow> mean_trace(const std::vector<RunTrace>& traces);

/// Reruns the config once per value of `parameter` (alpha, theta, sigma2, n).
nlohmann::json sweep(const ExperimentConfig& config, const std::string& parameter,
                     const std::vector<double>& values,
                     const std::optional<std::filesystem::path>& out_dir = {},
                     bool enforce_bounds = false);

/// Runs each algorithm on the same graph, objective and seed and ranks them
/// by the tail plateau of e_k.
nlohmann::json compare_algorithms(const ExperimentConfig& config,
                                  const std::vector<Algorithm>& algorithms,
                                  const std::optional<std::filesystem::path>& out_dir = {});

/// mc_verify_lti on the config's graph and objective with its constant step.
nlohmann::json verify_lti(const ExperimentConfig& config, std::size_t replicas,
                          const std::vector<std::int64_t>& checkpoints);

nlohmann::json constants_json(const Network& net);
nlohmann::json bound_report_json(const BoundReport& rep);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& data);

}  // namespace saddopt
