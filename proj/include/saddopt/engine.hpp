#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "saddopt/metrics.hpp"
#include "saddopt/objective.hpp"
#include "saddopt/random.hpp"
#include "saddopt/spectral.hpp"
#include "saddopt/state.hpp"

namespace saddopt {

enum class Algorithm { SAddopt, Addopt, Sgp, Gp };

std::string_view algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);
/// True for the engines that query the stochastic oracle.
bool is_stochastic(Algorithm a);
/// True for the engines that carry a gradient tracker.
bool tracks_gradient(Algorithm a);

/// alpha_k = alpha, or alpha_k = theta / (m + k).
class StepSchedule {
 public:
  enum class Kind { Constant, Decaying };

  static StepSchedule constant(double alpha);
  static StepSchedule decaying(double theta, double m);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double theta() const { return theta_; }
  double m() const { return m_; }
  double at(std::int64_t k) const;

 private:
  Kind kind_ = Kind::Constant;
  double alpha_ = 0.0;
  double theta_ = 0.0;
  double m_ = 1.0;
};

/// x = x0, y = 1, z = x0 and w = grad = one oracle draw per node at x0
/// (exact gradients when `rng` is null).
NodeStates init_states(const Objective& obj, const StateMatrix& x0, RandomStream* rng);

/// One iteration of each engine, in place. The tracking engines compute
///   x+ = Bx - alpha w,  y+ = By,  z+ = x+ / y+,  g+ = oracle(z+),
///   w+ = (Bw - g) + g+,
/// with g the draw cached from the previous step. SGP and GP compute
///   x+ = Bx - alpha g,  y+ = By,  z+ = x+ / y+,  g+ = oracle(z+),  w+ = g+.
/// Throws RunAborted if a y entry is not positive.
void saddopt_step(NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj,
                  RandomStream& rng);
void addopt_step(NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj);
void sgp_step(NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj,
              RandomStream& rng);
void gp_step(NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj);

/// Dispatches on `a`; `rng` is ignored by the deterministic engines.
void step(Algorithm a, NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj,
          RandomStream& rng);

struct RunOptions {
  Algorithm algorithm = Algorithm::SAddopt;
  StepSchedule schedule = StepSchedule::constant(1e-2);
  std::int64_t k_max = 1000;
  std::int64_t record_every = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // replica id; the random stream is (seed, stream)
  bool check_invariants = true;
};

struct TraceRow {
  std::int64_t k = 0;
  double alpha = 0.0;
  MetricsRow metrics;
  std::int64_t oracle_calls = 0;
  double epoch = 0.0;
};

/// Largest violations of the exact identities seen during a run.
struct InvariantReport {
  double y_sum_error = 0.0;       // |sum y - n|
  double tracking_error = 0.0;    // |sum w - sum g|, max over coordinates
  double mean_step_error = 0.0;   // |xbar+ - (xbar - alpha wbar)|, max over coordinates
  double lemma2_min_slack = 0.0;  // over recorded rows
  std::int64_t lemma2_failures = 0;
  std::int64_t iterations_checked = 0;

  bool exact_ok(double tol = 1e-10) const {
    return y_sum_error <= tol && tracking_error <= tol && mean_step_error <= tol;
  }
};

struct RunTrace {
  Algorithm algorithm = Algorithm::SAddopt;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string config_digest;
  std::vector<TraceRow> rows;
  bool aborted = false;
  std::string abort_reason;
  InvariantReport invariants;
};

/// Runs one trajectory from x0. Rows are recorded at k = 0, every
/// `record_every` iterations and at k_max. A non-finite iterate stops the run
/// with a diagnostic row and `aborted` set.
///
/// Epochs: k for quadratics; oracle_calls / (N / n) for stochastic engines
/// on logistic costs; oracle_calls for batch engines on logistic costs.
RunTrace run(const Network& net, const Objective& obj, const ReferenceSolution& ref,
             const StateMatrix& x0, const RunOptions& options);

/// The canonical trace columns, in order.
inline constexpr std::string_view kTraceHeader =
    "k,alpha,agreement_pi2,opt_gap2,track_pi2,e_k,F_bar_gap,oracle_calls";

void write_trace_csv(const RunTrace& trace, std::ostream& out);
std::string trace_csv(const RunTrace& trace);
/// Parses the canonical columns back. Throws ConfigError naming the line.
std::vector<TraceRow> parse_trace_csv(std::istream& in);

Series series(const RunTrace& trace, Metric metric);
Series series(const std::vector<TraceRow>& rows, Metric metric);

}  // namespace saddopt
