#include "saddopt/engine.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "saddopt/error.hpp"

namespace saddopt {

namespace {

constexpr std::array<std::pair<Algorithm, std::string_view>, 4> kAlgorithmNames{{
    {Algorithm::SAddopt, "saddopt"},
    {Algorithm::Addopt, "addopt"},
    {Algorithm::Sgp, "sgp"},
    {Algorithm::Gp, "gp"},
}};

Eigen::Map<Eigen::VectorXd> row_of(StateMatrix& m, Eigen::Index i) {
  return {m.row(i).data(), m.cols()};
}

Eigen::Map<const Eigen::VectorXd> row_of(const StateMatrix& m, Eigen::Index i) {
  return {m.row(i).data(), m.cols()};
}

// Fills g with one oracle value per node at the rows of z.
void draw_gradients(const Objective& obj, const StateMatrix& z, RandomStream* rng, StateMatrix& g) {
  g.resize(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const auto node = static_cast<std::size_t>(i);
    if (rng != nullptr) {
      obj.sfo_gradient(node, row_of(z, i), *rng, row_of(g, i));
    } else {
      obj.exact_gradient(node, row_of(z, i), row_of(g, i));
    }
  }
}

void push_sum(NodeStates& s, const WeightMatrix& b, const StateMatrix& direction, double alpha) {
  StateMatrix x_next = b.dense() * s.x;
  x_next -= alpha * direction;
  Eigen::VectorXd y_next = b.dense() * s.y;
  if ((y_next.array() <= 0.0).any()) {
    throw RunAborted("non-positive push-sum weight at iteration " + std::to_string(s.k + 1));
  }
  s.x = std::move(x_next);
  s.y = std::move(y_next);
  s.z = s.x.array().colwise() / s.y.array();
}

void tracking_step(NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj,
                   RandomStream* rng) {
  push_sum(s, b, s.w, alpha);
  StateMatrix fresh;
  draw_gradients(obj, s.z, rng, fresh);
  StateMatrix w_next = b.dense() * s.w;
  w_next -= s.grad;
  w_next += fresh;
  s.w = std::move(w_next);
  s.grad = std::move(fresh);
  ++s.k;
  ++s.oracle_calls;
}

void push_sum_gradient_step(NodeStates& s, const WeightMatrix& b, double alpha,
                            const Objective& obj, RandomStream* rng) {
  push_sum(s, b, s.grad, alpha);
  draw_gradients(obj, s.z, rng, s.grad);
  s.w = s.grad;
  ++s.k;
  ++s.oracle_calls;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("step size must be positive and finite");
  }
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  for (const auto& [alg, name] : kAlgorithmNames) {
    if (alg == a) return name;
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (const auto& [alg, n] : kAlgorithmNames) {
    if (n == name) return alg;
  }
  return std::nullopt;
}

bool is_stochastic(Algorithm a) { return a == Algorithm::SAddopt || a == Algorithm::Sgp; }

bool tracks_gradient(Algorithm a) { return a == Algorithm::SAddopt || a == Algorithm::Addopt; }

StepSchedule StepSchedule::constant(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("constant step size must be positive and finite");
  }
  StepSchedule s;
  s.kind_ = Kind::Constant;
  s.alpha_ = alpha;
  return s;
}

StepSchedule StepSchedule::decaying(double theta, double m) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw std::invalid_argument("decaying schedule needs theta > 0");
  }
  if (!(m >= 1.0) || !std::isfinite(m)) throw std::invalid_argument("decaying schedule needs m >= 1");
  StepSchedule s;
  s.kind_ = Kind::Decaying;
  s.theta_ = theta;
  s.m_ = m;
  return s;
}

double StepSchedule::at(std::int64_t k) const {
  if (kind_ == Kind::Constant) return alpha_;
  return theta_ / (m_ + static_cast<double>(k));
}

NodeStates init_states(const Objective& obj, const StateMatrix& x0, RandomStream* rng) {
  if (x0.rows() != static_cast<Eigen::Index>(obj.nodes()) ||
      x0.cols() != static_cast<Eigen::Index>(obj.dim())) {
    throw std::invalid_argument("init_states: x0 must be " + std::to_string(obj.nodes()) + " x " +
                                std::to_string(obj.dim()));
  }
  NodeStates s;
  s.x = x0;
  s.y = Eigen::VectorXd::Ones(x0.rows());
  s.z = x0;
  draw_gradients(obj, s.z, rng, s.grad);
  s.w = s.grad;
  s.k = 0;
  s.oracle_calls = 1;
  return s;
}

void saddopt_step(NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj,
                  RandomStream& rng) {
  check_alpha(alpha);
  tracking_step(s, b, alpha, obj, &rng);
}

void addopt_step(NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj) {
  check_alpha(alpha);
  tracking_step(s, b, alpha, obj, nullptr);
}

void sgp_step(NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj,
              RandomStream& rng) {
  check_alpha(alpha);
  push_sum_gradient_step(s, b, alpha, obj, &rng);
}

void gp_step(NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj) {
  check_alpha(alpha);
  push_sum_gradient_step(s, b, alpha, obj, nullptr);
}

void step(Algorithm a, NodeStates& s, const WeightMatrix& b, double alpha, const Objective& obj,
          RandomStream& rng) {
  switch (a) {
    case Algorithm::SAddopt: saddopt_step(s, b, alpha, obj, rng); return;
    case Algorithm::Addopt: addopt_step(s, b, alpha, obj); return;
    case Algorithm::Sgp: sgp_step(s, b, alpha, obj, rng); return;
    case Algorithm::Gp: gp_step(s, b, alpha, obj); return;
  }
}

namespace {

double epoch_of(const NodeStates& s, const Objective& obj, Algorithm a) {
  if (obj.kind() == Objective::Kind::Quadratic) return static_cast<double>(s.k);
  const double calls = static_cast<double>(s.oracle_calls);
  if (!is_stochastic(a)) return calls;
  const double per_node = static_cast<double>(obj.total_samples()) / static_cast<double>(obj.nodes());
  return calls / per_node;
}

bool all_finite(const NodeStates& s) {
  return s.x.allFinite() && s.y.allFinite() && s.w.allFinite() && s.grad.allFinite();
}

}  // namespace

RunTrace run(const Network& net, const Objective& obj, const ReferenceSolution& ref,
             const StateMatrix& x0, const RunOptions& options) {
  if (net.size() != obj.nodes()) throw std::invalid_argument("run: graph and objective sizes differ");
  if (options.k_max < 0) throw std::invalid_argument("run: k_max must be >= 0");
  if (options.record_every < 1) throw std::invalid_argument("run: record_every must be >= 1");

  RandomStream rng(options.seed, options.stream);
  const bool stochastic = is_stochastic(options.algorithm);
  NodeStates s = init_states(obj, x0, stochastic ? &rng : nullptr);

  RunTrace trace;
  trace.algorithm = options.algorithm;
  trace.seed = options.seed;
  trace.stream = options.stream;
  InvariantReport& inv = trace.invariants;
  inv.lemma2_min_slack = std::numeric_limits<double>::infinity();
  const auto n = static_cast<double>(s.nodes());

  auto record = [&] {
    TraceRow row;
    row.k = s.k;
    row.alpha = options.schedule.at(s.k);
    row.metrics = compute_metrics(s, net.perron, ref, obj);
    row.oracle_calls = s.oracle_calls;
    row.epoch = epoch_of(s, obj, options.algorithm);
    trace.rows.push_back(row);
    if (options.check_invariants && all_finite(s)) {
      const auto check = lemma2_check(s, net.perron, net.constants, ref);
      inv.lemma2_min_slack = std::min(inv.lemma2_min_slack, check.slack);
      if (!check.pass) ++inv.lemma2_failures;
    }
  };

  record();
  while (s.k < options.k_max) {
    const double alpha = options.schedule.at(s.k);
    Eigen::RowVectorXd expected_mean;
    if (options.check_invariants) {
      expected_mean = s.x.colwise().mean() - alpha * s.w.colwise().mean();
    }
    try {
      step(options.algorithm, s, net.weights, alpha, obj, rng);
    } catch (const RunAborted& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      record();
      break;
    }
    if (!all_finite(s)) {
      trace.aborted = true;
      trace.abort_reason = "non-finite iterate at k = " + std::to_string(s.k);
      record();
      break;
    }
    if (options.check_invariants) {
      inv.y_sum_error = std::max(inv.y_sum_error, std::abs(s.y.sum() - n));
      inv.tracking_error = std::max(
          inv.tracking_error, (s.w.colwise().sum() - s.grad.colwise().sum()).cwiseAbs().maxCoeff());
      inv.mean_step_error = std::max(
          inv.mean_step_error, (s.x.colwise().mean() - expected_mean).cwiseAbs().maxCoeff());
      ++inv.iterations_checked;
    }
    if (s.k % options.record_every == 0 || s.k == options.k_max) record();
  }
  if (!std::isfinite(inv.lemma2_min_slack)) inv.lemma2_min_slack = 0.0;
  return trace;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && field.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("trace line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view field, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ConfigError("trace line " + std::to_string(line) + ": bad integer '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    out << r.k << ',' << format_double(r.alpha) << ',' << format_double(r.metrics.agreement_pi2)
        << ',' << format_double(r.metrics.opt_gap2) << ',' << format_double(r.metrics.track_pi2)
        << ',' << format_double(r.metrics.e_k) << ',' << format_double(r.metrics.f_bar_gap) << ','
        << r.oracle_calls << '\n';
  }
}

std::string trace_csv(const RunTrace& trace) {
  std::ostringstream out;
  write_trace_csv(trace, out);
  return out.str();
}

std::vector<TraceRow> parse_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ConfigError("trace line 1: expected header '" + std::string(kTraceHeader) + "'");
  }
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 8) {
      throw ConfigError("trace line " + std::to_string(line_no) + ": expected 8 fields, got " +
                        std::to_string(fields.size()));
    }
    TraceRow r;
    r.k = parse_int(fields[0], line_no);
    r.alpha = parse_double(fields[1], line_no);
    r.metrics.agreement_pi2 = parse_double(fields[2], line_no);
    r.metrics.opt_gap2 = parse_double(fields[3], line_no);
    r.metrics.track_pi2 = parse_double(fields[4], line_no);
    r.metrics.e_k = parse_double(fields[5], line_no);
    r.metrics.f_bar_gap = parse_double(fields[6], line_no);
    r.oracle_calls = parse_int(fields[7], line_no);
    if (!rows.empty() && r.k <= rows.back().k) {
      throw ConfigError("trace line " + std::to_string(line_no) + ": k is not increasing");
    }
    rows.push_back(r);
  }
  return rows;
}

Series series(const std::vector<TraceRow>& rows, Metric metric) {
  Series out;
  out.k.reserve(rows.size());
  out.value.reserve(rows.size());
  for (const auto& r : rows) {
    out.k.push_back(static_cast<double>(r.k));
    out.value.push_back(metric_value(r.metrics, metric));
  }
  return out;
}

Series series(const RunTrace& trace, Metric metric) { return series(trace.rows, metric); }

}  // namespace saddopt
