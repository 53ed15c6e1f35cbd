#include "saddopt/harness.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "saddopt/error.hpp"
#include "saddopt/parallel.hpp"

namespace saddopt {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number(const json& obj, const std::string& key, const std::string& path,
              std::optional<double> fallback = {}) {
  const json* v = find(obj, key);
  if (v == nullptr) {
    if (fallback) return *fallback;
    fail(join(path, key), "required number is missing");
  }
  if (!v->is_number()) fail(join(path, key), "must be a number");
  const double d = v->get<double>();
  if (!std::isfinite(d)) fail(join(path, key), "must be finite");
  return d;
}

std::optional<double> optional_number(const json& obj, const std::string& key, const std::string& path) {
  if (find(obj, key) == nullptr) return std::nullopt;
  return number(obj, key, path);
}

std::int64_t integer(const json& obj, const std::string& key, const std::string& path,
                     std::optional<std::int64_t> fallback = {}) {
  const json* v = find(obj, key);
  if (v == nullptr) {
    if (fallback) return *fallback;
    fail(join(path, key), "required integer is missing");
  }
  if (!v->is_number_integer()) fail(join(path, key), "must be an integer");
  return v->get<std::int64_t>();
}

std::string text(const json& obj, const std::string& key, const std::string& path,
                 std::optional<std::string> fallback = {}) {
  const json* v = find(obj, key);
  if (v == nullptr) {
    if (fallback) return *fallback;
    fail(join(path, key), "required string is missing");
  }
  if (!v->is_string()) fail(join(path, key), "must be a string");
  return v->get<std::string>();
}

const json& section(const json& obj, const std::string& key, const std::string& path) {
  const json* v = find(obj, key);
  if (v == nullptr) fail(join(path, key), "required object is missing");
  if (!v->is_object()) fail(join(path, key), "must be an object");
  return *v;
}

std::pair<double, double> range(const json& obj, const std::string& key, const std::string& path,
                                std::pair<double, double> fallback) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
    fail(join(path, key), "must be [lo, hi]");
  }
  const double lo = (*v)[0].get<double>();
  const double hi = (*v)[1].get<double>();
  if (!(lo <= hi)) fail(join(path, key), "needs lo <= hi");
  return {lo, hi};
}

Eigen::MatrixXd dense_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) fail(path, "must be a non-empty matrix");
  const auto rows = v.size();
  const auto cols = v[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) fail(path, "rows must have equal length");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!v[i][j].is_number()) fail(path, "entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd dense_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "must be a non-empty array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path, "entries must be numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

GraphSpec parse_graph(const json& j, const std::filesystem::path& base) {
  const std::string path = "graph";
  GraphSpec g;
  g.kind = text(j, "kind", path, std::string("exponential"));
  if (g.kind == "exponential" || g.kind == "geometric") {
    const auto n = integer(j, "n", path, 16);
    if (n < 1) fail("graph.n", "must be >= 1");
    g.n = static_cast<std::size_t>(n);
    if (g.kind == "geometric") {
      g.radius = number(j, "radius", path, 0.6);
      if (!(g.radius > 0.0) || g.radius > std::sqrt(2.0) + 1e-12) fail("graph.radius", "must lie in (0, sqrt(2)]");
      g.drop_prob = number(j, "drop_prob", path, 0.3);
      if (!(g.drop_prob >= 0.0) || !(g.drop_prob < 1.0)) fail("graph.drop_prob", "must lie in [0, 1)");
      const auto seed = integer(j, "seed", path, 1);
      if (seed < 0) fail("graph.seed", "must be >= 0");
      g.seed = static_cast<std::uint64_t>(seed);
    }
  } else if (g.kind == "file") {
    g.path = resolve(text(j, "path", path), base);
    if (!std::filesystem::exists(g.path)) fail("graph.path", "file not found: " + g.path.string());
  } else if (g.kind == "inline") {
    g.inline_graph = j;
    g.inline_graph.erase("kind");
    g.n = static_cast<std::size_t>(integer(j, "n", path));
  } else {
    fail("graph.kind", "must be exponential, geometric, file or inline");
  }
  return g;
}

ObjectiveSpec parse_objective(const json& j, const std::filesystem::path& base) {
  const std::string path = "objective";
  ObjectiveSpec o;
  o.kind = text(j, "kind", path, std::string("quadratic"));
  const auto seed = integer(j, "seed", path, 1);
  if (seed < 0) fail("objective.seed", "must be >= 0");
  o.seed = static_cast<std::uint64_t>(seed);
  if (o.kind == "quadratic") {
    o.sigma2 = number(j, "sigma2", path, 0.0);
    if (o.sigma2 < 0.0) fail("objective.sigma2", "must be >= 0");
    if (const json* costs = find(j, "costs")) {
      if (!costs->is_array() || costs->empty()) fail("objective.costs", "must be a non-empty array");
      for (std::size_t i = 0; i < costs->size(); ++i) {
        const std::string cp = "objective.costs[" + std::to_string(i) + "]";
        const json& c = (*costs)[i];
        if (!c.is_object() || !c.contains("q") || !c.contains("center")) {
          fail(cp, "needs fields q and center");
        }
        o.costs.push_back({dense_matrix(c.at("q"), cp + ".q"), dense_vector(c.at("center"), cp + ".center")});
      }
      o.dim = static_cast<std::size_t>(o.costs.front().center.size());
    } else {
      const auto dim = integer(j, "dim", path, 1);
      if (dim < 1) fail("objective.dim", "must be >= 1");
      o.dim = static_cast<std::size_t>(dim);
      std::tie(o.q_lo, o.q_hi) = range(j, "q_range", path, {1.0, 1.0});
      if (!(o.q_lo > 0.0)) fail("objective.q_range", "curvatures must be positive");
      std::tie(o.center_lo, o.center_hi) = range(j, "center_range", path, {0.0, 0.0});
    }
  } else if (o.kind == "logistic") {
    o.dataset = resolve(text(j, "dataset", path), base);
    if (!std::filesystem::exists(o.dataset)) fail("objective.dataset", "file not found: " + o.dataset.string());
    o.lambda = number(j, "lambda", path);
    if (!(o.lambda > 0.0)) fail("objective.lambda", "must be > 0 for strong convexity");
    if (const json* part = find(j, "partition")) {
      if (!part->is_object()) fail("objective.partition", "must be an object");
      const auto kind = text(*part, "kind", "objective.partition", std::string("balanced"));
      if (kind == "balanced") {
        o.partition = PartitionScheme::balanced();
      } else if (kind == "unbalanced") {
        const double conc = number(*part, "concentration", "objective.partition", 1.0);
        if (!(conc > 0.0)) fail("objective.partition.concentration", "must be > 0");
        o.partition = PartitionScheme::unbalanced(conc);
      } else {
        fail("objective.partition.kind", "must be balanced or unbalanced");
      }
    }
  } else {
    fail("objective.kind", "must be quadratic or logistic");
  }
  return o;
}

ScheduleSpec parse_schedule(const json& j) {
  const std::string path = "schedule";
  ScheduleSpec s;
  s.kind = text(j, "kind", path, std::string("constant"));
  if (s.kind == "constant") {
    s.alpha = optional_number(j, "alpha", path);
    s.alpha_fraction = optional_number(j, "alpha_fraction", path);
    if (s.alpha.has_value() == s.alpha_fraction.has_value()) {
      fail("schedule", "give exactly one of alpha and alpha_fraction");
    }
    if (s.alpha && !(*s.alpha > 0.0)) fail("schedule.alpha", "must be > 0");
    if (s.alpha_fraction && !(*s.alpha_fraction > 0.0)) fail("schedule.alpha_fraction", "must be > 0");
  } else if (s.kind == "decaying") {
    s.theta = number(j, "theta", path);
    if (!(s.theta > 0.0)) fail("schedule.theta", "must be > 0");
    s.m = optional_number(j, "m", path);
    if (s.m && !(*s.m >= 1.0)) fail("schedule.m", "must be >= 1");
  } else {
    fail("schedule.kind", "must be constant or decaying");
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: must be a JSON object");
  ExperimentConfig c;
  c.source = j;
  c.graph = parse_graph(section(j, "graph", ""), base_dir);
  c.objective = parse_objective(section(j, "objective", ""), base_dir);
  const auto alg = text(j, "algorithm", "", std::string("saddopt"));
  const auto parsed = parse_algorithm(alg);
  if (!parsed) fail("algorithm", "must be saddopt, addopt, sgp or gp");
  c.algorithm = *parsed;
  c.schedule = parse_schedule(section(j, "schedule", ""));
  c.k_max = integer(j, "k_max", "", 1000);
  if (c.k_max < 0) fail("k_max", "must be >= 0");
  c.record_every = integer(j, "record_every", "", 1);
  if (c.record_every < 1) fail("record_every", "must be >= 1");
  const auto seed = integer(j, "seed", "", 0);
  if (seed < 0) fail("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  const auto replicas = integer(j, "replicas", "", 1);
  if (replicas < 1) fail("replicas", "must be >= 1");
  c.replicas = static_cast<std::size_t>(replicas);
  c.x0 = text(j, "x0", "", std::string("zeros"));
  if (c.x0 != "zeros" && c.x0 != "optimum") fail("x0", "must be zeros or optimum");
  c.tail_fraction = number(j, "tail_fraction", "", 0.5);
  if (!(c.tail_fraction > 0.0) || c.tail_fraction > 1.0) fail("tail_fraction", "must lie in (0, 1]");
  if (find(j, "slope_window") != nullptr) c.slope_window = range(j, "slope_window", "", {0.0, 0.0});
  const auto threads = integer(j, "threads", "", 0);
  if (threads < 0) fail("threads", "must be >= 0");
  c.threads = static_cast<unsigned>(threads);
  if (c.objective.kind == "quadratic" && !c.objective.costs.empty() &&
      c.objective.costs.size() != (c.graph.kind == "file" ? c.objective.costs.size() : c.graph.n)) {
    fail("objective.costs", "needs one cost per node");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

Network network_from_json(const json& j) {
  const Digraph g = graph_from_json(j);
  const json* w = find(j, "weights");
  if (w == nullptr) return Network::analyze(column_stochastic_weights(g));
  if (!is_strongly_connected(g)) throw ConfigError("graph: not strongly connected");
  Eigen::MatrixXd dense = dense_matrix(*w, "graph.weights");
  const auto n = static_cast<Eigen::Index>(g.size());
  if (dense.rows() != n || dense.cols() != n) fail("graph.weights", "must be n x n");
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      // Entry (r, c) weighs what r receives from c, so it needs edge c -> r.
      const bool edge = g.has_edge(static_cast<std::size_t>(c), static_cast<std::size_t>(r));
      if ((dense(r, c) > 0.0) != edge) {
        fail("graph.weights", "entry (" + std::to_string(r) + ", " + std::to_string(c) +
                                  ") does not match the edge set");
      }
    }
  }
  try {
    return Network::analyze(WeightMatrix::from_dense(std::move(dense)));
  } catch (const std::invalid_argument& e) {
    fail("graph.weights", e.what());
  }
}

Network build_network(const GraphSpec& spec) {
  if (spec.kind == "exponential") {
    try {
      return Network::analyze(column_stochastic_weights(build_exponential_digraph(spec.n)));
    } catch (const std::invalid_argument& e) {
      fail("graph.n", e.what());
    }
  }
  if (spec.kind == "geometric") {
    return Network::analyze(column_stochastic_weights(
        build_geometric_digraph(spec.n, spec.radius, spec.drop_prob, spec.seed)));
  }
  if (spec.kind == "file") {
    std::ifstream in(spec.path);
    if (!in) fail("graph.path", "cannot open " + spec.path.string());
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      fail("graph.path", e.what());
    }
    return network_from_json(j);
  }
  return network_from_json(spec.inline_graph);
}

Objective build_objective(const ObjectiveSpec& spec, std::size_t n) {
  RandomStream rng(spec.seed);
  if (spec.kind == "quadratic") {
    std::vector<QuadraticCost> costs = spec.costs;
    if (costs.empty()) {
      const auto p = static_cast<Eigen::Index>(spec.dim);
      for (std::size_t i = 0; i < n; ++i) {
        QuadraticCost c;
        c.q = Eigen::MatrixXd::Zero(p, p);
        c.center.resize(p);
        for (Eigen::Index d = 0; d < p; ++d) c.q(d, d) = spec.q_lo + (spec.q_hi - spec.q_lo) * rng.uniform();
        for (Eigen::Index d = 0; d < p; ++d) {
          c.center(d) = spec.center_lo + (spec.center_hi - spec.center_lo) * rng.uniform();
        }
        costs.push_back(std::move(c));
      }
    }
    if (costs.size() != n) fail("objective.costs", "needs one cost per node");
    try {
      return Objective::quadratic(std::move(costs), spec.sigma2);
    } catch (const std::invalid_argument& e) {
      fail("objective", e.what());
    }
  }
  const Dataset data = load_csv_dataset(spec.dataset);
  if (data.size() < n) fail("objective.dataset", "fewer samples than nodes");
  return Objective::logistic(partition_dataset(data, n, spec.partition, rng), spec.lambda);
}

Experiment prepare_experiment(const ExperimentConfig& config, bool enforce_bounds) {
  Network net = build_network(config.graph);
  Objective obj = build_objective(config.objective, net.size());
  const Curvature curv = curvature_constants(obj);
  ReferenceSolution ref = reference_solution(obj);
  const double sigma2 = obj.kind() == Objective::Kind::Quadratic
                            ? obj.noise_sigma2()
                            : max_sfo_variance(obj, ref.z_star);

  const auto& gc = net.constants;
  const auto& pd = net.perron;
  const double bound = theorem1_step_bound(gc, pd, curv.mu, curv.ell);
  std::optional<StepSchedule> schedule;
  const auto& s = config.schedule;
  if (s.kind == "constant") {
    const double alpha = s.alpha ? *s.alpha : *s.alpha_fraction * bound;
    if (enforce_bounds && alpha > bound) {
      fail("schedule.alpha", "step " + std::to_string(alpha) + " exceeds the constant-step bound " +
                                 std::to_string(bound));
    }
    schedule = StepSchedule::constant(alpha);
  } else {
    if (enforce_bounds && !(s.theta * curv.mu > 1.0)) fail("schedule.theta", "needs theta > 1/mu");
    double m = 0.0;
    if (s.m) {
      m = *s.m;
    } else {
      if (!(s.theta * curv.mu > 1.0)) fail("schedule.m", "no default m without theta > 1/mu");
      m = minimal_valid_m(s.theta, gc, pd, curv.mu, curv.ell, net.size());
    }
    if (enforce_bounds) {
      Theorem2Inputs in;
      in.theta = s.theta;
      in.m = m;
      in.mu = curv.mu;
      in.ell = curv.ell;
      in.sigma2 = sigma2;
      in.n = net.size();
      const auto table = theorem2_table(in, gc, pd);
      if (!table.m_ok || !table.determinant_condition_ok) {
        fail("schedule.m", "m = " + std::to_string(m) + " fails the decaying-step conditions");
      }
    }
    schedule = StepSchedule::decaying(s.theta, m);
  }

  StateMatrix x0 = StateMatrix::Zero(static_cast<Eigen::Index>(net.size()),
                                     static_cast<Eigen::Index>(obj.dim()));
  if (config.x0 == "optimum") x0.rowwise() = ref.z_star.transpose();
  return Experiment{config, std::move(net), std::move(obj), std::move(ref), curv, sigma2, *schedule,
                    std::move(x0)};
}

std::vector<TraceRow> mean_trace(const std::vector<RunTrace>& traces) {
  if (traces.empty()) return {};
  std::size_t rows = traces.front().rows.size();
  for (const auto& t : traces) rows = std::min(rows, t.rows.size());
  std::vector<TraceRow> out(traces.front().rows.begin(),
                            traces.front().rows.begin() + static_cast<std::ptrdiff_t>(rows));
  const double count = static_cast<double>(traces.size());
  for (std::size_t i = 0; i < rows; ++i) {
    MetricsRow sum;
    for (const auto& t : traces) {
      const auto& m = t.rows[i].metrics;
      sum.agreement_pi2 += m.agreement_pi2;
      sum.opt_gap2 += m.opt_gap2;
      sum.track_pi2 += m.track_pi2;
      sum.e_k += m.e_k;
      sum.f_bar_gap += m.f_bar_gap;
      sum.x_norm2 += m.x_norm2;
    }
    auto& m = out[i].metrics;
    m.agreement_pi2 = sum.agreement_pi2 / count;
    m.opt_gap2 = sum.opt_gap2 / count;
    m.track_pi2 = sum.track_pi2 / count;
    m.e_k = sum.e_k / count;
    m.f_bar_gap = sum.f_bar_gap / count;
    m.x_norm2 = sum.x_norm2 / count;
  }
  return out;
}

json constants_json(const Network& net) {
  const auto& pd = net.perron;
  const auto& gc = net.constants;
  return json{{"n", net.size()},
              {"pi", std::vector<double>(pd.pi.data(), pd.pi.data() + pd.pi.size())},
              {"sigma_b", pd.sigma_b},
              {"pi_max", pd.pi_max},
              {"pi_min", pd.pi_min},
              {"h", gc.h},
              {"beta", gc.beta},
              {"y", gc.y_sup},
              {"y_minus", gc.y_minus},
              {"tau", gc.tau}};
}

json bound_report_json(const BoundReport& r) {
  return json{{"alpha", r.alpha},
              {"alpha_max_thm1", r.alpha_max_thm1},
              {"alpha_max_cor1", r.alpha_max_cor1},
              {"gamma_bound", r.gamma_bound},
              {"rho_a", r.rho_a},
              {"residual_u1", r.residual_u1},
              {"residual_u2", r.residual_u2},
              {"e_inf_bound", r.e_inf_bound}};
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

json metric_summary(const std::vector<TraceRow>& rows, const ExperimentConfig& cfg,
                    const StepSchedule& schedule) {
  json out = json::object();
  for (Metric m : {Metric::AgreementPi2, Metric::OptGap2, Metric::TrackPi2, Metric::Ek,
                   Metric::FBarGap, Metric::XNorm2}) {
    const Series s = series(rows, m);
    json entry;
    const auto plateau = plateau_estimate(s, cfg.tail_fraction);
    entry["plateau"] = plateau.mean;
    entry["plateau_stderr"] = plateau.std_error;
    entry["drifting"] = plateau.drifting;
    entry["terminal"] = s.value.back();
    if (cfg.slope_window) {
      const double offset = schedule.kind() == StepSchedule::Kind::Decaying ? schedule.m() : 0.0;
      try {
        const auto fit = fit_loglog_slope(s, cfg.slope_window->first, cfg.slope_window->second, offset);
        entry["slope"] = fit.slope;
        entry["slope_r2"] = fit.r2;
      } catch (const std::invalid_argument& e) {
        entry["slope"] = nullptr;
        entry["slope_error"] = e.what();
      }
    }
    out[std::string(metric_name(m))] = entry;
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const Experiment& exp,
                                const std::optional<std::filesystem::path>& out_dir) {
  const auto& cfg = exp.config;
  const std::string config_digest = sha256_hex(cfg.source.dump());
  ExperimentResult result;
  result.traces.resize(cfg.replicas);
  parallel_for(
      cfg.replicas,
      [&](std::size_t r) {
        RunOptions opt;
        opt.algorithm = cfg.algorithm;
        opt.schedule = exp.schedule;
        opt.k_max = cfg.k_max;
        opt.record_every = cfg.record_every;
        opt.seed = cfg.seed;
        opt.stream = r;
        result.traces[r] = run(exp.network, exp.objective, exp.reference, exp.x0, opt);
        result.traces[r].config_digest = config_digest;
      },
      cfg.threads);
  result.mean_rows = mean_trace(result.traces);

  std::string all_csv;
  json replicas = json::array();
  InvariantReport worst;
  worst.lemma2_min_slack = std::numeric_limits<double>::infinity();
  for (const auto& t : result.traces) {
    const std::string csv = trace_csv(t);
    all_csv += csv;
    result.aborted = result.aborted || t.aborted;
    replicas.push_back({{"stream", t.stream}, {"aborted", t.aborted}, {"reason", t.abort_reason}});
    worst.y_sum_error = std::max(worst.y_sum_error, t.invariants.y_sum_error);
    worst.tracking_error = std::max(worst.tracking_error, t.invariants.tracking_error);
    worst.mean_step_error = std::max(worst.mean_step_error, t.invariants.mean_step_error);
    worst.lemma2_min_slack = std::min(worst.lemma2_min_slack, t.invariants.lemma2_min_slack);
    worst.lemma2_failures += t.invariants.lemma2_failures;
  }

  json& s = result.summary;
  s["algorithm"] = std::string(algorithm_name(cfg.algorithm));
  s["seed"] = cfg.seed;
  s["replicas"] = cfg.replicas;
  s["k_max"] = cfg.k_max;
  s["config_digest"] = config_digest;
  s["graph"] = constants_json(exp.network);
  s["objective"] = {{"kind", exp.objective.kind() == Objective::Kind::Quadratic ? "quadratic" : "logistic"},
                    {"mu", exp.curvature.mu},
                    {"ell", exp.curvature.ell},
                    {"kappa", exp.curvature.kappa},
                    {"sigma2", exp.sigma2},
                    {"z_star", std::vector<double>(exp.reference.z_star.data(),
                                                   exp.reference.z_star.data() + exp.reference.z_star.size())},
                    {"f_star", exp.reference.f_star}};
  if (exp.schedule.kind() == StepSchedule::Kind::Constant) {
    s["schedule"] = {{"kind", "constant"}, {"alpha", exp.schedule.alpha()}};
    s["bounds"] = bound_report_json(bound_report(exp.network.constants, exp.network.perron,
                                                 exp.curvature.mu, exp.curvature.ell, exp.sigma2,
                                                 exp.network.size(), exp.schedule.alpha()));
  } else {
    s["schedule"] = {{"kind", "decaying"}, {"theta", exp.schedule.theta()}, {"m", exp.schedule.m()}};
  }
  s["metrics"] = metric_summary(result.mean_rows, cfg, exp.schedule);
  s["invariants"] = {{"y_sum_error", worst.y_sum_error},
                     {"tracking_error", worst.tracking_error},
                     {"mean_step_error", worst.mean_step_error},
                     {"lemma2_min_slack", worst.lemma2_min_slack},
                     {"lemma2_failures", worst.lemma2_failures}};
  s["runs"] = replicas;
  s["aborted"] = result.aborted;
  s["digest"] = sha256_hex(config_digest + "\n" + std::to_string(cfg.seed) + "\n" + all_csv);

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    for (std::size_t r = 0; r < result.traces.size(); ++r) {
      std::ofstream out(*out_dir / ("trace_" + std::to_string(r) + ".csv"));
      write_trace_csv(result.traces[r], out);
    }
    std::ofstream out(*out_dir / "summary.json");
    out << s.dump(2) << '\n';
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir,
                                bool enforce_bounds) {
  return run_experiment(prepare_experiment(config, enforce_bounds), out_dir);
}

json sweep(const ExperimentConfig& config, const std::string& parameter,
           const std::vector<double>& values, const std::optional<std::filesystem::path>& out_dir,
           bool enforce_bounds) {
  if (values.empty()) throw ConfigError("sweep: empty value list");
  if (parameter != "alpha" && parameter != "theta" && parameter != "sigma2" && parameter != "n") {
    throw ConfigError("sweep: parameter must be alpha, theta, sigma2 or n");
  }
  json out;
  out["parameter"] = parameter;
  out["runs"] = json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    ExperimentConfig c = config;
    if (parameter == "alpha") {
      if (c.schedule.kind != "constant") throw ConfigError("sweep: alpha needs a constant schedule");
      c.schedule.alpha = v;
      c.schedule.alpha_fraction.reset();
      c.source["schedule"] = {{"kind", "constant"}, {"alpha", v}};
    } else if (parameter == "theta") {
      if (c.schedule.kind != "decaying") throw ConfigError("sweep: theta needs a decaying schedule");
      c.schedule.theta = v;
      c.source["schedule"]["theta"] = v;
    } else if (parameter == "sigma2") {
      if (c.objective.kind != "quadratic") throw ConfigError("sweep: sigma2 needs a quadratic objective");
      c.objective.sigma2 = v;
      c.source["objective"]["sigma2"] = v;
    } else {
      if (c.graph.kind != "exponential" && c.graph.kind != "geometric") {
        throw ConfigError("sweep: n needs a generated graph");
      }
      if (!c.objective.costs.empty()) throw ConfigError("sweep: n needs generated costs");
      if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("sweep: n values must be positive integers");
      c.graph.n = static_cast<std::size_t>(v);
      c.source["graph"]["n"] = c.graph.n;
    }
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = *out_dir / (parameter + "_" + std::to_string(i));
    const auto result = run_experiment(c, dir, enforce_bounds);
    out["runs"].push_back({{"value", v}, {"summary", result.summary}});
  }
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    std::ofstream f(*out_dir / "sweep.json");
    f << out.dump(2) << '\n';
  }
  return out;
}

json compare_algorithms(const ExperimentConfig& config, const std::vector<Algorithm>& algorithms,
                        const std::optional<std::filesystem::path>& out_dir) {
  if (algorithms.empty()) throw ConfigError("compare: empty algorithm list");
  const Experiment base = prepare_experiment(config);
  json out;
  out["algorithms"] = json::array();
  std::vector<std::pair<double, std::string>> ranking;
  for (Algorithm a : algorithms) {
    Experiment exp = base;
    exp.config.algorithm = a;
    exp.config.source["algorithm"] = std::string(algorithm_name(a));
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = *out_dir / std::string(algorithm_name(a));
    const auto result = run_experiment(exp, dir);
    json entry;
    entry["algorithm"] = std::string(algorithm_name(a));
    entry["summary"] = result.summary;
    std::vector<double> ks, epochs, ek;
    for (const auto& r : result.mean_rows) {
      ks.push_back(static_cast<double>(r.k));
      epochs.push_back(r.epoch);
      ek.push_back(r.metrics.e_k);
    }
    entry["k"] = ks;
    entry["epoch"] = epochs;
    entry["e_k"] = ek;
    out["algorithms"].push_back(entry);
    ranking.emplace_back(result.summary["metrics"]["e_k"]["plateau"].get<double>(),
                         std::string(algorithm_name(a)));
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  out["ranking"] = json::array();
  for (const auto& [plateau, name] : ranking) out["ranking"].push_back({{"algorithm", name}, {"plateau", plateau}});
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    std::ofstream f(*out_dir / "compare.json");
    f << out.dump(2) << '\n';
  }
  return out;
}

json verify_lti(const ExperimentConfig& config, std::size_t replicas,
                const std::vector<std::int64_t>& checkpoints) {
  const Experiment exp = prepare_experiment(config);
  if (exp.schedule.kind() != StepSchedule::Kind::Constant) {
    throw ConfigError("schedule: verify-lti needs a constant step");
  }
  if (exp.objective.dim() != 1) throw ConfigError("objective.dim: verify-lti needs dim = 1");
  LtiSystem lti;
  try {
    lti = build_lti_system(exp.schedule.alpha(), exp.network.constants, exp.network.perron,
                           exp.curvature.mu, exp.curvature.ell, exp.sigma2, exp.network.size());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("schedule.alpha: ") + e.what());
  }
  const auto v = mc_verify_lti(lti, exp.network, exp.objective, exp.reference, exp.x0, config.seed,
                               replicas, checkpoints, config.threads);
  json out;
  out["alpha"] = lti.alpha;
  out["replicas"] = v.replicas;
  out["pass"] = v.pass;
  out["checkpoints"] = json::array();
  auto vec = [](const Eigen::Vector3d& x) { return std::vector<double>{x(0), x(1), x(2)}; };
  for (const auto& c : v.checkpoints) {
    out["checkpoints"].push_back({{"k", c.k},
                                  {"t_k", vec(c.t_k)},
                                  {"t_next", vec(c.t_next)},
                                  {"s_k", c.s_k},
                                  {"mean_excess", vec(c.mean_excess)},
                                  {"allowance", vec(c.allowance)},
                                  {"pass", c.pass}});
  }
  return out;
}

}  // namespace saddopt
