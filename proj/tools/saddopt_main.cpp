#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "saddopt/analysis.hpp"
#include "saddopt/digraph.hpp"
#include "saddopt/error.hpp"
#include "saddopt/harness.hpp"

namespace {

using nlohmann::json;
using namespace saddopt;

constexpr int kConfigError = 2;
constexpr int kAborted = 3;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write " + out_path);
    out << j.dump(2) << '\n';
  }
}

struct Common {
  std::string config;
  std::optional<std::int64_t> seed;
  std::string out_dir;
  bool enforce_bounds = false;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "Experiment config (JSON)")->required();
    app->add_option("--seed", seed, "Override the config seed");
    app->add_option("--out-dir", out_dir, "Directory for traces and summaries");
    app->add_flag("--enforce-bounds", enforce_bounds, "Reject steps outside the proven bounds");
  }

  ExperimentConfig load() const {
    ExperimentConfig c = load_config(config);
    if (seed) {
      if (*seed < 0) throw ConfigError("--seed: must be >= 0");
      c.seed = static_cast<std::uint64_t>(*seed);
      c.source["seed"] = c.seed;
    }
    return c;
  }

  std::optional<std::filesystem::path> dir() const {
    if (out_dir.empty()) return std::nullopt;
    return std::filesystem::path(out_dir);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized stochastic optimization over directed graphs"};
  app.require_subcommand(1);

  auto* graph = app.add_subcommand("graph", "Graph utilities");
  graph->require_subcommand(1);
  auto* gen = graph->add_subcommand("gen", "Generate a digraph as JSON");
  std::string kind = "exponential";
  std::size_t n = 16;
  double radius = 0.6, drop = 0.3;
  std::uint64_t graph_seed = 1;
  std::string graph_out;
  gen->add_option("--kind", kind, "exponential | geometric")
      ->check(CLI::IsMember({"exponential", "geometric"}));
  gen->add_option("--n", n, "Node count");
  gen->add_option("--radius", radius, "Connection radius (geometric)");
  gen->add_option("--drop-prob", drop, "Edge drop probability (geometric)");
  gen->add_option("--seed", graph_seed, "Random seed (geometric)");
  gen->add_option("--out", graph_out, "Output file (default stdout)");

  auto* constants = app.add_subcommand("constants", "Print Perron and graph constants");
  std::string graph_path;
  constants->add_option("--graph", graph_path, "Graph JSON")->required();

  auto* bound = app.add_subcommand("bound", "Print step-size and residual bounds");
  double mu = 1.0, ell = 1.0, sigma2 = 0.0, alpha = 0.0;
  bound->add_option("--graph", graph_path, "Graph JSON")->required();
  bound->add_option("--mu", mu, "Strong convexity")->required();
  bound->add_option("--ell", ell, "Smoothness")->required();
  bound->add_option("--sigma2", sigma2, "Oracle variance")->required();
  bound->add_option("--alpha", alpha, "Step size")->required();

  Common run_opts, sweep_opts, compare_opts, lti_opts;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment");
  run_opts.add_to(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Rerun an experiment over parameter values");
  sweep_opts.add_to(sweep_cmd);
  std::string parameter;
  std::vector<double> values;
  sweep_cmd->add_option("--param", parameter, "alpha | theta | sigma2 | n")->required();
  sweep_cmd->add_option("--values", values, "Values to sweep")->required()->delimiter(',');

  auto* compare_cmd = app.add_subcommand("compare", "Compare algorithms on one setup");
  compare_opts.add_to(compare_cmd);
  std::vector<std::string> algs{"saddopt", "addopt", "sgp", "gp"};
  compare_cmd->add_option("--algs", algs, "Algorithms")->delimiter(',');

  auto* lti_cmd = app.add_subcommand("verify-lti", "Monte-Carlo check of the error system");
  lti_opts.add_to(lti_cmd);
  std::size_t replicas = 1000;
  std::vector<std::int64_t> checkpoints{1, 5, 10, 50, 200};
  lti_cmd->add_option("--replicas", replicas, "Replica count");
  lti_cmd->add_option("--checkpoints", checkpoints, "Iterations to check")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (gen->parsed()) {
      const Digraph g = kind == "exponential" ? build_exponential_digraph(n)
                                              : build_geometric_digraph(n, radius, drop, graph_seed);
      emit(graph_to_json(g), graph_out);
    } else if (constants->parsed()) {
      emit(constants_json(network_from_json(read_json(graph_path))), "");
    } else if (bound->parsed()) {
      const Network net = network_from_json(read_json(graph_path));
      emit(bound_report_json(bound_report(net.constants, net.perron, mu, ell, sigma2, net.size(), alpha)),
           "");
    } else if (run_cmd->parsed()) {
      const auto result = run_experiment(run_opts.load(), run_opts.dir(), run_opts.enforce_bounds);
      std::cout << result.summary.dump(2) << '\n';
      if (result.aborted) return kAborted;
    } else if (sweep_cmd->parsed()) {
      emit(sweep(sweep_opts.load(), parameter, values, sweep_opts.dir(), sweep_opts.enforce_bounds), "");
    } else if (compare_cmd->parsed()) {
      std::vector<Algorithm> list;
      for (const auto& a : algs) {
        const auto parsed = parse_algorithm(a);
        if (!parsed) throw ConfigError("--algs: unknown algorithm '" + a + "'");
        list.push_back(*parsed);
      }
      emit(compare_algorithms(compare_opts.load(), list, compare_opts.dir()), "");
    } else if (lti_cmd->parsed()) {
      const json out = verify_lti(lti_opts.load(), replicas, checkpoints);
      if (!lti_opts.out_dir.empty()) std::filesystem::create_directories(lti_opts.out_dir);
      emit(out, lti_opts.out_dir.empty() ? "" : lti_opts.out_dir + "/verify_lti.json");
      if (!lti_opts.out_dir.empty()) std::cout << out.dump(2) << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const RunAborted& e) {
    std::cerr << "run aborted: " << e.what() << '\n';
    return kAborted;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
