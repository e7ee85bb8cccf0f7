#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdespot/harness/results.hpp"

namespace {

using pdespot::ExperimentConfig;

struct Options {
  std::string domain = "navigation";
  std::string domain_config_path;
  std::vector<std::string> domain_settings;

  // Search; unset values fall back to the model's discount and depth.
  std::int32_t scenarios = 500;
  double gamma = 0.0;
  double xi = 0.95;
  double action_explore = 0.0;
  double virtual_loss = 0.0;
  std::int32_t max_depth = 0;
  double budget = 1.0;
  std::int32_t workers = 1;
  std::uint64_t search_seed = 42;
  double target_gap = 0.0;
  std::int64_t max_trials = 0;
  bool no_clamp = false;

  std::vector<std::string> variants{"serial"};
  std::int32_t episodes = 1;
  std::int32_t step_limit = 100;
  std::size_t particles = 10000;
  std::uint64_t seed = 1;
  std::size_t backend_threads = 0;
  std::int32_t success_steps = 60;
  std::string output_dir;

  bool dump_tree = false;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
};

void add_domain_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--domain", o.domain, "tiger | navigation | mars | driving | tabular")->capture_default_str();
  cmd->add_option("--domain-config", o.domain_config_path, "key = value file with domain settings");
  cmd->add_option("--set", o.domain_settings, "domain setting key=value, repeatable");
}

void add_search_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("-K,--scenarios", o.scenarios, "scenarios sampled per planning call")->capture_default_str();
  cmd->add_option("--gamma", o.gamma, "discount (default: the model's)");
  cmd->add_option("--xi", o.xi, "target uncertainty fraction")->capture_default_str();
  cmd->add_option("--action-explore", o.action_explore, "PO-UCT bonus scale c_a")->capture_default_str();
  cmd->add_option("--virtual-loss", o.virtual_loss, "virtual loss scale c_o")->capture_default_str();
  cmd->add_option("--max-depth", o.max_depth, "search and rollout depth D (default: the model's)");
  cmd->add_option("--budget", o.budget, "planning time per step, seconds")->capture_default_str();
  cmd->add_option("--workers", o.workers, "tree search workers")->capture_default_str();
  cmd->add_option("--search-seed", o.search_seed, "scenario sampling seed")->capture_default_str();
  cmd->add_option("--target-gap", o.target_gap, "stop once the root gap is this small")->capture_default_str();
  cmd->add_option("--max-trials", o.max_trials, "cap on trials per planning call, 0 for none")->capture_default_str();
  cmd->add_flag("--no-clamp", o.no_clamp, "do not clamp backed-up bounds to their initial values");
  cmd->add_option("--variant", o.variants, "serial | parallel-tree-only | parallel-backend-only | hybrid")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--backend-threads", o.backend_threads, "parallel backend threads, 0 for all cores")
      ->capture_default_str();
  cmd->add_option("--particles", o.particles, "belief particles")->capture_default_str();
  cmd->add_option("--seed", o.seed, "episode seed")->capture_default_str();
}

void add_episode_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--step-limit", o.step_limit, "steps per episode")->capture_default_str();
  cmd->add_option("--success-steps", o.success_steps, "goal must be reached within this many steps")
      ->capture_default_str();
}

void add_output_flag(CLI::App* cmd, Options& o) {
  cmd->add_option("-o,--output-dir", o.output_dir, "directory for episodes.csv and summary.json")
      ->envname("PDESPOT_OUTPUT_DIR");
}

pdespot::domains::KeyValueConfig domain_config(const Options& o) {
  auto config = o.domain_config_path.empty() ? pdespot::domains::KeyValueConfig{}
                                             : pdespot::domains::KeyValueConfig::load(o.domain_config_path);
  for (const auto& kv : o.domain_settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw pdespot::ConfigError("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

ExperimentConfig experiment_config(const Options& o) {
  ExperimentConfig c;
  c.domain = o.domain;
  c.domain_config = domain_config(o);
  const auto spec = pdespot::make_domain(c.domain, c.domain_config).spec;
  c.search = pdespot::SearchConfig::for_model(spec);
  if (o.gamma > 0.0) c.search.gamma = o.gamma;
  if (o.max_depth > 0) c.search.max_depth = o.max_depth;
  c.search.scenario_count = o.scenarios;
  c.search.xi = o.xi;
  c.search.action_explore = o.action_explore;
  c.search.virtual_loss = o.virtual_loss;
  c.search.time_budget = o.budget;
  c.search.workers = o.workers;
  c.search.seed = o.search_seed;
  c.search.target_gap = o.target_gap;
  c.search.max_trials = o.max_trials;
  c.search.clamp_bounds = !o.no_clamp;
  c.variants.clear();
  for (const auto& v : o.variants) c.variants.push_back(pdespot::parse_variant(v));
  c.episodes = o.episodes;
  c.step_limit = o.step_limit;
  c.particles = o.particles;
  c.seed = o.seed;
  c.backend_threads = o.backend_threads;
  c.success_steps = o.success_steps;
  c.output_dir = o.output_dir;
  c.validate();
  return c;
}

void print_summary(const pdespot::ExperimentReport& report, std::ostream& out) {
  out << std::left << std::setw(22) << "variant" << std::setw(22) << "return (mean +- se)" << std::setw(14)
      << "nodes" << std::setw(10) << "depth" << std::setw(10) << "speedup" << "success\n";
  for (const auto& s : report.summaries) {
    std::ostringstream ret;
    ret << std::fixed << std::setprecision(3) << s.discounted_return.mean << " +- " << s.discounted_return.se;
    std::ostringstream nodes;
    nodes << std::fixed << std::setprecision(1) << s.nodes_normalized.mean;
    std::ostringstream depth;
    depth << std::fixed << std::setprecision(2) << s.depth.mean;
    std::ostringstream speedup;
    if (s.speedup) speedup << std::fixed << std::setprecision(2) << *s.speedup;
    else speedup << "-";
    out << std::setw(22) << pdespot::to_string(s.variant) << std::setw(22) << ret.str() << std::setw(14)
        << nodes.str() << std::setw(10) << depth.str() << std::setw(10) << speedup.str();
    if (s.success_rate) out << std::setprecision(3) << *s.success_rate;
    else out << "-";
    if (s.aborted) out << "  (" << s.aborted << " aborted)";
    out << '\n';
  }
}

int run_plan(const Options& o) {
  const auto c = experiment_config(o);
  const auto domain = pdespot::make_domain(c.domain, c.domain_config);
  pdespot::PlannerSettings planner;
  planner.search = c.search;
  planner.variant = c.variants.front();
  planner.backend_threads = c.backend_threads;
  std::cout << domain.plan(planner, c.seed, c.particles, o.dump_tree).dump(2) << '\n';
  return 0;
}

int run_episode(const Options& o) {
  auto c = experiment_config(o);
  c.episodes = 1;
  const auto domain = pdespot::make_domain(c.domain, c.domain_config);
  const auto record = domain.run_episode(c.episode_settings(c.variants.front()), c.episode_seed(0));
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : record.steps) {
    steps.push_back({{"step", s.step},
                     {"action", s.action},
                     {"observation", s.observation},
                     {"reward", s.reward},
                     {"fallback", s.fallback},
                     {"node_count", s.stats.node_count},
                     {"trials", s.stats.trials},
                     {"max_depth", s.stats.max_depth},
                     {"plan_seconds", s.stats.elapsed_seconds}});
  }
  nlohmann::json out{{"variant", std::string(pdespot::to_string(record.variant))},
                     {"seed", record.seed},
                     {"steps", std::move(steps)},
                     {"discounted_return", record.discounted_return},
                     {"success", record.success},
                     {"terminal", record.terminal},
                     {"aborted", record.aborted}};
  if (record.aborted) out["error"] = record.error;
  std::cout << out.dump(2) << '\n';
  if (!c.output_dir.empty()) {
    pdespot::ExperimentReport report;
    report.config = c;
    report.config.variants = {record.variant};
    report.reports_success = domain.reports_success;
    report.episodes = {{record}};
    report.summaries = {pdespot::summarize(record.variant, report.episodes.front(), c.search.time_budget,
                                           domain.reports_success)};
    pdespot::emit_results(report, c.output_dir);
  }
  return record.aborted ? 1 : 0;
}

int run_experiment(const Options& o) {
  const auto c = experiment_config(o);
  const auto report = pdespot::run_experiment(c);
  print_summary(report, std::cout);
  if (!c.output_dir.empty()) pdespot::emit_results(report, c.output_dir);
  return pdespot::any_aborted(report) ? 1 : 0;
}

int run_sweep(const Options& o) {
  if (o.sweep_param.empty() || o.sweep_values.empty()) throw pdespot::ConfigError("sweep needs --param and --values");
  bool aborted = false;
  for (const auto& value : o.sweep_values) {
    Options point = o;
    const std::string& p = o.sweep_param;
    if (p.rfind("domain.", 0) == 0) {
      point.domain_settings.push_back(p.substr(7) + "=" + value);
    } else if (p == "scenarios") {
      point.scenarios = std::stoi(value);
    } else if (p == "workers") {
      point.workers = std::stoi(value);
    } else if (p == "budget") {
      point.budget = std::stod(value);
    } else if (p == "action_explore") {
      point.action_explore = std::stod(value);
    } else if (p == "virtual_loss") {
      point.virtual_loss = std::stod(value);
    } else if (p == "backend_threads") {
      point.backend_threads = static_cast<std::size_t>(std::stoul(value));
    } else {
      throw pdespot::ConfigError("cannot sweep over '" + p +
                                 "' (scenarios, workers, budget, action_explore, virtual_loss, backend_threads, "
                                 "domain.<key>)");
    }
    if (!o.output_dir.empty()) point.output_dir = o.output_dir + "/" + p + "=" + value;
    const auto c = experiment_config(point);
    const auto report = pdespot::run_experiment(c);
    std::cout << "== " << p << " = " << value << '\n';
    print_summary(report, std::cout);
    if (!c.output_dir.empty()) pdespot::emit_results(report, c.output_dir);
    aborted = aborted || pdespot::any_aborted(report);
  }
  return aborted ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel DESPOT planner: single plans, closed-loop episodes, experiments"};
  app.require_subcommand(1);
  Options o;

  auto* plan = app.add_subcommand("plan", "one planning call from the initial belief; prints tree statistics");
  add_domain_flags(plan, o);
  add_search_flags(plan, o);
  plan->add_flag("--dump-tree", o.dump_tree, "include every node and edge in the output");

  auto* episode = app.add_subcommand("episode", "one closed-loop episode; prints the step log");
  add_domain_flags(episode, o);
  add_search_flags(episode, o);
  add_episode_flags(episode, o);
  add_output_flag(episode, o);

  auto* experiment = app.add_subcommand("experiment", "several episodes per planner variant");
  add_domain_flags(experiment, o);
  add_search_flags(experiment, o);
  add_episode_flags(experiment, o);
  add_output_flag(experiment, o);
  experiment->add_option("--episodes", o.episodes, "episodes per variant")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "an experiment per value of one parameter");
  add_domain_flags(sweep, o);
  add_search_flags(sweep, o);
  add_episode_flags(sweep, o);
  add_output_flag(sweep, o);
  sweep->add_option("--episodes", o.episodes, "episodes per variant")->capture_default_str();
  sweep->add_option("--param", o.sweep_param, "scenarios, workers, budget, ..., or domain.<key>")->required();
  sweep->add_option("--values", o.sweep_values, "comma-separated values")->delimiter(',')->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) return run_plan(o);
    if (*episode) return run_episode(o);
    if (*experiment) return run_experiment(o);
    return run_sweep(o);
  } catch (const pdespot::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
