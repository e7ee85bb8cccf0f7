#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdespot/domains/config.hpp"
#include "pdespot/harness/episode.hpp"
#include "pdespot/io/tree_json.hpp"

namespace pdespot {

/// A domain instance behind a uniform, type-erased face for the CLI and the
/// experiment runner.
struct DomainHandle {
  std::string name;
  ModelSpec spec;
  bool reports_success = false;
  std::function<EpisodeRecord(const EpisodeSettings&, std::uint64_t seed)> run_episode;
  /// One planning call from the initial belief; returns search statistics
  /// and, when `dump_tree` is set, the whole tree.
  std::function<nlohmann::json(const PlannerSettings&, std::uint64_t seed, std::size_t particles, bool dump_tree)>
      plan;
};

namespace detail {

template <Model M>
DomainHandle wrap_domain(std::string name, std::shared_ptr<const M> model) {
  DomainHandle handle;
  handle.name = std::move(name);
  handle.spec = model->spec();
  handle.reports_success = GoalModel<M>;
  handle.run_episode = [model](const EpisodeSettings& settings, std::uint64_t seed) {
    return pdespot::run_episode(*model, settings, seed);
  };
  handle.plan = [model](const PlannerSettings& settings, std::uint64_t seed, std::size_t particles, bool dump_tree) {
    Planner<M> planner(*model, settings);
    const auto belief = model->initial_belief(particles, hash_combine(seed, 0xb311efULL));
    auto result = planner.plan(belief, hash_combine(settings.search.seed, hash_combine(seed, 0)));
    nlohmann::json out{{"action", result.action},
                       {"fallback", result.fallback},
                       {"node_count", result.stats.node_count},
                       {"max_depth", result.stats.max_depth},
                       {"trials", result.stats.trials},
                       {"expansions", result.stats.expansions},
                       {"elapsed_seconds", result.stats.elapsed_seconds},
                       {"root_upper", result.stats.root_upper},
                       {"root_lower", result.stats.root_lower}};
    const auto counters = planner.backend().counters();
    out["backend"] = {{"name", planner.backend().name()},
                      {"requests", counters.requests},
                      {"update_ns", counters.update_ns},
                      {"expand_ns", counters.expand_ns},
                      {"rollout_ns", counters.rollout_ns},
                      {"reduce_ns", counters.reduce_ns}};
    if (dump_tree) out["tree"] = tree_to_json(*result.tree);
    return out;
  };
  return handle;
}

}  // namespace detail

inline const std::vector<std::string>& domain_names() {
  static const std::vector<std::string> names{"tiger", "navigation", "mars", "driving", "tabular"};
  return names;
}

/// Builds a domain by name from `key = value` settings. Unknown names and
/// unknown settings are configuration errors.
inline DomainHandle make_domain(const std::string& name, const domains::KeyValueConfig& config = {}) {
  DomainHandle handle;
  if (name == "tiger") {
    handle = detail::wrap_domain(name, std::make_shared<const domains::Tiger>(domains::tiger_params(config)));
  } else if (name == "navigation") {
    handle = detail::wrap_domain(name, std::make_shared<const domains::Navigation>(domains::navigation_params(config)));
  } else if (name == "mars") {
    handle = detail::wrap_domain(name, std::make_shared<const domains::Mars>(domains::mars_params(config)));
  } else if (name == "driving") {
    handle = detail::wrap_domain(name, std::make_shared<const domains::Driving>(domains::driving_params(config)));
  } else if (name == "tabular") {
    handle = detail::wrap_domain(name, std::make_shared<const domains::Tabular>(domains::tabular_params(config)));
  } else {
    throw ConfigError("unknown domain '" + name + "'");
  }
  config.reject_unused();
  return handle;
}

}  // namespace pdespot
