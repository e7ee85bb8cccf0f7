#pragma once

#include <cstdint>
#include <string>

#include "pdespot/core/errors.hpp"
#include "pdespot/core/model.hpp"

namespace pdespot {

struct SearchConfig {
  std::int32_t scenario_count = 500;  // K
  double gamma = 0.95;
  double xi = 0.95;            // target uncertainty fraction for WEU
  double action_explore = 0.0;  // c_a, PO-UCT bonus scale
  double virtual_loss = 0.0;    // c_o, observation-branch virtual loss scale
  std::int32_t max_depth = 90;  // D, caps both the tree and rollouts
  double time_budget = 1.0;     // seconds
  std::int32_t workers = 1;
  std::uint64_t seed = 42;
  double target_gap = 0.0;  // stop once u(b0) - l(b0) <= target_gap
  std::int64_t max_trials = 0;  // 0: unbounded; otherwise a hard cap on trials started
  bool clamp_bounds = true;     // floor lower at its rollout value, cap upper at its heuristic

  void validate() const {
    if (scenario_count < 1) throw ConfigError("scenario count must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (!(xi > 0.0 && xi < 1.0)) throw ConfigError("xi must lie in (0, 1)");
    if (action_explore < 0.0) throw ConfigError("c_a must be >= 0");
    if (virtual_loss < 0.0) throw ConfigError("c_o must be >= 0");
    if (max_depth < 1) throw ConfigError("max depth must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (target_gap < 0.0) throw ConfigError("target gap must be >= 0");
    if (max_trials < 0) throw ConfigError("max trials must be >= 0");
  }

  /// Defaults taken from a model: discount and rollout depth.
  static SearchConfig for_model(const ModelSpec& spec) {
    SearchConfig config;
    config.gamma = spec.discount;
    config.max_depth = spec.max_rollout_depth;
    return config;
  }
};

struct SearchStats {
  std::int64_t node_count = 0;
  std::int32_t max_depth = 0;
  std::int64_t trials = 0;
  std::int64_t expansions = 0;
  double elapsed_seconds = 0.0;
  double root_upper = 0.0;
  double root_lower = 0.0;
};

}  // namespace pdespot
