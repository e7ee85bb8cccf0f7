#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pdespot/harness/registry.hpp"

namespace pdespot {

struct ExperimentConfig {
  std::string domain = "navigation";
  domains::KeyValueConfig domain_config;
  SearchConfig search;
  std::int32_t episodes = 1;
  std::vector<Variant> variants{Variant::kSerial};
  std::string output_dir;
  std::int32_t step_limit = 100;
  std::size_t particles = 10000;
  std::uint64_t seed = 1;
  std::size_t backend_threads = 0;
  std::int32_t success_steps = 60;

  void validate() const {
    if (episodes < 1) throw ConfigError("episode count must be >= 1");
    if (variants.empty()) throw ConfigError("at least one planner variant is required");
    if (step_limit < 0) throw ConfigError("step limit must be >= 0");
    search.validate();
  }

  EpisodeSettings episode_settings(Variant v) const {
    EpisodeSettings s;
    s.planner.search = search;
    s.planner.variant = v;
    s.planner.backend_threads = backend_threads;
    s.step_limit = step_limit;
    s.filter.particle_count = particles;
    s.success_steps = success_steps;
    return s;
  }

  /// Episode e uses the same seed under every variant.
  std::uint64_t episode_seed(std::int32_t e) const noexcept {
    return hash_combine(seed, static_cast<std::uint64_t>(e));
  }
};

/// Per-episode planner statistics averaged over the episode's steps.
struct EpisodeMetrics {
  double mean_nodes = 0.0;
  double mean_nodes_normalized = 0.0;
  double mean_trials = 0.0;
  double mean_depth = 0.0;
  double mean_plan_seconds = 0.0;
  std::int32_t max_depth = 0;
};

inline EpisodeMetrics episode_metrics(const EpisodeRecord& r, double budget) {
  EpisodeMetrics m;
  if (r.steps.empty()) return m;
  for (const auto& s : r.steps) {
    m.mean_nodes += static_cast<double>(s.stats.node_count);
    m.mean_nodes_normalized += normalized_node_count(s.stats, budget);
    m.mean_trials += static_cast<double>(s.stats.trials);
    m.mean_depth += s.stats.max_depth;
    m.mean_plan_seconds += s.stats.elapsed_seconds;
    m.max_depth = std::max(m.max_depth, s.stats.max_depth);
  }
  const auto n = static_cast<double>(r.steps.size());
  m.mean_nodes /= n;
  m.mean_nodes_normalized /= n;
  m.mean_trials /= n;
  m.mean_depth /= n;
  m.mean_plan_seconds /= n;
  return m;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  bool operator==(const MeanSe&) const = default;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return out;
}

struct VariantSummary {
  Variant variant = Variant::kSerial;
  std::int32_t episodes = 0;
  std::int32_t aborted = 0;
  MeanSe discounted_return;
  MeanSe nodes;
  MeanSe nodes_normalized;
  MeanSe depth;
  double mean_trials = 0.0;
  double mean_plan_seconds = 0.0;
  std::optional<double> success_rate;
  std::optional<double> speedup;  // normalized tree size relative to the serial variant

  bool operator==(const VariantSummary&) const = default;
};

struct ExperimentReport {
  ExperimentConfig config;
  bool reports_success = false;
  std::vector<std::vector<EpisodeRecord>> episodes;  // per variant, in config order
  std::vector<VariantSummary> summaries;
};

inline VariantSummary summarize(Variant v, const std::vector<EpisodeRecord>& records, double budget,
                                bool reports_success) {
  VariantSummary s;
  s.variant = v;
  s.episodes = static_cast<std::int32_t>(records.size());
  std::vector<double> returns, nodes, normalized, depth;
  double successes = 0.0;
  for (const auto& r : records) {
    const EpisodeMetrics m = episode_metrics(r, budget);
    returns.push_back(r.discounted_return);
    nodes.push_back(m.mean_nodes);
    normalized.push_back(m.mean_nodes_normalized);
    depth.push_back(m.mean_depth);
    s.mean_trials += m.mean_trials;
    s.mean_plan_seconds += m.mean_plan_seconds;
    if (r.aborted) ++s.aborted;
    if (r.success) successes += 1.0;
  }
  s.discounted_return = mean_se(returns);
  s.nodes = mean_se(nodes);
  s.nodes_normalized = mean_se(normalized);
  s.depth = mean_se(depth);
  if (!records.empty()) {
    s.mean_trials /= static_cast<double>(records.size());
    s.mean_plan_seconds /= static_cast<double>(records.size());
    if (reports_success) s.success_rate = successes / static_cast<double>(records.size());
  }
  return s;
}

/// Fills in each summary's speedup as its mean normalized tree size over the
/// serial variant's.
inline void assign_speedups(std::vector<VariantSummary>& summaries) {
  const VariantSummary* serial = nullptr;
  for (const auto& s : summaries)
    if (s.variant == Variant::kSerial) serial = &s;
  if (serial == nullptr || !(serial->nodes_normalized.mean > 0.0)) return;
  const double base = serial->nodes_normalized.mean;
  for (auto& s : summaries) s.speedup = s.nodes_normalized.mean / base;
}

/// Runs every variant over the same episode seeds, one episode at a time.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const DomainHandle domain = make_domain(config.domain, config.domain_config);
  ExperimentReport report;
  report.config = config;
  report.reports_success = domain.reports_success;
  for (Variant v : config.variants) {
    const EpisodeSettings settings = config.episode_settings(v);
    std::vector<EpisodeRecord> records;
    records.reserve(static_cast<std::size_t>(config.episodes));
    for (std::int32_t e = 0; e < config.episodes; ++e) records.push_back(domain.run_episode(settings, config.episode_seed(e)));
    report.summaries.push_back(summarize(v, records, config.search.time_budget, domain.reports_success));
    report.episodes.push_back(std::move(records));
  }
  assign_speedups(report.summaries);
  return report;
}

inline bool any_aborted(const ExperimentReport& report) {
  for (const auto& s : report.summaries)
    if (s.aborted > 0) return true;
  return false;
}

}  // namespace pdespot
