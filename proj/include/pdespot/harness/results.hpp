#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "pdespot/harness/experiment.hpp"

#ifndef PDESPOT_GIT_DESCRIBE
#define PDESPOT_GIT_DESCRIBE "unknown"
#endif

namespace pdespot {

inline constexpr const char* kEpisodeCsvHeader =
    "variant,episode,seed,steps,discounted_return,total_reward,success,aborted,terminal,"
    "mean_nodes,mean_nodes_normalized,mean_trials,mean_depth,max_depth";

inline std::string format_double(double x) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << x;
  return out.str();
}

/// One row per episode, variants in config order.
inline void write_episode_csv(const ExperimentReport& report, std::ostream& out) {
  out << kEpisodeCsvHeader << '\n';
  for (std::size_t v = 0; v < report.episodes.size(); ++v) {
    const auto& records = report.episodes[v];
    for (std::size_t e = 0; e < records.size(); ++e) {
      const auto& r = records[e];
      const EpisodeMetrics m = episode_metrics(r, report.config.search.time_budget);
      out << to_string(r.variant) << ',' << e << ',' << r.seed << ',' << r.step_count() << ','
          << format_double(r.discounted_return) << ',' << format_double(r.total_reward) << ',' << (r.success ? 1 : 0)
          << ',' << (r.aborted ? 1 : 0) << ',' << (r.terminal ? 1 : 0) << ',' << format_double(m.mean_nodes) << ','
          << format_double(m.mean_nodes_normalized) << ',' << format_double(m.mean_trials) << ','
          << format_double(m.mean_depth) << ',' << m.max_depth << '\n';
    }
  }
}

inline nlohmann::json to_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}}; }

inline MeanSe mean_se_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("se").get<double>()};
}

inline nlohmann::json summary_to_json(const VariantSummary& s) {
  nlohmann::json j{{"variant", std::string(to_string(s.variant))},
                   {"episodes", s.episodes},
                   {"aborted", s.aborted},
                   {"discounted_return", to_json(s.discounted_return)},
                   {"nodes", to_json(s.nodes)},
                   {"nodes_normalized", to_json(s.nodes_normalized)},
                   {"depth", to_json(s.depth)},
                   {"mean_trials", s.mean_trials},
                   {"mean_plan_seconds", s.mean_plan_seconds}};
  j["success_rate"] = s.success_rate ? nlohmann::json(*s.success_rate) : nlohmann::json(nullptr);
  j["speedup"] = s.speedup ? nlohmann::json(*s.speedup) : nlohmann::json(nullptr);
  return j;
}

inline VariantSummary summary_from_json(const nlohmann::json& j) {
  VariantSummary s;
  s.variant = parse_variant(j.at("variant").get<std::string>());
  s.episodes = j.at("episodes").get<std::int32_t>();
  s.aborted = j.at("aborted").get<std::int32_t>();
  s.discounted_return = mean_se_from_json(j.at("discounted_return"));
  s.nodes = mean_se_from_json(j.at("nodes"));
  s.nodes_normalized = mean_se_from_json(j.at("nodes_normalized"));
  s.depth = mean_se_from_json(j.at("depth"));
  s.mean_trials = j.at("mean_trials").get<double>();
  s.mean_plan_seconds = j.at("mean_plan_seconds").get<double>();
  if (!j.at("success_rate").is_null()) s.success_rate = j.at("success_rate").get<double>();
  if (!j.at("speedup").is_null()) s.speedup = j.at("speedup").get<double>();
  return s;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json variants = nlohmann::json::array();
  for (Variant v : c.variants) variants.push_back(std::string(to_string(v)));
  const SearchConfig& s = c.search;
  return {{"domain", c.domain},
          {"domain_config", c.domain_config.values()},
          {"search",
           {{"scenario_count", s.scenario_count},
            {"gamma", s.gamma},
            {"xi", s.xi},
            {"action_explore", s.action_explore},
            {"virtual_loss", s.virtual_loss},
            {"max_depth", s.max_depth},
            {"time_budget", s.time_budget},
            {"workers", s.workers},
            {"seed", s.seed},
            {"target_gap", s.target_gap},
            {"max_trials", s.max_trials},
            {"clamp_bounds", s.clamp_bounds}}},
          {"episodes", c.episodes},
          {"variants", std::move(variants)},
          {"step_limit", c.step_limit},
          {"particles", c.particles},
          {"seed", c.seed},
          {"backend_threads", c.backend_threads},
          {"success_steps", c.success_steps}};
}

inline nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json variants = nlohmann::json::array();
  for (const auto& s : report.summaries) variants.push_back(summary_to_json(s));
  const unsigned threads = std::thread::hardware_concurrency();
  return {{"config", config_to_json(report.config)},
          {"git_describe", PDESPOT_GIT_DESCRIBE},
          {"hardware",
           {{"hardware_concurrency", threads},
            {"note", "tree sizes and speedups depend on the core count; compare runs on the same machine only"}}},
          {"variants", std::move(variants)}};
}

inline std::vector<VariantSummary> summaries_from_json(const nlohmann::json& j) {
  std::vector<VariantSummary> out;
  for (const auto& v : j.at("variants")) out.push_back(summary_from_json(v));
  return out;
}

/// Writes `episodes.csv` and `summary.json` under `dir`, creating it.
inline void emit_results(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream csv(dir / "episodes.csv", std::ios::binary);
  if (!csv) throw OutputError("cannot write " + (dir / "episodes.csv").string());
  write_episode_csv(report, csv);
  std::ofstream json(dir / "summary.json", std::ios::binary);
  if (!json) throw OutputError("cannot write " + (dir / "summary.json").string());
  json << report_to_json(report).dump(2) << '\n';
  if (!csv || !json) throw OutputError("failed writing results to " + dir.string());
}

}  // namespace pdespot
