#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pdespot/core/errors.hpp"
#include "pdespot/domains/driving.hpp"
#include "pdespot/domains/mars.hpp"
#include "pdespot/domains/navigation.hpp"
#include "pdespot/domains/tabular.hpp"
#include "pdespot/domains/tiger.hpp"

namespace pdespot::domains {

/// Plain-text `key = value` settings. Blank lines and `#` comments are
/// ignored; later keys override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig config;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string text = trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
      const std::string key = trim(text.substr(0, eq));
      if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
      config.values_[key] = trim(text.substr(eq + 1));
    }
    return config;
  }

  static KeyValueConfig parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse(in);
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read domain config " + path);
    return parse(in);
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  template <class T>
  T get(const std::string& key, T fallback) const {
    auto it = values_.find(key);
    used_.insert(key);
    if (it == values_.end()) return fallback;
    return convert<T>(key, it->second);
  }

  /// Throws if any key was never read, which catches typos.
  void reject_unused() const {
    for (const auto& [key, value] : values_)
      if (!used_.count(key)) throw ConfigError("unknown domain setting '" + key + "'");
  }

 private:
  static std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
  }

  template <class T>
  static T convert(const std::string& key, const std::string& text) {
    T value{};
    if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError("setting '" + key + "' is not a boolean: " + text);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else {
      const char* first = text.data();
      const char* last = text.data() + text.size();
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last) throw ConfigError("setting '" + key + "' has a bad value: " + text);
      return value;
    }
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

inline Navigation::Params navigation_params(const KeyValueConfig& c) {
  Navigation::Params p = c.get<bool>("shrunken", false) ? Navigation::Params::shrunken() : Navigation::Params{};
  p.width = c.get("width", p.width);
  p.height = c.get("height", p.height);
  p.wall_row = c.get("wall_row", p.wall_row);
  p.gate_cols[0] = c.get("gate_left", p.gate_cols[0]);
  p.gate_cols[1] = c.get("gate_right", p.gate_cols[1]);
  p.goal_col = c.get("goal_col", p.goal_col);
  p.landmarks = c.get("landmarks", p.landmarks);
  p.layout_seed = c.get("layout_seed", p.layout_seed);
  p.unknown_occupancy = c.get("unknown_occupancy", p.unknown_occupancy);
  p.move_failure = c.get("move_failure", p.move_failure);
  p.observation_error = c.get("observation_error", p.observation_error);
  p.discount = c.get("discount", p.discount);
  p.max_depth = c.get("max_depth", p.max_depth);
  return p;
}

inline Mars::Params mars_params(const KeyValueConfig& c) {
  Mars::Params p;
  p.size = c.get("size", p.size);
  p.rocks = c.get("rocks", p.rocks);
  p.half_efficiency_distance = c.get("sensing_distance", p.half_efficiency_distance);
  p.layout_seed = c.get("layout_seed", p.layout_seed);
  p.discount = c.get("discount", p.discount);
  p.max_depth = c.get("max_depth", p.max_depth);
  return p;
}

inline Driving::Params driving_params(const KeyValueConfig& c) {
  Driving::Params p;
  p.pedestrians = c.get("pedestrians", p.pedestrians);
  p.scene_seed = c.get("scene_seed", p.scene_seed);
  p.path_length = c.get("path_length", p.path_length);
  p.control_failure = c.get("control_failure", p.control_failure);
  p.heading_noise = c.get("heading_noise", p.heading_noise);
  p.collision_penalty = c.get("collision_penalty", p.collision_penalty);
  p.goal_reward = c.get("goal_reward", p.goal_reward);
  p.time_cost = c.get("time_cost", p.time_cost);
  p.deceleration_penalty = c.get("deceleration_penalty", p.deceleration_penalty);
  p.position_bin = c.get("position_bin", p.position_bin);
  p.speed_bin = c.get("speed_bin", p.speed_bin);
  p.discount = c.get("discount", p.discount);
  p.max_depth = c.get("max_depth", p.max_depth);
  return p;
}

inline Tiger::Params tiger_params(const KeyValueConfig& c) {
  Tiger::Params p;
  p.listen_accuracy = c.get("listen_accuracy", p.listen_accuracy);
  p.discount = c.get("discount", p.discount);
  p.max_depth = c.get("max_depth", p.max_depth);
  return p;
}

inline Tabular::Params tabular_params(const KeyValueConfig& c) {
  Tabular::Params p;
  p.states = c.get("states", p.states);
  p.actions = c.get("actions", p.actions);
  p.observations = c.get("observations", p.observations);
  p.seed = c.get("seed", p.seed);
  p.discount = c.get("discount", p.discount);
  p.max_depth = c.get("max_depth", p.max_depth);
  return p;
}

}  // namespace pdespot::domains
