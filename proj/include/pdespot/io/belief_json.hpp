#pragma once

#include <nlohmann/json.hpp>

#include "pdespot/core/model.hpp"
#include "pdespot/domains/driving.hpp"
#include "pdespot/domains/mars.hpp"
#include "pdespot/domains/navigation.hpp"
#include "pdespot/domains/tabular.hpp"
#include "pdespot/domains/tiger.hpp"

namespace pdespot {

namespace domains {

inline void to_json(nlohmann::json& j, const Tiger::State& s) {
  j = {{"tiger_left", s.tiger_left}, {"opened", s.opened}};
}
inline void from_json(const nlohmann::json& j, Tiger::State& s) {
  j.at("tiger_left").get_to(s.tiger_left);
  j.at("opened").get_to(s.opened);
}

inline void to_json(nlohmann::json& j, const Tabular::State& s) { j = {{"index", s.index}}; }
inline void from_json(const nlohmann::json& j, Tabular::State& s) { j.at("index").get_to(s.index); }

inline void to_json(nlohmann::json& j, const Navigation::State& s) {
  j = {{"cell", s.cell}, {"open_gate", s.open_gate}, {"at_goal", s.at_goal}, {"occupied", s.occupied.words}};
}
inline void from_json(const nlohmann::json& j, Navigation::State& s) {
  j.at("cell").get_to(s.cell);
  j.at("open_gate").get_to(s.open_gate);
  j.at("at_goal").get_to(s.at_goal);
  j.at("occupied").get_to(s.occupied.words);
}

inline void to_json(nlohmann::json& j, const Mars::Robot& r) { j = {{"x", r.x}, {"y", r.y}, {"exited", r.exited}}; }
inline void from_json(const nlohmann::json& j, Mars::Robot& r) {
  j.at("x").get_to(r.x);
  j.at("y").get_to(r.y);
  j.at("exited").get_to(r.exited);
}
inline void to_json(nlohmann::json& j, const Mars::State& s) { j = {{"robots", s.robots}, {"good", s.good}}; }
inline void from_json(const nlohmann::json& j, Mars::State& s) {
  j.at("robots").get_to(s.robots);
  j.at("good").get_to(s.good);
}

inline void to_json(nlohmann::json& j, const Driving::Pedestrian& p) {
  j = {{"x", p.x}, {"y", p.y}, {"vx", p.vx}, {"vy", p.vy}, {"goal", p.goal}};
}
inline void from_json(const nlohmann::json& j, Driving::Pedestrian& p) {
  j.at("x").get_to(p.x);
  j.at("y").get_to(p.y);
  j.at("vx").get_to(p.vx);
  j.at("vy").get_to(p.vy);
  j.at("goal").get_to(p.goal);
}
inline void to_json(nlohmann::json& j, const Driving::State& s) {
  j = {{"vehicle_x", s.vehicle.x}, {"vehicle_speed", s.vehicle.speed}, {"pedestrians", s.pedestrians},
       {"collided", s.collided}, {"arrived", s.arrived}};
}
inline void from_json(const nlohmann::json& j, Driving::State& s) {
  j.at("vehicle_x").get_to(s.vehicle.x);
  j.at("vehicle_speed").get_to(s.vehicle.speed);
  j.at("pedestrians").get_to(s.pedestrians);
  j.at("collided").get_to(s.collided);
  j.at("arrived").get_to(s.arrived);
}

}  // namespace domains

template <class State>
nlohmann::json belief_to_json(const ParticleBelief<State>& belief) {
  nlohmann::json particles = nlohmann::json::array();
  for (const auto& p : belief) particles.push_back({{"state", p.state}, {"weight", p.weight}});
  return {{"particles", std::move(particles)}};
}

template <class State>
ParticleBelief<State> belief_from_json(const nlohmann::json& j) {
  ParticleBelief<State> belief;
  for (const auto& p : j.at("particles")) belief.push_back({p.at("state").get<State>(), p.at("weight").get<double>()});
  return belief;
}

}  // namespace pdespot
