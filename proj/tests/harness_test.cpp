#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pdespot/harness/belief_update.hpp"
#include "pdespot/harness/experiment.hpp"
#include "pdespot/harness/results.hpp"
#include "pdespot/io/belief_json.hpp"
#include "support/oracles.hpp"

namespace {

using namespace pdespot;
using domains::Driving;
using domains::KeyValueConfig;
using domains::Mars;
using domains::Navigation;
using domains::Tabular;
using domains::Tiger;

double weight_where(const ParticleBelief<Tiger::State>& b, bool left) {
  double w = 0.0;
  for (const auto& p : b)
    if (p.state.tiger_left == left) w += p.weight;
  return w;
}

// ---- belief tracking

TEST(BeliefUpdate, TigerHearLeftGivesEightyFivePercent) {
  const Tiger tiger;
  SplitMix rng(1);
  auto weighted = propagate_and_weight(tiger, tiger.initial_belief(), Tiger::kListen, Tiger::kHearLeft, rng);
  normalize(weighted, Tiger::kListen);
  EXPECT_NEAR(weight_where(weighted, true), 0.85, 1e-12);

  ParticleBelief<Tiger::State> many;
  for (int i = 0; i < 100000; ++i) many.push_back({Tiger::State{i % 2 == 0, false}, 1.0});
  const auto post = belief_update(many, Tiger::kListen, Tiger::Observation{Tiger::kHearLeft}, tiger, rng, {100000, true});
  EXPECT_EQ(post.size(), 100000U);
  EXPECT_NEAR(weight_where(post, true), 0.85, 0.005);
}

TEST(BeliefUpdate, NoiselessObservationConcentratesBelief) {
  Tiger::Params p;
  p.listen_accuracy = 1.0;
  const Tiger tiger(p);
  SplitMix rng(2);
  const auto post = belief_update(tiger.initial_belief(), Tiger::kListen, Tiger::Observation{Tiger::kHearRight}, tiger, rng,
                                  {1000, true});
  EXPECT_DOUBLE_EQ(weight_where(post, false), 1.0);
}

TEST(BeliefUpdate, InconsistentObservationIsDegenerate) {
  Tiger::Params p;
  p.listen_accuracy = 1.0;
  const Tiger tiger(p);
  SplitMix rng(3);
  const ParticleBelief<Tiger::State> left{{Tiger::State{true, false}, 1.0}};
  EXPECT_THROW(belief_update(left, Tiger::kListen, Tiger::Observation{Tiger::kHearRight}, tiger, rng), BeliefDegeneracyError);
  const ParticleBelief<Tiger::State> empty;
  EXPECT_THROW(belief_update(empty, Tiger::kListen, Tiger::Observation{Tiger::kHearRight}, tiger, rng), EmptyBeliefError);
}

TEST(BeliefUpdate, TwoStateChainMatchesExactBayes) {
  const Tabular model({2, 2, 2, 5, 0.95, 30});
  SplitMix rng(4);
  ParticleBelief<Tabular::State> belief;
  for (std::uint32_t i = 0; i < 100000; ++i) belief.push_back({{i % 2}, 1.0 / 100000.0});
  std::vector<double> exact{0.5, 0.5};
  SplitMix world(5);
  for (int t = 0; t < 5; ++t) {
    const ActionId a = static_cast<ActionId>(world() % 2);
    const auto z = static_cast<std::uint32_t>(world() % 2);
    belief = belief_update(belief, a, z, model, rng, {100000, true});
    exact = oracle::exact_posterior(model, exact, a, z);
    std::vector<double> approx(2, 0.0);
    for (const auto& p : belief) approx[p.state.index] += p.weight;
    EXPECT_LT(oracle::total_variation(approx, exact), 0.01) << "step " << t;
  }
}

TEST(BeliefUpdate, ResampleKeepsProportions) {
  SplitMix rng(6);
  const ParticleBelief<Tiger::State> b{{Tiger::State{true, false}, 3.0}, {Tiger::State{false, false}, 1.0}};
  const auto out = resample(b, 100000, rng);
  ASSERT_EQ(out.size(), 100000U);
  EXPECT_NEAR(weight_where(out, true), 0.75, 0.006);
}

TEST(BeliefUpdate, DrivingStructuredUpdateCopiesObservedValues) {
  const Driving model(6);
  SplitMix rng(7);
  const auto belief = model.initial_belief(500, 7);
  const auto truth = belief.front().state;
  const auto out = model.step(truth, Driving::kAccelerate, RandomDraws(1, 1));
  const auto post = belief_update(belief, Driving::kAccelerate, out.observation, model, rng, {500, true});
  for (const auto& p : post) EXPECT_EQ(model.observe(p.state), out.observation);
}

// ---- episodes

EpisodeSettings tiger_episode(std::int32_t step_limit) {
  EpisodeSettings s;
  s.planner.search = SearchConfig::for_model(Tiger{}.spec());
  s.planner.search.scenario_count = 100;
  s.planner.search.max_trials = 50;
  s.planner.search.time_budget = 10.0;
  s.step_limit = step_limit;
  s.filter.particle_count = 1000;
  return s;
}

TEST(Episode, StepLimitZeroIsEmpty) {
  const auto r = run_episode(Tiger{}, tiger_episode(0), 1);
  EXPECT_TRUE(r.steps.empty());
  EXPECT_EQ(r.discounted_return, 0.0);
  EXPECT_FALSE(r.aborted);
}

TEST(Episode, ReturnEqualsDiscountedRewardLog) {
  for (std::uint64_t seed = 1; seed < 6; ++seed) {
    const auto r = run_episode(Tiger{}, tiger_episode(30), seed);
    ASSERT_FALSE(r.aborted) << r.error;
    EXPECT_NEAR(r.discounted_return, recompute_return(r), 1e-12);
    double total = 0.0;
    for (const auto& s : r.steps) total += s.reward;
    EXPECT_NEAR(r.total_reward, total, 1e-12);
    EXPECT_TRUE(r.terminal);
  }
}

TEST(Episode, PlannerFailureAbortsEpisode) {
  auto settings = tiger_episode(10);
  settings.planner.search.time_budget = 0.0;
  const auto r = run_episode(Tiger{}, settings, 1);
  EXPECT_TRUE(r.aborted);
  EXPECT_FALSE(r.error.empty());
}

TEST(Episode, NavigationReportsSuccessWithinStepBound) {
  Navigation::Params p;
  p.unknown_occupancy = 0.0;
  const Navigation nav(p);
  EpisodeSettings s;
  s.planner.search = SearchConfig::for_model(nav.spec());
  s.planner.search.scenario_count = 50;
  s.planner.search.max_trials = 400;
  s.planner.search.time_budget = 10.0;
  s.step_limit = 60;
  s.filter.particle_count = 2000;
  const auto r = run_episode(nav, s, 3);
  ASSERT_FALSE(r.aborted) << r.error;
  EXPECT_EQ(r.success, r.terminal && r.step_count() <= 60);
}

// ---- experiments and output

ExperimentConfig tiger_experiment(std::vector<Variant> variants, std::int32_t episodes) {
  ExperimentConfig c;
  c.domain = "tiger";
  c.search = SearchConfig::for_model(Tiger{}.spec());
  c.search.scenario_count = 100;
  c.search.max_trials = 40;
  c.search.time_budget = 10.0;
  c.episodes = episodes;
  c.variants = std::move(variants);
  c.step_limit = 20;
  c.particles = 500;
  return c;
}

std::string csv_of(const ExperimentReport& r) {
  std::ostringstream out;
  write_episode_csv(r, out);
  return out.str();
}

TEST(Experiment, SerialRunsAreByteIdentical) {
  const auto config = tiger_experiment({Variant::kSerial}, 4);
  EXPECT_EQ(csv_of(run_experiment(config)), csv_of(run_experiment(config)));

  auto nav = config;
  nav.domain = "navigation";
  nav.search = SearchConfig::for_model(Navigation{}.spec());
  nav.search.scenario_count = 50;
  nav.search.max_trials = 30;
  nav.search.time_budget = 10.0;
  nav.step_limit = 8;
  nav.episodes = 2;
  EXPECT_EQ(csv_of(run_experiment(nav)), csv_of(run_experiment(nav)));
}

TEST(Experiment, VariantAgainstItselfHasUnitSpeedup) {
  const auto report = run_experiment(tiger_experiment({Variant::kSerial, Variant::kSerial}, 3));
  ASSERT_EQ(report.summaries.size(), 2U);
  for (const auto& s : report.summaries) {
    ASSERT_TRUE(s.speedup.has_value());
    EXPECT_DOUBLE_EQ(*s.speedup, 1.0);
  }
}

TEST(Experiment, SpeedupIsNormalizedNodeRatio) {
  std::vector<VariantSummary> s(2);
  s[0].variant = Variant::kHybrid;
  s[0].nodes_normalized = {900.0, 10.0};
  s[1].variant = Variant::kSerial;
  s[1].nodes_normalized = {300.0, 5.0};
  assign_speedups(s);
  EXPECT_DOUBLE_EQ(*s[0].speedup, 3.0);
  EXPECT_DOUBLE_EQ(*s[1].speedup, 1.0);

  std::vector<VariantSummary> no_serial(1);
  no_serial[0].variant = Variant::kHybrid;
  assign_speedups(no_serial);
  EXPECT_FALSE(no_serial[0].speedup.has_value());
}

TEST(Experiment, NodeCountsNormalizeOnlyOverBudget) {
  SearchStats stats;
  stats.node_count = 1000;
  stats.elapsed_seconds = 0.2;
  EXPECT_DOUBLE_EQ(normalized_node_count(stats, 0.2), 1000.0);
  stats.elapsed_seconds = 0.4;
  EXPECT_DOUBLE_EQ(normalized_node_count(stats, 0.2), 500.0);
}

TEST(Experiment, MeanAndStandardError) {
  const auto m = mean_se({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(mean_se({7.0}).se, 0.0);
}

TEST(Experiment, ValidatesConfig) {
  auto c = tiger_experiment({Variant::kSerial}, 0);
  EXPECT_THROW(run_experiment(c), ConfigError);
  c = tiger_experiment({}, 1);
  EXPECT_THROW(run_experiment(c), ConfigError);
  EXPECT_THROW(parse_variant("turbo"), ConfigError);
  EXPECT_EQ(parse_variant("parallel-backend-only"), Variant::kParallelBackend);
}

TEST(Results, EmptyReportWritesHeaderOnly) {
  ExperimentReport empty;
  EXPECT_EQ(csv_of(empty), std::string(kEpisodeCsvHeader) + "\n");
}

TEST(Results, JsonSummaryRoundTrips) {
  const auto report = run_experiment(tiger_experiment({Variant::kSerial, Variant::kHybrid}, 3));
  const auto j = nlohmann::json::parse(report_to_json(report).dump());
  EXPECT_EQ(summaries_from_json(j), report.summaries);
  EXPECT_EQ(j.at("config").at("domain"), "tiger");
  EXPECT_TRUE(j.contains("git_describe"));
  EXPECT_TRUE(j.at("hardware").contains("note"));
}

TEST(Results, CsvReturnColumnMatchesJsonMean) {
  const auto report = run_experiment(tiger_experiment({Variant::kSerial}, 6));
  std::istringstream csv(csv_of(report));
  std::string line;
  std::getline(csv, line);
  double sum = 0.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream fields(line);
    std::string cell;
    for (int col = 0; col <= 4; ++col) std::getline(fields, cell, ',');
    sum += std::stod(cell);
    ++rows;
  }
  ASSERT_EQ(rows, 6);
  const auto j = report_to_json(report);
  EXPECT_NEAR(sum / rows, j.at("variants")[0].at("discounted_return").at("mean").get<double>(), 1e-9);
}

TEST(Results, EmitWritesBothFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "pdespot_emit_test";
  std::filesystem::remove_all(dir);
  const auto report = run_experiment(tiger_experiment({Variant::kSerial}, 2));
  emit_results(report, dir / "nested");
  EXPECT_TRUE(std::filesystem::exists(dir / "nested" / "episodes.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "nested" / "summary.json"));
  std::filesystem::remove_all(dir);
}

TEST(Results, UnwritablePathIsAnOutputError) {
  const auto file = std::filesystem::temp_directory_path() / "pdespot_not_a_dir";
  std::ofstream(file) << "x";
  const auto report = run_experiment(tiger_experiment({Variant::kSerial}, 1));
  EXPECT_THROW(emit_results(report, file / "sub"), OutputError);
  std::filesystem::remove(file);
}

// ---- serialization and registry

TEST(BeliefJson, RoundTripsEveryDomain) {
  const Navigation nav;
  const auto nb = nav.initial_belief(20, 1);
  const auto nb2 = belief_from_json<Navigation::State>(nlohmann::json::parse(belief_to_json(nb).dump()));
  ASSERT_EQ(nb2.size(), nb.size());
  for (std::size_t i = 0; i < nb.size(); ++i) {
    EXPECT_EQ(nb2[i].state, nb[i].state);
    EXPECT_EQ(nb2[i].weight, nb[i].weight);
  }
  const Mars mars(11, 11);
  const auto mb = mars.initial_belief(5, 2);
  const auto mb2 = belief_from_json<Mars::State>(belief_to_json(mb));
  for (std::size_t i = 0; i < mb.size(); ++i) EXPECT_EQ(mb2[i].state, mb[i].state);
  const Driving driving(6);
  const auto db = driving.initial_belief(5, 3);
  const auto db2 = belief_from_json<Driving::State>(nlohmann::json::parse(belief_to_json(db).dump()));
  for (std::size_t i = 0; i < db.size(); ++i) EXPECT_EQ(db2[i].state, db[i].state);
  const auto tb = belief_from_json<Tiger::State>(belief_to_json(Tiger{}.initial_belief()));
  EXPECT_EQ(tb.size(), 2U);
}

TEST(Registry, BuildsEveryDomainAndRejectsUnknowns) {
  for (const auto& name : domain_names()) {
    const auto handle = make_domain(name);
    EXPECT_EQ(handle.name, name);
    EXPECT_GE(handle.spec.action_count, 1);
  }
  EXPECT_TRUE(make_domain("navigation").reports_success);
  EXPECT_FALSE(make_domain("tiger").reports_success);
  EXPECT_THROW(make_domain("chess"), ConfigError);
  EXPECT_THROW(make_domain("mars", KeyValueConfig::parse("sise = 15\n")), ConfigError);
  EXPECT_EQ(make_domain("mars", KeyValueConfig::parse("size = 15\nrocks = 15\n")).spec.action_count, 400);
}

TEST(Registry, PlanReportsStatisticsAndTree) {
  const auto handle = make_domain("tiger");
  PlannerSettings settings;
  settings.search = SearchConfig::for_model(handle.spec);
  settings.search.scenario_count = 50;
  settings.search.max_trials = 10;
  settings.search.time_budget = 10.0;
  const auto j = handle.plan(settings, 1, 100, true);
  EXPECT_EQ(j.at("trials").get<int>(), 10);
  EXPECT_EQ(j.at("tree").at("nodes").size(), j.at("node_count").get<std::size_t>());
  EXPECT_EQ(j.at("backend").at("name"), "serial");
  EXPECT_GE(j.at("backend").at("requests").get<int>(), 1);
}

}  // namespace
