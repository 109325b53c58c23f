#include <doctest.h>

#include "entrodyn/io.hpp"

using namespace entrodyn;
using nlohmann::json;

TEST_CASE("game configs: inline tensors, presets, congestion blocks") {
  json inline_game = {{"players", 2}, {"actions", {2, 2}},
                      {"payoffs", {{1, 0, 0, 1}, {1, 0, 0, 1}}}};
  FiniteGame g = io::game_from_json(inline_game);
  CHECK(g.num_players() == 2);
  CHECK(g.payoff(0, {0, 0}) == doctest::Approx(1.0));

  CHECK_THROWS_AS(io::game_from_json(json{{"players", 3}, {"actions", {2, 2}},
                                          {"payoffs", {{1, 0, 0, 1}, {1, 0, 0, 1}}}}),
                  io::ConfigError);
  CHECK_THROWS_AS(io::game_from_json(json{{"actions", {2, 2}}}), io::ConfigError);
  CHECK_THROWS_AS(io::game_from_json(json{{"preset", "nope"}}), io::ConfigError);

  json congestion = {{"congestion",
                      {{"resources", 2},
                       {"delays", {{1, 2}, {1, 2}}},
                       {"routes", {{{0}, {1}}, {{0}, {1}}}}}}};
  FiniteGame cg = io::game_from_json(congestion);
  CHECK(fit_potential(cg).is_potential());
}

TEST_CASE("entropy configs use kernel/general keys") {
  CHECK(io::entropy_from_json(json{{"kernel", "gibbs"}}).kind() == EntropyKind::Gibbs);
  CHECK(io::entropy_from_json(json{{"kernel", "log"}}).kind() == EntropyKind::Log);
  auto t = io::entropy_from_json(json{{"kernel", "tsallis"}, {"q", 0.7}});
  CHECK(t.kind() == EntropyKind::Tsallis);
  CHECK(t.q() == doctest::Approx(0.7));
  CHECK(io::entropy_from_json(json{{"general", "renyi"}, {"q", 0.5}}).kind() ==
        EntropyKind::Renyi);
  CHECK_THROWS_AS(io::entropy_from_json(json{{"kernel", "tsallis"}, {"q", 2.0}}),
                  io::ConfigError);
  CHECK_THROWS_AS(io::entropy_from_json(json{{"kernel", "unknown"}}), io::ConfigError);
}

TEST_CASE("schedule, noise, revision, delay configs") {
  auto s = io::schedule_from_json(json{{"kind", "shifted_power"}, {"c", 1.0}, {"a", 5.0},
                                       {"b", 0.6}});
  CHECK(s.at(1) == doctest::Approx(1.0 / 6.0));
  CHECK_THROWS_AS(io::schedule_from_json(json{{"kind", "shifted_power"}, {"b", 0.3}}),
                  io::ConfigError);
  auto nm = io::noise_from_json(json{{"kind", "uniform"}, {"bound", 0.1}});
  CHECK(nm.kind == NoiseModel::Kind::UniformBounded);
  CHECK_THROWS_AS(io::noise_from_json(json{{"kind", "pink"}}), io::ConfigError);
  auto rev = io::revision_from_json(json{{"kind", "bernoulli"}, {"p", {0.5, 0.5}}}, 2);
  CHECK(rev.kind == RevisionProcess::Kind::Bernoulli);
  auto dm = io::delay_from_json(json{{"M", 3}});
  CHECK(dm.max_delay == 3);
  CHECK_THROWS_AS(io::delay_from_json(json{{"M", -1}}), io::ConfigError);
}

TEST_CASE("config hash is stable and key-order independent") {
  json a = {{"T", 0.2}, {"game", {{"preset", "coordination"}}}};
  json b = {{"game", {{"preset", "coordination"}}}, {"T", 0.2}};
  CHECK(io::config_hash(a) == io::config_hash(b));
  json c = a;
  c["T"] = 0.3;
  CHECK(io::config_hash(a) != io::config_hash(c));
}

TEST_CASE("csv outputs carry the metadata header") {
  json config = {{"T", 0.2}};
  Trajectory traj;
  traj.times = {0.0, 0.5};
  traj.states = {{{0.5, 0.5}}, {{0.6, 0.4}}};
  traj.field_norms = {0.1, 0.05};
  std::string csv = io::trajectory_csv(config, 42, traj);
  CHECK(csv.rfind("# config_hash=", 0) == 0);
  CHECK(csv.find("seed=42") != std::string::npos);
  CHECK(csv.find("t,player,action,prob") != std::string::npos);
  CHECK(csv.find("0.5,0,0,0.6") != std::string::npos);
}
