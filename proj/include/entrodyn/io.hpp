#ifndef ENTRODYN_IO_HPP
#define ENTRODYN_IO_HPP

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "entrodyn/errors.hpp"
#include "entrodyn/game.hpp"
#include "entrodyn/learning.hpp"

namespace entrodyn::io {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

// Error raised for malformed configuration (maps to its own CLI exit code).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- parsing -----------------------------------------------------------------

inline FiniteGame game_from_json(const json& j) {
  if (j.contains("preset")) {
    const std::string name = j.at("preset").get<std::string>();
    if (name == "coordination")
      return FiniteGame({2, 2}, {{1, 0, 0, 1}, {1, 0, 0, 1}});
    if (name == "matching_pennies")
      return FiniteGame({2, 2}, {{1, -1, -1, 1}, {-1, 1, 1, -1}});
    if (name == "zero") return FiniteGame({2, 2}, {{0, 0, 0, 0}, {0, 0, 0, 0}});
    if (name == "dominant")
      return FiniteGame({2, 2}, {{1, 1, 0, 0}, {1, 0, 1, 0}});
    throw ConfigError("unknown game preset: " + name);
  }
  try {
    if (j.contains("congestion")) {
      const json& c = j.at("congestion");
      return congestion_game(c.at("resources").get<int>(),
                             c.at("delays").get<std::vector<std::vector<double>>>(),
                             c.at("routes").get<std::vector<std::vector<std::vector<int>>>>());
    }
    std::vector<int> actions = j.at("actions").get<std::vector<int>>();
    if (j.contains("players") && j.at("players").get<int>() != static_cast<int>(actions.size()))
      throw ConfigError("'players' disagrees with the length of 'actions'");
    auto payoffs = j.at("payoffs").get<std::vector<std::vector<double>>>();
    return FiniteGame(std::move(actions), std::move(payoffs));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad game description: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("bad game description: ") + e.what());
  }
}

inline EntropyModel entropy_from_json(const json& j) {
  std::string kind;
  if (j.contains("kernel"))
    kind = j.at("kernel").get<std::string>();
  else if (j.contains("general"))
    kind = j.at("general").get<std::string>();
  else
    kind = j.value("kind", "gibbs");
  try {
    if (kind == "gibbs") return EntropyModel::gibbs();
    if (kind == "log") return EntropyModel::log_entropy();
    if (kind == "tsallis") return EntropyModel::tsallis(j.at("q").get<double>());
    if (kind == "renyi") return EntropyModel::renyi(j.at("q").get<double>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad entropy description: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("bad entropy description: ") + e.what());
  }
  throw ConfigError("unknown entropy kind: " + kind);
}

inline StepSchedule schedule_from_json(const json& j) {
  const std::string kind = j.value("kind", "shifted_power");
  try {
    if (kind == "harmonic") return StepSchedule::harmonic(j.value("c", 1.0));
    if (kind == "shifted_power")
      return StepSchedule::shifted_power(j.value("c", 1.0), j.value("a", 5.0), j.value("b", 0.6));
    if (kind == "constant") return StepSchedule::constant(j.at("c").get<double>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad schedule: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("bad schedule: ") + e.what());
  }
  throw ConfigError("unknown schedule kind: " + kind);
}

inline NoiseModel noise_from_json(const json& j) {
  const std::string kind = j.value("kind", "none");
  const double bound = j.value("bound", 0.0);
  try {
    if (kind == "none") return NoiseModel::none();
    if (kind == "uniform") return NoiseModel::uniform(bound);
    if (kind == "truncated_gaussian") return NoiseModel::truncated_gaussian(bound);
    if (kind == "history") return NoiseModel::history_dependent(bound);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("bad noise model: ") + e.what());
  }
  throw ConfigError("unknown noise kind: " + kind);
}

inline RevisionProcess revision_from_json(const json& j, int num_players) {
  const std::string kind = j.value("kind", "full");
  try {
    if (kind == "full") return RevisionProcess::full();
    if (kind == "bernoulli") return RevisionProcess::bernoulli(j.at("p").get<std::vector<double>>());
    if (kind == "markov") {
      auto rows = j.at("transition").get<std::vector<std::vector<double>>>();
      Eigen::MatrixXd P(rows.size(), rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw ConfigError("transition matrix must be square");
        for (std::size_t k = 0; k < rows[i].size(); ++k)
          P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
      }
      return RevisionProcess::markov(num_players, std::move(P));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad revision process: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("bad revision process: ") + e.what());
  }
  throw ConfigError("unknown revision kind: " + kind);
}

inline DelayModel delay_from_json(const json& j) {
  try {
    return DelayModel::uniform(j.value("M", 0));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("bad delay model: ") + e.what());
  }
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

// --- output ------------------------------------------------------------------

// FNV-1a over the canonical (sorted-key) dump: stable across runs and
// insensitive to key order in the source file.
inline std::uint64_t config_hash(const json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string metadata_header(const json& config, std::uint64_t seed) {
  std::ostringstream os;
  os << "# config_hash=" << std::hex << config_hash(config) << std::dec << " seed=" << seed
     << " version=" << kVersion << "\n";
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file: " + path);
  out << content;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string trajectory_csv(const json& config, std::uint64_t seed, const Trajectory& traj) {
  std::ostringstream os;
  os << metadata_header(config, seed) << "t,player,action,prob\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    for (std::size_t k = 0; k < traj.states[i].size(); ++k)
      for (std::size_t a = 0; a < traj.states[i][k].size(); ++a)
        os << format_double(traj.times[i]) << ',' << k << ',' << a << ','
           << format_double(traj.states[i][k][a]) << "\n";
  return os.str();
}

inline std::string diagnostics_csv(const json& config, std::uint64_t seed, const Trajectory& traj,
                                   const std::vector<double>& free_energies) {
  std::ostringstream os;
  os << metadata_header(config, seed) << "t,free_energy,field_norm\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << format_double(traj.times[i]) << ',';
    if (i < free_energies.size()) os << format_double(free_energies[i]);
    os << ',' << format_double(traj.field_norms[i]) << "\n";
  }
  return os.str();
}

inline std::string learner_run_csv(const json& config, const LearnerRun& run) {
  std::ostringstream os;
  os << metadata_header(config, run.seed) << "n,player,action_chosen,payoff";
  int max_actions = 0;
  for (const auto& rec : run.trace)
    for (const auto& row : rec.profile)
      max_actions = std::max(max_actions, static_cast<int>(row.size()));
  for (int a = 0; a < max_actions; ++a) os << ",prob_" << a;
  os << "\n";
  for (const auto& rec : run.trace)
    for (std::size_t k = 0; k < rec.profile.size(); ++k) {
      os << rec.n << ',' << k << ',' << rec.actions[k] << ',' << format_double(rec.payoffs[k]);
      for (std::size_t a = 0; a < rec.profile[k].size(); ++a)
        os << ',' << format_double(rec.profile[k][a]);
      for (int a = static_cast<int>(rec.profile[k].size()); a < max_actions; ++a) os << ',';
      os << "\n";
    }
  return os.str();
}

}  // namespace entrodyn::io

#endif  // ENTRODYN_IO_HPP
