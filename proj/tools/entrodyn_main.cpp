// entrodyn: entropy-driven game dynamics simulator.
//
// Subcommands: simulate (ODE trajectories), learn (stochastic learners),
// qre (fixed points and rationality paths), portrait (phase portraits),
// bifurcate (temperature scans), ensemble (replicated learning densities).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "entrodyn/dynamics.hpp"
#include "entrodyn/equilibria.hpp"
#include "entrodyn/io.hpp"
#include "entrodyn/learning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace entrodyn;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  bool check = false;
  bool unsafe_zero_temperature = false;
};

std::uint64_t effective_seed(const CommonArgs& args, const json& config) {
  if (args.seed_override) return *args.seed_override;
  return config.value("seed", std::uint64_t{0});
}

MixedProfile profile_from_config(const json& j, const FiniteGame& game, const char* key) {
  if (!j.contains(key)) return uniform_profile(game);
  auto x = j.at(key).get<MixedProfile>();
  if (!is_valid_profile(x, game.action_counts()))
    throw io::ConfigError(std::string("'") + key + "' is not a valid mixed profile");
  return x;
}

int cmd_simulate(const CommonArgs& args) {
  json config = io::load_json_file(args.config_path);
  FiniteGame game = io::game_from_json(config.at("game"));
  EntropyModel entropy = io::entropy_from_json(config.value("entropy", json::object()));
  double T = config.value("T", 1.0);
  double t_end = config.value("t_end", 50.0);
  double dt = config.value("dt", 0.01);
  std::string space_name = config.value("space", "score");
  StateSpace space = space_name == "strategy" ? StateSpace::Strategy : StateSpace::Score;
  MixedProfile x0 = profile_from_config(config, game, "x0");
  for (auto& row : x0)
    for (double& v : row)
      if (v <= 0) throw io::ConfigError("initial profile must be interior");

  DynamicsSpec spec{&game, entropy, T, config.value("eta", std::vector<double>{})};
  std::uint64_t seed = effective_seed(args, config);
  Trajectory traj = integrate(spec, x0, t_end, dt, space, 1e-8,
                              config.value("record_stride", 1));

  io::write_file((fs::path(args.out_dir) / "trajectory.csv").string(),
                 io::trajectory_csv(config, seed, traj));
  std::vector<double> fe;
  PotentialCertificate cert = fit_potential(game);
  if (cert.is_potential())
    for (const auto& x : traj.states) fe.push_back(free_energy(spec, cert, x));
  io::write_file((fs::path(args.out_dir) / "diagnostics.csv").string(),
                 io::diagnostics_csv(config, seed, traj, fe));

  if (args.check && T > 0) {
    QrePoint q = qre_solve(game, entropy, 1.0 / T, traj.states.back());
    double d = 0;
    for (std::size_t k = 0; k < q.x.size(); ++k)
      for (std::size_t a = 0; a < q.x[k].size(); ++a)
        d = std::max(d, std::fabs(q.x[k][a] - traj.states.back()[k][a]));
    if (traj.status == TrajectoryStatus::RestPoint && d > 1e-6) {
      std::cerr << "check failed: trajectory endpoint is " << d
                << " away from the fixed-point solver's equilibrium\n";
      return 3;
    }
    std::cout << "check ok: endpoint within " << d << " of the solved equilibrium\n";
  }
  return 0;
}

int cmd_learn(const CommonArgs& args) {
  json config = io::load_json_file(args.config_path);
  FiniteGame raw = io::game_from_json(config.at("game"));
  auto [game, maps] = normalize_payoffs(raw);
  EntropyModel entropy = io::entropy_from_json(config.value("entropy", json::object()));
  double T = config.value("T", 0.2);
  if (T <= 0 && !args.unsafe_zero_temperature)
    throw io::ConfigError(
        "nonpositive temperature learning requires --unsafe-zero-temperature "
        "(convergence is not guaranteed there)");
  StepSchedule sched = io::schedule_from_json(config.value("schedule", json::object()));
  long iters = config.value("iters", 1000L);
  NoiseModel noise = io::noise_from_json(config.value("noise", json::object()));
  RevisionProcess revision =
      io::revision_from_json(config.value("revision", json::object()), game.num_players());
  DelayModel delay = io::delay_from_json(config.value("delay", json::object()));
  std::string algorithm = config.value("algorithm", "strategy");

  std::vector<std::uint64_t> seeds =
      config.value("seeds", std::vector<std::uint64_t>{effective_seed(args, config)});

  json summary;
  summary["config_hash"] = io::config_hash(config);
  summary["normalization"] = json::array();
  for (const auto& m : maps)
    summary["normalization"].push_back({{"offset", m.offset}, {"scale", m.scale}});
  summary["runs"] = json::array();

  for (std::uint64_t seed : seeds) {
    LearnerOptions opts;
    opts.record_trace = config.value("record_trace", true);
    opts.allow_zero_temperature = args.unsafe_zero_temperature;
    opts.checkpoints = config.value("checkpoints", std::vector<long>{});
    LearnerRun run;
    if (algorithm == "score") {
      run = run_score_learner(game, entropy, T, sched, iters, seed, opts);
    } else {
      MixedProfile x0 = profile_from_config(config, game, "x0");
      run = run_async_learner(game, entropy, T, sched, iters, seed, x0, revision, delay, noise,
                              opts);
    }
    io::write_file((fs::path(args.out_dir) / ("run_" + std::to_string(seed) + ".csv")).string(),
                   io::learner_run_csv(config, run));
    json jr;
    jr["seed"] = seed;
    jr["status"] = run.status == LearnerRun::Status::Completed ? "completed" : "blow_up";
    jr["final_profile"] = run.final_profile;
    summary["runs"].push_back(jr);
  }
  io::write_file((fs::path(args.out_dir) / "summary.json").string(), summary.dump(2) + "\n");
  return 0;
}

int cmd_qre(const CommonArgs& args) {
  json config = io::load_json_file(args.config_path);
  FiniteGame game = io::game_from_json(config.at("game"));
  EntropyModel entropy = io::entropy_from_json(config.value("entropy", json::object()));
  json out;
  out["config_hash"] = io::config_hash(config);
  if (config.contains("path")) {
    double rho_max = config.at("path").value("rho_max", 100.0);
    int steps = config.at("path").value("steps", 100);
    QPath path = qre_path(game, entropy, rho_max, steps);
    out["path"] = json::array();
    for (const auto& p : path.points)
      out["path"].push_back({{"rho", p.rho}, {"x", p.x}, {"residual", p.residual}});
    out["truncated"] = path.truncated;
    if (path.terminal_candidate) out["terminal_candidate"] = *path.terminal_candidate;
  } else {
    double rho = config.value("rho", 1.0);
    MixedProfile init = profile_from_config(config, game, "init");
    QrePoint q = qre_solve(game, entropy, rho, init);
    out["rho"] = q.rho;
    out["x"] = q.x;
    out["residual"] = q.residual;
  }
  io::write_file((fs::path(args.out_dir) / "qre.json").string(), out.dump(2) + "\n");
  return 0;
}

int cmd_portrait(const CommonArgs& args) {
  json config = io::load_json_file(args.config_path);
  FiniteGame game = io::game_from_json(config.at("game"));
  if (game.num_players() != 2 || game.actions(0) != 2 || game.actions(1) != 2)
    throw io::ConfigError("portrait requires a 2x2 game");
  EntropyModel entropy = io::entropy_from_json(config.value("entropy", json::object()));
  std::vector<double> temps = config.value("temperatures", std::vector<double>{0.2});
  int grid = config.value("grid", 5);
  double t_end = config.value("t_end", 30.0);
  std::uint64_t seed = effective_seed(args, config);

  for (double T : temps) {
    DynamicsSpec spec{&game, entropy, T, {}};
    std::ostringstream os;
    os << io::metadata_header(config, seed) << "traj_id,t,player,action,prob\n";
    int id = 0;
    for (int i = 1; i <= grid; ++i)
      for (int j = 1; j <= grid; ++j) {
        double p = static_cast<double>(i) / (grid + 1);
        double q = static_cast<double>(j) / (grid + 1);
        MixedProfile x0{{p, 1 - p}, {q, 1 - q}};
        Trajectory traj = integrate(spec, x0, t_end, 0.01, StateSpace::Score, 1e-8, 25);
        for (std::size_t s = 0; s < traj.times.size(); ++s)
          for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t a = 0; a < 2; ++a)
              os << id << ',' << io::format_double(traj.times[s]) << ',' << k << ',' << a << ','
                 << io::format_double(traj.states[s][k][a]) << "\n";
        ++id;
      }
    std::ostringstream tname;
    tname << "portrait_T" << io::format_double(T) << ".csv";
    io::write_file((fs::path(args.out_dir) / tname.str()).string(), os.str());

    ScanPoint sp = rest_points_at_temperature(game, entropy, T);
    std::ostringstream rs;
    rs << io::metadata_header(config, seed) << "rest_point_id,player,action,prob,tag\n";
    for (std::size_t r = 0; r < sp.rest_points.size(); ++r)
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t a = 0; a < 2; ++a)
          rs << r << ',' << k << ',' << a << ','
             << io::format_double(sp.rest_points[r].x[k][a]) << ','
             << (sp.rest_points[r].tag == StabilityTag::Stable
                     ? "stable"
                     : sp.rest_points[r].tag == StabilityTag::Unstable ? "unstable"
                                                                      : "nonhyperbolic")
             << "\n";
    std::ostringstream rname;
    rname << "rest_points_T" << io::format_double(T) << ".csv";
    io::write_file((fs::path(args.out_dir) / rname.str()).string(), rs.str());
  }
  return 0;
}

int cmd_bifurcate(const CommonArgs& args) {
  json config = io::load_json_file(args.config_path);
  FiniteGame game = io::game_from_json(config.at("game"));
  EntropyModel entropy = io::entropy_from_json(config.value("entropy", json::object()));
  double T_min = config.value("T_min", 0.1);
  double T_max = config.value("T_max", 1.0);
  int grid = config.value("grid", 10);
  std::uint64_t seed = effective_seed(args, config);

  BifurcationScan scan = bifurcation_scan(game, entropy, T_min, T_max, grid);
  std::ostringstream os;
  os << io::metadata_header(config, seed)
     << "T,rest_point_id,player,action,prob,max_eig_real,tag\n";
  for (const auto& point : scan.grid)
    for (std::size_t r = 0; r < point.rest_points.size(); ++r)
      for (std::size_t k = 0; k < point.rest_points[r].x.size(); ++k)
        for (std::size_t a = 0; a < point.rest_points[r].x[k].size(); ++a)
          os << io::format_double(point.T) << ',' << r << ',' << k << ',' << a << ','
             << io::format_double(point.rest_points[r].x[k][a]) << ','
             << io::format_double(point.rest_points[r].max_eig_real) << ','
             << (point.rest_points[r].tag == StabilityTag::Stable
                     ? "stable"
                     : point.rest_points[r].tag == StabilityTag::Unstable ? "unstable"
                                                                         : "nonhyperbolic")
             << "\n";
  io::write_file((fs::path(args.out_dir) / "scan.csv").string(), os.str());

  json out;
  out["config_hash"] = io::config_hash(config);
  out["critical_temperatures"] = scan.critical_temperatures;
  io::write_file((fs::path(args.out_dir) / "critical_temperatures.json").string(),
                 out.dump(2) + "\n");
  return 0;
}

int cmd_ensemble(const CommonArgs& args) {
  json config = io::load_json_file(args.config_path);
  FiniteGame raw = io::game_from_json(config.at("game"));
  if (raw.num_players() != 2 || raw.actions(0) != 2 || raw.actions(1) != 2)
    throw io::ConfigError("this experiment requires a 2x2 game");
  if (!fit_potential(raw).is_potential())
    throw io::ConfigError("this experiment requires a potential game");
  auto [game, maps] = normalize_payoffs(raw);
  EntropyModel entropy = io::entropy_from_json(config.value("entropy", json::object()));
  double T = config.value("T", 0.2);
  if (T <= 0) throw io::ConfigError("temperature must be positive");
  StepSchedule sched = io::schedule_from_json(config.value("schedule", json::object()));
  long iters = config.value("iters", 500L);
  int replicates = config.value("replicates", 1000);
  double eps = config.value("eps", 0.01);
  int grid = config.value("grid", 50);
  std::vector<long> checkpoints =
      config.value("checkpoints", std::vector<long>{0, 2, 5, 10, 20, 50});
  std::uint64_t seed = effective_seed(args, config);

  std::vector<MixedProfile> refs;
  for (const auto& rp : rest_points_at_temperature(game, entropy, T).rest_points)
    refs.push_back(rp.x);

  std::vector<LearnerRun> runs;
  runs.reserve(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    RngStream init(seed, {static_cast<std::uint64_t>(r), 4});  // init-draw substream
    MixedProfile x0(2);
    for (int k = 0; k < 2; ++k) {
      double p = init.next_uniform(1e-3, 1.0 - 1e-3);  // Dirichlet(1,1) interior
      x0[static_cast<std::size_t>(k)] = {p, 1 - p};
    }
    LearnerOptions opts;
    opts.checkpoints = checkpoints;
    opts.replicate = static_cast<std::uint64_t>(r);
    runs.push_back(run_strategy_learner(game, entropy, T, sched, iters, seed, x0,
                                        NoiseModel::none(), opts));
  }
  ConvergenceSummary cs = convergence_stats(runs, refs, eps, grid);

  for (std::size_t c = 0; c < cs.checkpoints.size(); ++c) {
    std::ostringstream os;
    os << io::metadata_header(config, seed) << "x1,x2,count\n";
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j)
        os << io::format_double((i + 0.5) / grid) << ',' << io::format_double((j + 0.5) / grid)
           << ',' << cs.density[c][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
           << "\n";
    io::write_file(
        (fs::path(args.out_dir) / ("density_n" + std::to_string(cs.checkpoints[c]) + ".csv"))
            .string(),
        os.str());
  }
  json out;
  out["config_hash"] = io::config_hash(config);
  out["checkpoints"] = cs.checkpoints;
  out["fraction_converged"] = cs.fraction_converged;
  out["eps"] = eps;
  io::write_file((fs::path(args.out_dir) / "summary.json").string(), out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropy-driven game dynamics simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string command;
  for (const char* name : {"simulate", "learn", "qre", "portrait", "bifurcate", "ensemble"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "JSON experiment configuration")->required();
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--seed", args.seed_override, "override the config seed");
    sub->add_flag("--check", args.check, "re-verify cross-module consistency");
    sub->add_flag("--unsafe-zero-temperature", args.unsafe_zero_temperature,
                  "allow T <= 0 learning runs (no convergence guarantee)");
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    fs::create_directories(args.out_dir);
    if (command == "simulate") return cmd_simulate(args);
    if (command == "learn") return cmd_learn(args);
    if (command == "qre") return cmd_qre(args);
    if (command == "portrait") return cmd_portrait(args);
    if (command == "bifurcate") return cmd_bifurcate(args);
    if (command == "ensemble") return cmd_ensemble(args);
    std::cerr << "unknown command\n";
    return 1;
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << " (residual " << e.residual << ")\n";
    return 2;
  } catch (const IntegrationError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
