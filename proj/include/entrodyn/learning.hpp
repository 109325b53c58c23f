#ifndef ENTRODYN_LEARNING_HPP
#define ENTRODYN_LEARNING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "entrodyn/dynamics.hpp"
#include "entrodyn/entropy.hpp"
#include "entrodyn/errors.hpp"
#include "entrodyn/game.hpp"
#include "entrodyn/rng.hpp"

namespace entrodyn {

// --- step schedules ----------------------------------------------------------

struct StepSchedule {
  enum class Kind { Harmonic, ShiftedPower, Constant };
  Kind kind = Kind::Harmonic;
  double c = 1.0, a = 0.0, b = 1.0;

  static StepSchedule harmonic(double c) {
    if (!(c > 0)) throw ArgumentError("step constant must be positive");
    return {Kind::Harmonic, c, 0.0, 1.0};
  }
  static StepSchedule shifted_power(double c, double a, double b) {
    if (!(c > 0) || !(a >= 0)) throw ArgumentError("need c > 0 and a >= 0");
    if (!(b > 0.5 && b <= 1.0))
      throw ArgumentError("power exponent must lie in (0.5, 1] for a convergent schedule");
    return {Kind::ShiftedPower, c, a, b};
  }
  static StepSchedule constant(double c) {
    if (!(c > 0)) throw ArgumentError("step constant must be positive");
    return {Kind::Constant, c, 0.0, 1.0};
  }

  // square-summable but not summable
  bool convergent() const { return kind != Kind::Constant; }

  // step for the n-th update a player performs, n = 1, 2, ...
  double at(long n) const {
    switch (kind) {
      case Kind::Harmonic: return c / static_cast<double>(n);
      case Kind::ShiftedPower: return c / (a + std::pow(static_cast<double>(n), b));
      default: return c;
    }
  }
};

// --- noise -------------------------------------------------------------------

// Zero-mean bounded payoff perturbations (martingale differences).
struct NoiseModel {
  enum class Kind { None, UniformBounded, TruncatedGaussian, HistoryDependent };
  Kind kind = Kind::None;
  double bound = 0.0;

  static NoiseModel none() { return {}; }
  static NoiseModel uniform(double bound) {
    if (!(bound >= 0)) throw ArgumentError("noise bound must be nonnegative");
    return {Kind::UniformBounded, bound};
  }
  static NoiseModel truncated_gaussian(double bound) {
    if (!(bound >= 0)) throw ArgumentError("noise bound must be nonnegative");
    return {Kind::TruncatedGaussian, bound};
  }
  // amplitude modulated by a bounded function of the history (still
  // conditionally zero-mean, exercising the weaker hypothesis)
  static NoiseModel history_dependent(double bound) {
    if (!(bound >= 0)) throw ArgumentError("noise bound must be nonnegative");
    return {Kind::HistoryDependent, bound};
  }

  // history_scale in [0,1]: any bounded statistic of the past (we pass the
  // updating player's current probability of their chosen action)
  double draw(RngStream& stream, double history_scale) const {
    switch (kind) {
      case Kind::None: return 0.0;
      case Kind::UniformBounded: return bound * (2.0 * stream.next_unit() - 1.0);
      case Kind::TruncatedGaussian: return (bound / 3.0) * stream.next_truncated_gaussian(3.0);
      case Kind::HistoryDependent:
        return bound * history_scale * (stream.next_unit() < 0.5 ? -1.0 : 1.0);
    }
    return 0.0;
  }
};

// --- revision and delays -----------------------------------------------------

// Who gets to update at each step: everyone, i.i.d. Bernoulli inclusion, or a
// general ergodic Markov chain over player subsets.
struct RevisionProcess {
  enum class Kind { Full, Bernoulli, Markov };
  Kind kind = Kind::Full;
  std::vector<double> inclusion;  // Bernoulli: per-player probability
  Eigen::MatrixXd transition;     // Markov: row-stochastic over 2^N subsets
  int num_players = 0;

  static RevisionProcess full() { return {}; }

  static RevisionProcess bernoulli(std::vector<double> p) {
    RevisionProcess r;
    r.kind = Kind::Bernoulli;
    r.num_players = static_cast<int>(p.size());
    for (double v : p)
      if (!(v > 0 && v <= 1)) throw ArgumentError("inclusion probabilities must be in (0,1]");
    r.inclusion = std::move(p);
    return r;
  }

  static RevisionProcess markov(int num_players, Eigen::MatrixXd P) {
    RevisionProcess r;
    r.kind = Kind::Markov;
    r.num_players = num_players;
    const auto s = static_cast<Eigen::Index>(1) << num_players;
    if (P.rows() != s || P.cols() != s) throw ArgumentError("transition matrix must be 2^N x 2^N");
    for (Eigen::Index i = 0; i < s; ++i) {
      double row = 0;
      for (Eigen::Index j = 0; j < s; ++j) {
        if (P(i, j) < -1e-15) throw ArgumentError("transition probabilities must be nonnegative");
        row += P(i, j);
      }
      if (std::fabs(row - 1.0) > 1e-12) throw ArgumentError("transition rows must sum to 1");
    }
    // primitivity check (irreducible + aperiodic): some power is positive
    Eigen::MatrixXd Pm = P;
    for (Eigen::Index p = 0; p < s; ++p) Pm *= P;
    if ((Pm.array() <= 1e-300).any())
      throw ArgumentError("revision chain must be irreducible and aperiodic");
    r.transition = std::move(P);
    return r;
  }

  // stationary per-player update rates eta_k
  std::vector<double> stationary_rates(int n_players) const {
    switch (kind) {
      case Kind::Full: return std::vector<double>(static_cast<std::size_t>(n_players), 1.0);
      case Kind::Bernoulli: return inclusion;
      case Kind::Markov: {
        const Eigen::Index s = transition.rows();
        // left fixed vector by power iteration (small chains only)
        Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(s, 1.0 / static_cast<double>(s));
        for (int it = 0; it < 100000; ++it) {
          Eigen::RowVectorXd next = pi * transition;
          if ((next - pi).lpNorm<Eigen::Infinity>() < 1e-14) {
            pi = next;
            break;
          }
          pi = next;
        }
        std::vector<double> eta(static_cast<std::size_t>(n_players), 0.0);
        for (Eigen::Index sub = 0; sub < s; ++sub)
          for (int k = 0; k < n_players; ++k)
            if (sub & (Eigen::Index{1} << k)) eta[static_cast<std::size_t>(k)] += pi(sub);
        for (double e : eta)
          if (!(e > 0)) throw ArgumentError("every player needs positive stationary rate");
        return eta;
      }
    }
    return {};
  }
};

struct DelayModel {
  int max_delay = 0;  // M; payoffs may be computed against profiles up to M steps old

  static DelayModel none() { return {0}; }
  static DelayModel uniform(int M) {
    if (M < 0) throw ArgumentError("max delay must be nonnegative");
    return {M};
  }
  int draw(RngStream& stream) const {
    return max_delay == 0 ? 0 : stream.next_index(max_delay + 1);
  }
};

// --- run records -------------------------------------------------------------

struct StepRecord {
  long n = 0;
  PureProfile actions;
  std::vector<double> payoffs;
  MixedProfile profile;  // after the update
};

struct LearnerRun {
  enum class Status { Completed, BlowUp };
  std::uint64_t seed = 0;
  long iterations = 0;
  Status status = Status::Completed;
  MixedProfile final_profile;
  std::vector<std::vector<double>> final_scores;  // score-based runs only
  std::vector<long> checkpoints;
  std::vector<MixedProfile> checkpoint_profiles;
  std::vector<StepRecord> trace;  // filled only when tracing is requested
};

struct LearnerOptions {
  std::vector<long> checkpoints;  // iteration counts at which to snapshot
  bool record_trace = false;
  bool allow_zero_temperature = false;
  std::uint64_t replicate = 0;  // distinguishes substreams across replicates
};

namespace detail {

// rng purposes (substream tags)
inline constexpr std::uint64_t kDrawAction = 0;
inline constexpr std::uint64_t kDrawNoise = 1;
inline constexpr std::uint64_t kDrawRevision = 2;
inline constexpr std::uint64_t kDrawDelay = 3;
inline constexpr std::uint64_t kDrawInit = 4;

inline int sample_action(const std::vector<double>& probs, double u) {
  double acc = 0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace detail

// --- the discrete strategy update -------------------------------------------

// One player's per-coordinate increment (before the step factor gamma) for the
// discrete entropy-driven update, given the realized payoff u_hat of the
// chosen action. The Gibbs kernel uses its simplified multiplicative form; the
// generic kernel path divides through the kernel curvature.
inline std::vector<double> strategy_update_increment(const EntropyModel& entropy, double T,
                                                     const std::vector<double>& x, int chosen,
                                                     double u_hat) {
  const std::size_t n = x.size();
  std::vector<double> inc(n);
  if (entropy.kind() == EntropyKind::Gibbs) {
    double xlogx_bar = 0;
    for (double v : x)
      if (v > 0) xlogx_bar += v * std::log(v);
    for (std::size_t a = 0; a < n; ++a) {
      double ind = (static_cast<int>(a) == chosen) ? 1.0 : 0.0;
      double ent = (x[a] > 0) ? x[a] * (std::log(x[a]) - xlogx_bar) : 0.0;
      inc[a] = (ind - x[a]) * u_hat - T * ent;
    }
    return inc;
  }
  // harmonic curvature aggregate and the entropy drift g
  double inv_sum = 0;
  for (double v : x) inv_sum += (v > 0) ? 1.0 / entropy.theta_pp(v) : 0.0;
  const double agg = 1.0 / inv_sum;
  double drift_bar = 0;
  for (double v : x)
    if (v > 0) drift_bar += entropy.theta_p(v) / entropy.theta_pp(v);
  const double xc = x[static_cast<std::size_t>(chosen)];
  const double curv_c = entropy.theta_pp(xc);
  for (std::size_t a = 0; a < n; ++a) {
    if (!(x[a] > 0)) {
      inc[a] = 0.0;  // faces are invariant: a dead action stays dead
      continue;
    }
    double ind = (static_cast<int>(a) == chosen) ? 1.0 : 0.0;
    double g = entropy.theta_p(x[a]) - agg * drift_bar;
    inc[a] = ((u_hat / xc) * (ind - agg / curv_c) - T * g) / entropy.theta_pp(x[a]);
  }
  return inc;
}

// Generic-kernel arithmetic without the Gibbs dispatch; used to cross-check
// that the simplified Gibbs form agrees with the general formula.
inline std::vector<double> strategy_update_increment_generic(const EntropyModel& entropy, double T,
                                                             const std::vector<double>& x,
                                                             int chosen, double u_hat) {
  double inv_sum = 0;
  for (double v : x) inv_sum += (v > 0) ? 1.0 / entropy.theta_pp(v) : 0.0;
  const double agg = 1.0 / inv_sum;
  double drift_bar = 0;
  for (double v : x)
    if (v > 0) drift_bar += entropy.theta_p(v) / entropy.theta_pp(v);
  const double xc = x[static_cast<std::size_t>(chosen)];
  const double curv_c = entropy.theta_pp(xc);
  std::vector<double> inc(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    if (!(x[a] > 0)) {
      inc[a] = 0.0;
      continue;
    }
    double ind = (static_cast<int>(a) == chosen) ? 1.0 : 0.0;
    double g = entropy.theta_p(x[a]) - agg * drift_bar;
    inc[a] = ((u_hat / xc) * (ind - agg / curv_c) - T * g) / entropy.theta_pp(x[a]);
  }
  return inc;
}

// --- step-size safety ceiling ------------------------------------------------

struct StepBoundReport {
  double gamma_max = 0.0;
  double increment_bound = 0.0;  // B with gamma_max = 1/B
  double kernel_floor = 0.0;     // m
  double curvature_max = 0.0;    // sup of the harmonic curvature aggregate
  double drift_ratio_max = 0.0;  // sup |theta'/theta''|
};

// Per-step safety ceiling for the discrete update with payoffs in [0,1]:
// one gamma_max-sized step cannot push any coordinate negative.
inline StepBoundReport step_bound(const EntropyModel& entropy, double T, int action_count) {
  if (!entropy.decomposable())
    throw ArgumentError("step bound needs a kernel entropy with xi theta''(xi) bounded below");
  if (!(T > 0)) throw ArgumentError("step bound defined for positive temperature");
  if (action_count < 2) throw ArgumentError("need at least two actions");

  StepBoundReport rep;
  rep.kernel_floor = entropy.kernel_bound();

  // sup |theta'(x)/theta''(x)| over (0,1], by dense sampling
  double M = 0;
  for (int i = 1; i <= 200000; ++i) {
    double x = static_cast<double>(i) / 200000.0;
    M = std::max(M, std::fabs(entropy.theta_p(x) / entropy.theta_pp(x)));
  }
  rep.drift_ratio_max = M;

  // sup of the harmonic aggregate (1/sum(1/theta'')); 1/theta'' is concave in
  // x for these kernels, so the sum is minimized at the uniform point
  {
    double inv = action_count / entropy.theta_pp(1.0 / action_count);
    rep.curvature_max = 1.0 / inv;
  }

  const double C = entropy.theta_p(1.0) + rep.curvature_max * action_count * M;
  rep.increment_bound =
      (T * C + rep.curvature_max / rep.kernel_floor) / rep.kernel_floor;
  rep.gamma_max = 1.0 / rep.increment_bound;
  return rep;
}

// --- learners ----------------------------------------------------------------

// Score-based learning: each player tracks action scores, plays the choice map
// of its scores, and reinforces only the realized action by the
// importance-weighted score error.
inline LearnerRun run_score_learner(const FiniteGame& game, const EntropyModel& entropy, double T,
                                    const StepSchedule& schedule, long iters, std::uint64_t seed,
                                    const LearnerOptions& opts = {}) {
  if (iters < 1) throw ArgumentError("need at least one iteration");
  const int N = game.num_players();
  LearnerRun run;
  run.seed = seed;
  run.checkpoints = opts.checkpoints;

  std::vector<std::vector<double>> Y(static_cast<std::size_t>(N));
  MixedProfile X(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    Y[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(game.actions(k)), 0.0);
    X[static_cast<std::size_t>(k)] = choice_map(entropy, Y[static_cast<std::size_t>(k)]);
  }

  auto checkpoint_if_due = [&](long n) {
    for (std::size_t i = run.checkpoint_profiles.size(); i < run.checkpoints.size(); ++i) {
      if (run.checkpoints[i] != n) break;
      run.checkpoint_profiles.push_back(X);
    }
  };
  checkpoint_if_due(0);

  for (long n = 1; n <= iters; ++n) {
    PureProfile a(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
      RngStream s(seed, {opts.replicate, static_cast<std::uint64_t>(k),
                         static_cast<std::uint64_t>(n), detail::kDrawAction});
      a[static_cast<std::size_t>(k)] =
          detail::sample_action(X[static_cast<std::size_t>(k)], s.next_unit());
    }
    std::vector<double> payoffs(static_cast<std::size_t>(N));
    const double gamma = schedule.at(n);
    for (int k = 0; k < N; ++k) {
      double u_hat = game.payoff(k, a);
      payoffs[static_cast<std::size_t>(k)] = u_hat;
      auto& yk = Y[static_cast<std::size_t>(k)];
      auto& xk = X[static_cast<std::size_t>(k)];
      const auto ak = static_cast<std::size_t>(a[static_cast<std::size_t>(k)]);
      yk[ak] += gamma * (u_hat - T * yk[ak]) / xk[ak];
      if (std::fabs(yk[ak]) > 1e6) {
        run.status = LearnerRun::Status::BlowUp;
        run.iterations = n;
        run.final_profile = X;
        run.final_scores = Y;
        return run;
      }
    }
    for (int k = 0; k < N; ++k)
      X[static_cast<std::size_t>(k)] = choice_map(entropy, Y[static_cast<std::size_t>(k)]);
    if (opts.record_trace) run.trace.push_back({n, a, payoffs, X});
    checkpoint_if_due(n);
  }
  run.iterations = iters;
  run.final_profile = X;
  run.final_scores = Y;
  return run;
}

// Decentralized strategy-based learning: at each step every player plays; the
// players picked by the revision process apply the discrete entropy-driven
// update using (possibly delayed, possibly noisy) realized payoffs and their
// own per-player step counter.
inline LearnerRun run_async_learner(const FiniteGame& game, const EntropyModel& entropy, double T,
                                    const StepSchedule& schedule, long iters, std::uint64_t seed,
                                    const MixedProfile& x0, const RevisionProcess& revision,
                                    const DelayModel& delay, const NoiseModel& noise,
                                    const LearnerOptions& opts = {}) {
  if (iters < 1) throw ArgumentError("need at least one iteration");
  if (!(T > 0) && !opts.allow_zero_temperature)
    throw ArgumentError(
        "temperature must be positive (nonpositive runs need the unsafe flag: convergence is "
        "not guaranteed there)");
  const int N = game.num_players();
  if (!is_valid_profile(x0, game.action_counts()))
    throw ArgumentError("initial profile is invalid");
  for (const auto& row : x0)
    for (double v : row)
      if (!(v > 0)) throw ArgumentError("initial profile must have full support");

  LearnerRun run;
  run.seed = seed;
  run.checkpoints = opts.checkpoints;
  MixedProfile X = x0;

  const int M = delay.max_delay;
  std::vector<PureProfile> ring(static_cast<std::size_t>(M + 1));
  std::vector<long> phi(static_cast<std::size_t>(N), 0);  // per-player update counts
  std::uint64_t markov_state = 0;                         // empty subset start

  auto checkpoint_if_due = [&](long n) {
    for (std::size_t i = run.checkpoint_profiles.size(); i < run.checkpoints.size(); ++i) {
      if (run.checkpoints[i] != n) break;
      run.checkpoint_profiles.push_back(X);
    }
  };
  checkpoint_if_due(0);

  for (long n = 1; n <= iters; ++n) {
    // who updates this step
    std::vector<bool> active(static_cast<std::size_t>(N), true);
    if (revision.kind == RevisionProcess::Kind::Bernoulli) {
      for (int k = 0; k < N; ++k) {
        RngStream s(seed, {opts.replicate, static_cast<std::uint64_t>(k),
                           static_cast<std::uint64_t>(n), detail::kDrawRevision});
        active[static_cast<std::size_t>(k)] =
            s.next_unit() < revision.inclusion[static_cast<std::size_t>(k)];
      }
    } else if (revision.kind == RevisionProcess::Kind::Markov) {
      RngStream s(seed, {opts.replicate, static_cast<std::uint64_t>(n), detail::kDrawRevision});
      double u = s.next_unit();
      double acc = 0;
      const Eigen::Index rows = revision.transition.rows();
      Eigen::Index next = rows - 1;
      for (Eigen::Index j = 0; j < rows; ++j) {
        acc += revision.transition(static_cast<Eigen::Index>(markov_state), j);
        if (u < acc) {
          next = j;
          break;
        }
      }
      markov_state = static_cast<std::uint64_t>(next);
      for (int k = 0; k < N; ++k)
        active[static_cast<std::size_t>(k)] = (markov_state >> k) & 1ULL;
    }

    // everyone plays
    PureProfile a(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
      RngStream s(seed, {opts.replicate, static_cast<std::uint64_t>(k),
                         static_cast<std::uint64_t>(n), detail::kDrawAction});
      a[static_cast<std::size_t>(k)] =
          detail::sample_action(X[static_cast<std::size_t>(k)], s.next_unit());
    }
    ring[static_cast<std::size_t>(n % (M + 1))] = a;

    std::vector<double> payoffs(static_cast<std::size_t>(N), 0.0);
    for (int k = 0; k < N; ++k) {
      if (!active[static_cast<std::size_t>(k)]) continue;
      ++phi[static_cast<std::size_t>(k)];
      const double gamma = schedule.at(phi[static_cast<std::size_t>(k)]);

      // opponents' actions possibly from an earlier step; own action current
      long lag = 0;
      if (M > 0) {
        RngStream s(seed, {opts.replicate, static_cast<std::uint64_t>(k),
                           static_cast<std::uint64_t>(n), detail::kDrawDelay});
        lag = std::min<long>(delay.draw(s), n - 1);
      }
      PureProfile eff = ring[static_cast<std::size_t>((n - lag) % (M + 1))];
      eff[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)];
      double u_hat = game.payoff(k, eff);
      if (noise.kind != NoiseModel::Kind::None) {
        RngStream s(seed, {opts.replicate, static_cast<std::uint64_t>(k),
                           static_cast<std::uint64_t>(n), detail::kDrawNoise});
        u_hat += noise.draw(
            s, X[static_cast<std::size_t>(k)]
                 [static_cast<std::size_t>(a[static_cast<std::size_t>(k)])]);
      }
      payoffs[static_cast<std::size_t>(k)] = u_hat;

      auto& xk = X[static_cast<std::size_t>(k)];
      const int chosen = a[static_cast<std::size_t>(k)];
      std::vector<double> inc = strategy_update_increment(entropy, T, xk, chosen, u_hat);
      double others = 0;
      for (std::size_t al = 0; al < xk.size(); ++al) {
        if (static_cast<int>(al) == chosen) continue;
        xk[al] += gamma * inc[al];
        if (std::isnan(xk[al])) throw NumericalError("update produced NaN");
        if (xk[al] < -1e-14)
          throw NumericalError("step bound violated: coordinate went negative");
        if (xk[al] < 0) xk[al] = 0;
        others += xk[al];
      }
      // assign the residual mass to the chosen action: sums stay exactly 1
      xk[static_cast<std::size_t>(chosen)] = 1.0 - others;
      if (std::isnan(xk[static_cast<std::size_t>(chosen)]))
        throw NumericalError("update produced NaN");
      if (xk[static_cast<std::size_t>(chosen)] < -1e-14)
        throw NumericalError("step bound violated: coordinate went negative");
      if (xk[static_cast<std::size_t>(chosen)] < 0) xk[static_cast<std::size_t>(chosen)] = 0;
    }
    if (opts.record_trace) run.trace.push_back({n, a, payoffs, X});
    checkpoint_if_due(n);
  }
  run.iterations = iters;
  run.final_profile = X;
  return run;
}

// Synchronous strategy learning: the degenerate case of the decentralized
// scheme (everyone updates every step, no delays). Sharing the code path makes
// the equivalence exact, not approximate.
inline LearnerRun run_strategy_learner(const FiniteGame& game, const EntropyModel& entropy,
                                       double T, const StepSchedule& schedule, long iters,
                                       std::uint64_t seed, const MixedProfile& x0,
                                       const NoiseModel& noise = NoiseModel::none(),
                                       const LearnerOptions& opts = {}) {
  return run_async_learner(game, entropy, T, schedule, iters, seed, x0, RevisionProcess::full(),
                           DelayModel::none(), noise, opts);
}

// --- aggregation -------------------------------------------------------------

struct ConvergenceSummary {
  std::vector<long> checkpoints;
  std::vector<double> fraction_converged;          // within eps of some reference
  std::vector<std::vector<std::vector<int>>> density;  // per checkpoint, G x G counts
};

inline double distance_to_set(const MixedProfile& x, const std::vector<MixedProfile>& refs) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : refs) {
    double d = 0;
    for (std::size_t k = 0; k < x.size(); ++k)
      for (std::size_t a = 0; a < x[k].size(); ++a)
        d = std::max(d, std::fabs(x[k][a] - r[k][a]));
    best = std::min(best, d);
  }
  return best;
}

inline ConvergenceSummary convergence_stats(const std::vector<LearnerRun>& runs,
                                            const std::vector<MixedProfile>& refs, double eps,
                                            int grid = 50) {
  if (runs.empty() || refs.empty()) throw ArgumentError("need runs and reference points");
  ConvergenceSummary out;
  out.checkpoints = runs.front().checkpoints;
  const std::size_t C = out.checkpoints.size();
  out.fraction_converged.assign(C, 0.0);
  out.density.assign(C, std::vector<std::vector<int>>(static_cast<std::size_t>(grid),
                                                      std::vector<int>(
                                                          static_cast<std::size_t>(grid), 0)));
  for (const auto& run : runs) {
    if (run.checkpoint_profiles.size() != C)
      throw ArgumentError("runs must share the checkpoint list");
    for (std::size_t c = 0; c < C; ++c) {
      const MixedProfile& x = run.checkpoint_profiles[c];
      if (distance_to_set(x, refs) <= eps) out.fraction_converged[c] += 1.0;
      if (x.size() == 2 && x[0].size() == 2 && x[1].size() == 2) {
        auto cell = [&](double v) {
          return std::min(grid - 1, static_cast<int>(v * grid));
        };
        out.density[c][static_cast<std::size_t>(cell(x[0][0]))]
                      [static_cast<std::size_t>(cell(x[1][0]))] += 1;
      }
    }
  }
  for (double& f : out.fraction_converged) f /= static_cast<double>(runs.size());
  return out;
}

}  // namespace entrodyn

#endif  // ENTRODYN_LEARNING_HPP
