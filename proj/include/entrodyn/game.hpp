#ifndef ENTRODYN_GAME_HPP
#define ENTRODYN_GAME_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "entrodyn/errors.hpp"

namespace entrodyn {

// One mixed strategy per player; inner vectors live on the player's simplex.
using MixedProfile = std::vector<std::vector<double>>;

// A pure action profile, one action index per player.
using PureProfile = std::vector<int>;

inline bool is_valid_profile(const MixedProfile& x, const std::vector<int>& action_counts,
                             double tol = 1e-9) {
  if (x.size() != action_counts.size()) return false;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (static_cast<int>(x[k].size()) != action_counts[k]) return false;
    double s = 0;
    for (double v : x[k]) {
      if (!(v >= -tol) || !std::isfinite(v)) return false;
      s += v;
    }
    if (std::fabs(s - 1.0) > tol) return false;
  }
  return true;
}

// Per-player affine rescaling u' = offset + scale * u.
struct AffineMap {
  double offset = 0.0;
  double scale = 1.0;
  bool degenerate = false;  // constant payoffs, mapped to 0.5 by convention
};

struct PotentialCertificate {
  std::vector<double> potential_values;  // indexed by joint pure profile
  double residual = 0.0;                 // max violation of the potential property
  bool is_potential(double tol = 1e-9) const { return residual <= tol; }
};

// A finite N-player game in normal form. Immutable after construction and
// safe to share across threads; all member operations are pure.
class FiniteGame {
 public:
  FiniteGame(std::vector<int> action_counts, std::vector<std::vector<double>> payoffs)
      : action_counts_(std::move(action_counts)), payoffs_(std::move(payoffs)) {
    if (action_counts_.empty()) throw ArgumentError("game must have at least one player");
    for (int n : action_counts_)
      if (n < 1) throw ArgumentError("each player needs at least one action");
    std::size_t prof = num_profiles();
    if (payoffs_.size() != action_counts_.size())
      throw ArgumentError("payoff tensor must have one table per player");
    for (const auto& table : payoffs_) {
      if (table.size() != prof) throw ArgumentError("payoff table has wrong number of entries");
      for (double v : table)
        if (!std::isfinite(v)) throw ArgumentError("payoff entries must be finite");
    }
    bounds_.reserve(payoffs_.size());
    for (const auto& table : payoffs_) {
      auto [mn, mx] = std::minmax_element(table.begin(), table.end());
      bounds_.emplace_back(*mn, *mx);
    }
  }

  int num_players() const { return static_cast<int>(action_counts_.size()); }
  const std::vector<int>& action_counts() const { return action_counts_; }
  int actions(int player) const { return action_counts_[player]; }
  const std::vector<std::pair<double, double>>& payoff_bounds() const { return bounds_; }

  // A0 = sum_k (|A_k| - 1), the dimension of the relative-score space.
  int reduced_dim() const {
    int d = 0;
    for (int n : action_counts_) d += n - 1;
    return d;
  }

  std::size_t num_profiles() const {
    std::size_t p = 1;
    for (int n : action_counts_) p *= static_cast<std::size_t>(n);
    return p;
  }

  std::size_t profile_index(const PureProfile& a) const {
    if (static_cast<int>(a.size()) != num_players()) throw ArgumentError("profile size mismatch");
    std::size_t idx = 0;
    for (int k = 0; k < num_players(); ++k) {
      if (a[k] < 0 || a[k] >= action_counts_[k]) throw ArgumentError("action index out of range");
      idx = idx * action_counts_[k] + a[k];
    }
    return idx;
  }

  PureProfile profile_from_index(std::size_t idx) const {
    PureProfile a(num_players());
    for (int k = num_players() - 1; k >= 0; --k) {
      a[k] = static_cast<int>(idx % action_counts_[k]);
      idx /= action_counts_[k];
    }
    return a;
  }

  double payoff(int player, const PureProfile& a) const {
    check_player(player);
    return payoffs_[player][profile_index(a)];
  }

  double payoff(int player, std::size_t profile_idx) const {
    check_player(player);
    return payoffs_[player][profile_idx];
  }

  // u_{k,alpha}(x): expected payoff to `player` for playing `action` against
  // the opponents' mixed strategies, by multilinear summation.
  double expected_payoff(const MixedProfile& x, int player, int action) const {
    check_player(player);
    if (action < 0 || action >= action_counts_[player])
      throw ArgumentError("action index out of range");
    if (!is_valid_profile(x, action_counts_)) throw ArgumentError("invalid mixed profile");
    double total = 0.0;
    PureProfile a(num_players(), 0);
    a[player] = action;
    for_each_opponent_profile(player, a, [&](const PureProfile& prof, double weight) {
      total += weight * payoffs_[player][profile_index(prof)];
    }, x);
    return total;
  }

  // Vector (u_{k,alpha}(x))_alpha for one player.
  std::vector<double> payoff_vector(const MixedProfile& x, int player) const {
    check_player(player);
    if (!is_valid_profile(x, action_counts_)) throw ArgumentError("invalid mixed profile");
    std::vector<double> u(action_counts_[player], 0.0);
    PureProfile a(num_players(), 0);
    for_each_opponent_profile(player, a, [&](const PureProfile& prof, double weight) {
      PureProfile p = prof;
      for (int alpha = 0; alpha < action_counts_[player]; ++alpha) {
        p[player] = alpha;
        u[alpha] += weight * payoffs_[player][profile_index(p)];
      }
    }, x);
    return u;
  }

  // Expected value of `values` (one entry per joint profile) under the
  // product distribution x — the multilinear extension.
  double multilinear_value(const std::vector<double>& values, const MixedProfile& x) const {
    if (values.size() != num_profiles()) throw ArgumentError("value table size mismatch");
    double total = 0.0;
    for (std::size_t idx = 0; idx < values.size(); ++idx) {
      PureProfile a = profile_from_index(idx);
      double w = 1.0;
      for (int k = 0; k < num_players(); ++k) w *= x[k][a[k]];
      total += w * values[idx];
    }
    return total;
  }

  // Sub-game on the given per-player action subsets (support restriction).
  FiniteGame restriction(const std::vector<std::vector<int>>& supports) const {
    if (static_cast<int>(supports.size()) != num_players())
      throw ArgumentError("supports size mismatch");
    std::vector<int> counts(num_players());
    for (int k = 0; k < num_players(); ++k) {
      if (supports[k].empty()) throw ArgumentError("empty support for a player");
      for (int a : supports[k])
        if (a < 0 || a >= action_counts_[k]) throw ArgumentError("support action out of range");
      counts[k] = static_cast<int>(supports[k].size());
    }
    FiniteGame sub(counts, std::vector<std::vector<double>>(
                               num_players(), std::vector<double>(product(counts), 0.0)));
    for (std::size_t idx = 0; idx < sub.num_profiles(); ++idx) {
      PureProfile sa = sub.profile_from_index(idx);
      PureProfile a(num_players());
      for (int k = 0; k < num_players(); ++k) a[k] = supports[k][sa[k]];
      std::size_t full_idx = profile_index(a);
      for (int k = 0; k < num_players(); ++k) sub.payoffs_[k][idx] = payoffs_[k][full_idx];
    }
    sub.refresh_bounds();
    return sub;
  }

 private:
  static std::size_t product(const std::vector<int>& counts) {
    std::size_t p = 1;
    for (int n : counts) p *= static_cast<std::size_t>(n);
    return p;
  }

  void refresh_bounds() {
    bounds_.clear();
    for (const auto& table : payoffs_) {
      auto [mn, mx] = std::minmax_element(table.begin(), table.end());
      bounds_.emplace_back(*mn, *mx);
    }
  }

  void check_player(int player) const {
    if (player < 0 || player >= num_players()) throw ArgumentError("player index out of range");
  }

  template <typename F>
  void for_each_opponent_profile(int player, PureProfile& a, F&& fn,
                                 const MixedProfile& x) const {
    // iterate over opponents' joint pure actions, accumulating the product weight
    std::vector<int> opp;
    for (int k = 0; k < num_players(); ++k)
      if (k != player) opp.push_back(k);
    recurse_opponents(opp, 0, 1.0, a, fn, x);
  }

  template <typename F>
  void recurse_opponents(const std::vector<int>& opp, std::size_t i, double weight,
                         PureProfile& a, F&& fn, const MixedProfile& x) const {
    if (weight == 0.0) return;
    if (i == opp.size()) {
      fn(a, weight);
      return;
    }
    int k = opp[i];
    for (int alpha = 0; alpha < action_counts_[k]; ++alpha) {
      a[k] = alpha;
      recurse_opponents(opp, i + 1, weight * x[k][alpha], a, fn, x);
    }
  }

  std::vector<int> action_counts_;
  std::vector<std::vector<double>> payoffs_;
  std::vector<std::pair<double, double>> bounds_;
};

inline MixedProfile uniform_profile(const FiniteGame& game) {
  MixedProfile x(game.num_players());
  for (int k = 0; k < game.num_players(); ++k)
    x[k].assign(game.actions(k), 1.0 / game.actions(k));
  return x;
}

inline MixedProfile pure_profile(const FiniteGame& game, const PureProfile& a) {
  MixedProfile x(game.num_players());
  for (int k = 0; k < game.num_players(); ++k) {
    x[k].assign(game.actions(k), 0.0);
    x[k][a[k]] = 1.0;
  }
  return x;
}

// Least-squares fit of a potential function U over pure profiles, anchored at
// U(first profile) = 0. The residual is the max violation of the potential
// property over all unilateral pure deviations.
inline PotentialCertificate fit_potential(const FiniteGame& game, double tol = 1e-9) {
  if (!(tol > 0)) throw ArgumentError("tol must be positive");
  const std::size_t P = game.num_profiles();
  // unknowns: U at profiles 1..P-1 (U[0] anchored to 0)
  std::size_t rows_per_profile = 0;
  for (int k = 0; k < game.num_players(); ++k) rows_per_profile += game.actions(k) - 1;
  const std::size_t rows = P * rows_per_profile;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows),
                                            static_cast<Eigen::Index>(P - 1));
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
  Eigen::Index r = 0;
  for (std::size_t idx = 0; idx < P; ++idx) {
    PureProfile a = game.profile_from_index(idx);
    for (int k = 0; k < game.num_players(); ++k) {
      for (int beta = 0; beta < game.actions(k); ++beta) {
        if (beta == a[k]) continue;
        PureProfile dev = a;
        dev[k] = beta;
        std::size_t jdx = game.profile_index(dev);
        // u_k(a) - u_k(dev) = U(a) - U(dev)
        if (idx > 0) A(r, static_cast<Eigen::Index>(idx - 1)) += 1.0;
        if (jdx > 0) A(r, static_cast<Eigen::Index>(jdx - 1)) -= 1.0;
        b(r) = game.payoff(k, idx) - game.payoff(k, jdx);
        ++r;
      }
    }
  }
  PotentialCertificate cert;
  cert.potential_values.assign(P, 0.0);
  if (P > 1) {
    Eigen::VectorXd U = A.colPivHouseholderQr().solve(b);
    for (std::size_t idx = 1; idx < P; ++idx)
      cert.potential_values[idx] = U(static_cast<Eigen::Index>(idx - 1));
  }
  double worst = 0.0;
  for (std::size_t idx = 0; idx < P; ++idx) {
    PureProfile a = game.profile_from_index(idx);
    for (int k = 0; k < game.num_players(); ++k) {
      for (int beta = 0; beta < game.actions(k); ++beta) {
        if (beta == a[k]) continue;
        PureProfile dev = a;
        dev[k] = beta;
        std::size_t jdx = game.profile_index(dev);
        double lhs = game.payoff(k, idx) - game.payoff(k, jdx);
        double rhs = cert.potential_values[idx] - cert.potential_values[jdx];
        worst = std::max(worst, std::fabs(lhs - rhs));
      }
    }
  }
  cert.residual = worst;
  return cert;
}

// Finite congestion game: each action is a route (set of resources), the cost
// of a route is the sum of resource delays at their realized loads, and the
// payoff is the negative cost.
inline FiniteGame congestion_game(int resources,
                                  const std::vector<std::vector<double>>& delay_functions,
                                  const std::vector<std::vector<std::vector<int>>>& routes) {
  if (resources < 1) throw ArgumentError("need at least one resource");
  if (static_cast<int>(delay_functions.size()) != resources)
    throw ArgumentError("one delay list per resource required");
  const int N = static_cast<int>(routes.size());
  if (N < 1) throw ArgumentError("need at least one player");
  for (const auto& d : delay_functions)
    if (static_cast<int>(d.size()) < N)
      throw ArgumentError("delay lists must cover loads 1..N");
  std::vector<int> counts(N);
  for (int k = 0; k < N; ++k) {
    if (routes[k].empty()) throw ArgumentError("each player needs at least one route");
    counts[k] = static_cast<int>(routes[k].size());
    for (const auto& route : routes[k])
      for (int res : route)
        if (res < 0 || res >= resources) throw ArgumentError("route references unknown resource");
  }
  std::size_t P = 1;
  for (int n : counts) P *= static_cast<std::size_t>(n);
  std::vector<std::vector<double>> payoffs(N, std::vector<double>(P, 0.0));
  FiniteGame shape(counts, payoffs);  // for index conversion only
  for (std::size_t idx = 0; idx < P; ++idx) {
    PureProfile a = shape.profile_from_index(idx);
    std::vector<int> load(resources, 0);
    for (int k = 0; k < N; ++k)
      for (int res : routes[k][a[k]]) ++load[res];
    for (int k = 0; k < N; ++k) {
      double cost = 0.0;
      for (int res : routes[k][a[k]]) cost += delay_functions[res][load[res] - 1];
      payoffs[k][idx] = -cost;
    }
  }
  return FiniteGame(counts, payoffs);
}

// Rescale each player's payoffs affinely into [0,1]. Constant payoffs map to
// 0.5 and are flagged degenerate.
inline std::pair<FiniteGame, std::vector<AffineMap>> normalize_payoffs(const FiniteGame& game) {
  const int N = game.num_players();
  std::vector<std::vector<double>> payoffs(N, std::vector<double>(game.num_profiles()));
  std::vector<AffineMap> maps(N);
  for (int k = 0; k < N; ++k) {
    auto [mn, mx] = game.payoff_bounds()[k];
    AffineMap m;
    if (mx - mn <= 0.0) {
      m.degenerate = true;
      m.scale = 0.0;
      m.offset = 0.5;
    } else {
      m.scale = 1.0 / (mx - mn);
      m.offset = -mn / (mx - mn);
    }
    for (std::size_t idx = 0; idx < game.num_profiles(); ++idx)
      payoffs[k][idx] = m.offset + m.scale * game.payoff(k, idx);
    maps[k] = m;
  }
  return {FiniteGame(game.action_counts(), payoffs), maps};
}

}  // namespace entrodyn

#endif  // ENTRODYN_GAME_HPP
