#ifndef ENTRODYN_EQUILIBRIA_HPP
#define ENTRODYN_EQUILIBRIA_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entrodyn/dynamics.hpp"
#include "entrodyn/entropy.hpp"
#include "entrodyn/errors.hpp"
#include "entrodyn/game.hpp"

namespace entrodyn {

struct QrePoint {
  MixedProfile x;
  double rho = 0.0;
  double residual = 0.0;                  // ||x - Q(rho u(x))||_inf, freshly evaluated
  std::vector<std::vector<int>> support;  // per-player action subsets carrying mass
};

namespace detail {

inline double qre_residual(const FiniteGame& game, const EntropyModel& entropy, double rho,
                           const MixedProfile& x) {
  double r = 0;
  for (int k = 0; k < game.num_players(); ++k) {
    std::vector<double> u = game.payoff_vector(x, k);
    for (double& v : u) v *= rho;
    std::vector<double> q = choice_map(entropy, u);
    for (std::size_t a = 0; a < q.size(); ++a)
      r = std::max(r, std::fabs(q[a] - x[static_cast<std::size_t>(k)][a]));
  }
  return r;
}

inline std::vector<std::vector<int>> full_support(const FiniteGame& game) {
  std::vector<std::vector<int>> s(static_cast<std::size_t>(game.num_players()));
  for (int k = 0; k < game.num_players(); ++k)
    for (int a = 0; a < game.actions(k); ++a) s[static_cast<std::size_t>(k)].push_back(a);
  return s;
}

}  // namespace detail

// Damped fixed-point iteration on x = Q(rho u(x)). Deterministic given init;
// with multiple equilibria the one reached depends on the starting point.
inline QrePoint qre_solve(const FiniteGame& game, const EntropyModel& entropy, double rho,
                          const MixedProfile& init, double tol = 1e-10, int max_iters = 5000) {
  if (!(rho >= 0)) throw ArgumentError("rationality level must be nonnegative");
  if (!is_valid_profile(init, game.action_counts()))
    throw ArgumentError("initial profile is invalid");

  MixedProfile x = init;
  double s = 0.5;
  double prev_res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    MixedProfile q(x.size());
    double res = 0;
    for (int k = 0; k < game.num_players(); ++k) {
      std::vector<double> u = game.payoff_vector(x, k);
      for (double& v : u) v *= rho;
      q[static_cast<std::size_t>(k)] = choice_map(entropy, u);
      for (std::size_t a = 0; a < u.size(); ++a)
        res = std::max(res, std::fabs(q[static_cast<std::size_t>(k)][a] -
                                      x[static_cast<std::size_t>(k)][a]));
    }
    if (res < tol) {
      QrePoint out;
      out.x = x;
      out.rho = rho;
      out.residual = res;
      out.support = detail::full_support(game);
      return out;
    }
    if (res > prev_res)
      s = std::max(s * 0.5, 1e-3);
    else
      s = std::min(s * 1.1, 0.9);  // recover after transient spiral overshoots
    prev_res = res;
    for (std::size_t k = 0; k < x.size(); ++k) {
      double sum = 0;
      for (std::size_t a = 0; a < x[k].size(); ++a) {
        x[k][a] = (1.0 - s) * x[k][a] + s * q[k][a];
        sum += x[k][a];
      }
      for (double& v : x[k]) v /= sum;
    }
  }
  std::vector<double> flat;
  for (const auto& row : x) flat.insert(flat.end(), row.begin(), row.end());
  throw NumericalError("fixed-point iteration did not reach tolerance", flat, prev_res);
}

struct QPath {
  std::vector<QrePoint> points;  // rho strictly increasing
  bool truncated = false;        // corrector failed near a fold; path stops early
  std::optional<PureProfile> terminal_candidate;  // nearest pure profile at the end
};

// Naive predictor-corrector continuation in rho from the uniform profile.
inline QPath qre_path(const FiniteGame& game, const EntropyModel& entropy, double rho_max,
                      int steps) {
  if (!(rho_max > 0) || steps < 1) throw ArgumentError("need positive rho_max and steps");
  QPath path;
  MixedProfile x = uniform_profile(game);
  {
    QrePoint p0 = qre_solve(game, entropy, 0.0, x);
    path.points.push_back(p0);
    x = p0.x;
  }
  double rho = 0.0;
  double d_rho = rho_max / steps;
  const double min_step = 1e-6;
  while (rho < rho_max - 1e-12) {
    double step = std::min(d_rho, rho_max - rho);
    bool advanced = false;
    while (step >= min_step) {
      try {
        QrePoint p = qre_solve(game, entropy, rho + step, x);
        // guard against branch jumps near folds: require continuity in x
        double jump = 0;
        for (std::size_t k = 0; k < x.size(); ++k)
          for (std::size_t a = 0; a < x[k].size(); ++a)
            jump = std::max(jump, std::fabs(p.x[k][a] - x[k][a]));
        if (jump > 0.2 && step > min_step) {
          step *= 0.5;
          continue;
        }
        rho += step;
        x = p.x;
        path.points.push_back(p);
        advanced = true;
        break;
      } catch (const NumericalError&) {
        step *= 0.5;
      }
    }
    if (!advanced) {
      path.truncated = true;
      break;
    }
  }
  // tag the pure profile nearest to the terminal point
  const MixedProfile& xt = path.points.back().x;
  PureProfile a(xt.size());
  for (std::size_t k = 0; k < xt.size(); ++k)
    a[k] = static_cast<int>(std::max_element(xt[k].begin(), xt[k].end()) - xt[k].begin());
  path.terminal_candidate = a;
  return path;
}

struct NashSet {
  std::vector<MixedProfile> equilibria;
  bool mixed_complete = false;  // true when mixed enumeration was feasible (2x2)
};

// Exact pure Nash by deviation checks; for 2x2, also the interior mixed
// equilibrium from the indifference equations when it exists.
inline NashSet nash_enumerate_small(const FiniteGame& game) {
  if (game.num_profiles() > 10000) throw ArgumentError("game too large for enumeration");
  NashSet out;
  for (std::size_t idx = 0; idx < game.num_profiles(); ++idx) {
    PureProfile a = game.profile_from_index(idx);
    bool nash = true;
    for (int k = 0; k < game.num_players() && nash; ++k) {
      double base = game.payoff(k, a);
      PureProfile dev = a;
      for (int b = 0; b < game.actions(k); ++b) {
        if (b == a[static_cast<std::size_t>(k)]) continue;
        dev[static_cast<std::size_t>(k)] = b;
        if (game.payoff(k, dev) > base + 1e-12) {
          nash = false;
          break;
        }
      }
    }
    if (nash) out.equilibria.push_back(pure_profile(game, a));
  }

  bool is_2x2 = game.num_players() == 2 && game.actions(0) == 2 && game.actions(1) == 2;
  if (is_2x2) {
    out.mixed_complete = true;
    // player 1's mixture makes player 0 indifferent and vice versa
    auto u = [&](int k, int a0, int a1) { return game.payoff(k, PureProfile{a0, a1}); };
    double d0 = (u(0, 0, 0) - u(0, 1, 0)) - (u(0, 0, 1) - u(0, 1, 1));
    double d1 = (u(1, 0, 0) - u(1, 0, 1)) - (u(1, 1, 0) - u(1, 1, 1));
    if (std::fabs(d0) > 1e-12 && std::fabs(d1) > 1e-12) {
      double p1 = (u(0, 1, 1) - u(0, 0, 1)) / d0;  // prob opponent plays action 0
      double p0 = (u(1, 1, 1) - u(1, 1, 0)) / d1;
      if (p0 > 1e-9 && p0 < 1 - 1e-9 && p1 > 1e-9 && p1 < 1 - 1e-9)
        out.equilibria.push_back(MixedProfile{{p0, 1 - p0}, {p1, 1 - p1}});
    }
  }
  return out;
}

// QRE of the restricted game on the given support, embedded back with zeros.
inline QrePoint restricted_qre(const FiniteGame& game, const EntropyModel& entropy, double rho,
                               const std::vector<std::vector<int>>& support) {
  FiniteGame sub = game.restriction(support);
  QrePoint inner = qre_solve(sub, entropy, rho, uniform_profile(sub));
  QrePoint out;
  out.rho = rho;
  out.support = support;
  out.x.resize(static_cast<std::size_t>(game.num_players()));
  for (int k = 0; k < game.num_players(); ++k) {
    out.x[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(game.actions(k)), 0.0);
    const auto& supp = support[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < supp.size(); ++i)
      out.x[static_cast<std::size_t>(k)][static_cast<std::size_t>(supp[i])] =
          inner.x[static_cast<std::size_t>(k)][i];
  }
  out.residual = inner.residual;
  return out;
}

struct RestPointRecord {
  MixedProfile x;
  StabilityTag tag = StabilityTag::Nonhyperbolic;
  double max_eig_real = 0.0;
  bool is_vertex = false;
};

struct ScanPoint {
  double T = 0.0;
  std::vector<RestPointRecord> rest_points;
};

struct BifurcationScan {
  std::vector<ScanPoint> grid;
  std::vector<double> critical_temperatures;  // refined to 1e-4
};

namespace detail {

inline bool profiles_close(const MixedProfile& a, const MixedProfile& b, double tol) {
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].size(); ++i)
      if (std::fabs(a[k][i] - b[k][i]) > tol) return false;
  return true;
}

// Newton on the score field with finite-difference Jacobian, from a z seed.
inline std::optional<RelativeScores> zd_rest_newton(const DynamicsSpec& spec, RelativeScores z,
                                                    double tol = 1e-10, int max_iters = 60,
                                                    double escape_cap = 60.0) {
  const int d = spec.game->reduced_dim();
  for (int it = 0; it < max_iters; ++it) {
    RelativeScores f = zd_field(spec, z);
    if (inf_norm(f) < tol) return z;
    Eigen::MatrixXd J = zd_jacobian(spec, z);
    Eigen::VectorXd rhs(d);
    int i = 0;
    for (const auto& row : f)
      for (double v : row) rhs(i++) = -v;
    Eigen::VectorXd dz = J.fullPivLu().solve(rhs);
    if (!dz.allFinite()) return std::nullopt;
    double step_norm = dz.lpNorm<Eigen::Infinity>();
    if (step_norm > 5.0) dz *= 5.0 / step_norm;  // trust region against wild seeds
    i = 0;
    for (auto& row : z)
      for (double& v : row) {
        v += dz(i++);
        if (std::fabs(v) > escape_cap) return std::nullopt;  // escaping toward a vertex
      }
  }
  return std::nullopt;
}

// A vertex attracts iff a nearby interior start flows into it. The probe must
// sit deep inside the basin: at temperature T < 0 the basin radius in score
// space scales like (payoff gap)/|T|, so the start carries only 1e-12 of mass
// off the vertex (|z| ~ 27), not a fixed visible fraction.
inline bool vertex_attracts(const DynamicsSpec& spec, const PureProfile& a) {
  MixedProfile x0(static_cast<std::size_t>(spec.game->num_players()));
  for (int k = 0; k < spec.game->num_players(); ++k) {
    int nk = spec.game->actions(k);
    x0[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(nk),
                                           1e-12 / std::max(1, nk - 1));
    x0[static_cast<std::size_t>(k)][static_cast<std::size_t>(a[static_cast<std::size_t>(k)])] =
        1.0 - 1e-12;
  }
  Trajectory traj = integrate(spec, x0, 200.0, 0.01, StateSpace::Score, 1e-10, 50);
  const MixedProfile& xf = traj.states.back();
  for (int k = 0; k < spec.game->num_players(); ++k)
    if (xf[static_cast<std::size_t>(k)]
          [static_cast<std::size_t>(a[static_cast<std::size_t>(k)])] < 0.99)
      return false;
  return true;
}

}  // namespace detail

// All rest points of the temperature-T dynamics on a 2x2 game: interior ones
// from dense seeding, vertices (relevant for T <= 0) from basin probes.
inline ScanPoint rest_points_at_temperature(const FiniteGame& game, const EntropyModel& entropy,
                                            double T, int seeds_per_axis = 21,
                                            double dedup_tol = 1e-3) {
  if (game.num_players() != 2 || game.actions(0) != 2 || game.actions(1) != 2)
    throw ArgumentError("temperature scan supports 2x2 games only");
  DynamicsSpec spec{&game, entropy, T, {}};
  ScanPoint out;
  out.T = T;

  auto add_point = [&](const MixedProfile& x, bool vertex) {
    for (const auto& rec : out.rest_points)
      if (detail::profiles_close(rec.x, x, dedup_tol)) return;
    RestPointRecord rec;
    rec.x = x;
    rec.is_vertex = vertex;
    if (!vertex) {
      RestPointClassification cls = classify_rest_point(spec, x);
      rec.tag = cls.tag;
      rec.max_eig_real = cls.max_real;
    } else {
      rec.tag = StabilityTag::Stable;  // only attracting vertices are recorded
      rec.max_eig_real = -std::numeric_limits<double>::infinity();
    }
    out.rest_points.push_back(std::move(rec));
  };

  // Vertices first: at T < 0 the interior carries rest points exponentially
  // close to attracting vertices, and those must fold into the vertex record,
  // not the other way round.
  if (T <= 0) {
    for (int a0 = 0; a0 < 2; ++a0)
      for (int a1 = 0; a1 < 2; ++a1)
        if (detail::vertex_attracts(spec, PureProfile{a0, a1}))
          add_point(pure_profile(game, PureProfile{a0, a1}), true);
  }

  // Interior rest points from a Newton grid on the score field. Unlike damped
  // fixed-point iteration, Newton keeps quadratic convergence next to the
  // pitchfork, so counts stay reliable arbitrarily close to the transition.
  // At T > 0 rest points satisfy z = (payoff gap)/T, so widen the escape cap
  // accordingly before treating an iterate as vertex-bound.
  double cap = 60.0;
  if (T > 0) {
    double span = 0;
    for (const auto& [lo_b, hi_b] : game.payoff_bounds()) span = std::max(span, hi_b - lo_b);
    cap = std::max(60.0, 4.0 * span / T);
  }
  for (int i = 0; i < seeds_per_axis; ++i)
    for (int j = 0; j < seeds_per_axis; ++j) {
      double z1 = -10.0 + 20.0 * i / (seeds_per_axis - 1);
      double z2 = -10.0 + 20.0 * j / (seeds_per_axis - 1);
      auto z = detail::zd_rest_newton(spec, RelativeScores{{z1}, {z2}}, 1e-10, 60, cap);
      if (z) add_point(profile_from_scores(spec, *z), false);
    }
  return out;
}

inline int interior_rest_point_count(const FiniteGame& game, const EntropyModel& entropy,
                                     double T) {
  ScanPoint p = rest_points_at_temperature(game, entropy, T);
  int n = 0;
  for (const auto& rec : p.rest_points)
    if (!rec.is_vertex) ++n;
  return n;
}

// Refine the temperature where the leading eigenvalue of the score-dynamics
// Jacobian crosses zero at the equilibrium continued from the barycenter.
inline double critical_temperature_eigenvalue(const FiniteGame& game, const EntropyModel& entropy,
                                              double T_lo, double T_hi, double tol = 1e-4) {
  auto max_real_at = [&](double T) {
    DynamicsSpec spec{&game, entropy, T, {}};
    QrePoint pt = qre_solve(game, entropy, 1.0 / T, uniform_profile(game));
    return classify_rest_point(spec, pt.x).max_real;
  };
  double f_lo = max_real_at(T_lo), f_hi = max_real_at(T_hi);
  if (f_lo * f_hi > 0) throw ArgumentError("no eigenvalue crossing in the given bracket");
  while (T_hi - T_lo > tol) {
    double mid = 0.5 * (T_lo + T_hi);
    double f_mid = max_real_at(mid);
    if (f_mid * f_lo > 0) {
      T_lo = mid;
      f_lo = f_mid;
    } else {
      T_hi = mid;
    }
  }
  return 0.5 * (T_lo + T_hi);
}

inline BifurcationScan bifurcation_scan(const FiniteGame& game, const EntropyModel& entropy,
                                        double T_min, double T_max, int grid_points) {
  if (grid_points < 2) throw ArgumentError("grid needs at least two points");
  BifurcationScan scan;
  for (int i = 0; i < grid_points; ++i) {
    double T = T_min + (T_max - T_min) * i / (grid_points - 1);
    scan.grid.push_back(rest_points_at_temperature(game, entropy, T));
  }
  for (std::size_t i = 0; i + 1 < scan.grid.size(); ++i) {
    auto count = [](const ScanPoint& p) {
      int n = 0;
      for (const auto& r : p.rest_points)
        if (!r.is_vertex) ++n;
      return n;
    };
    int c_lo = count(scan.grid[i]), c_hi = count(scan.grid[i + 1]);
    if (c_lo == c_hi) continue;
    double lo = scan.grid[i].T, hi = scan.grid[i + 1].T;
    while (hi - lo > 1e-4) {
      double mid = 0.5 * (lo + hi);
      if (interior_rest_point_count(game, entropy, mid) == c_lo)
        lo = mid;
      else
        hi = mid;
    }
    scan.critical_temperatures.push_back(0.5 * (lo + hi));
  }
  return scan;
}

}  // namespace entrodyn

#endif  // ENTRODYN_EQUILIBRIA_HPP
