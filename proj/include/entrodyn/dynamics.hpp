#ifndef ENTRODYN_DYNAMICS_HPP
#define ENTRODYN_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "entrodyn/entropy.hpp"
#include "entrodyn/errors.hpp"
#include "entrodyn/game.hpp"

namespace entrodyn {

// Per-player relative scores z_{k,mu} = y_{k,mu} - y_{k,0} (reduced coords).
using RelativeScores = std::vector<std::vector<double>>;

struct DynamicsSpec {
  const FiniteGame* game = nullptr;
  EntropyModel entropy = EntropyModel::gibbs();
  double T = 0.0;                // learning temperature, any sign
  std::vector<double> eta = {};  // per-player rates; empty means all 1

  double rate(int k) const { return eta.empty() ? 1.0 : eta[static_cast<std::size_t>(k)]; }
  void validate() const {
    if (game == nullptr) throw ArgumentError("dynamics spec needs a game");
    if (!eta.empty()) {
      if (static_cast<int>(eta.size()) != game->num_players())
        throw ArgumentError("rate vector size must match player count");
      for (double e : eta)
        if (!(e > 0)) throw ArgumentError("rates must be positive");
    }
  }
};

enum class StateSpace { Strategy, Score };

enum class TrajectoryStatus { ReachedEnd, RestPoint, VertexConverged };

struct Trajectory {
  std::vector<double> times;
  std::vector<MixedProfile> states;       // strategy-space snapshots
  std::vector<RelativeScores> scores;     // filled in score-space runs
  std::vector<double> field_norms;        // inf-norm of the driving field
  StateSpace space = StateSpace::Score;
  TrajectoryStatus status = TrajectoryStatus::ReachedEnd;
};

// --- coordinate bridges ------------------------------------------------------

inline MixedProfile profile_from_scores(const DynamicsSpec& spec, const RelativeScores& z) {
  MixedProfile x(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) x[k] = choice_map_reduced(spec.entropy, z[k]);
  return x;
}

inline RelativeScores scores_from_profile(const DynamicsSpec& spec, const MixedProfile& x) {
  RelativeScores z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    std::vector<double> w(x[k].begin() + 1, x[k].end());
    z[k] = reduced_gradient(spec.entropy, w);
  }
  return z;
}

// --- vector fields -----------------------------------------------------------

// Relative-score dynamics: dz_{k,mu} = eta_k [ (u_{k,mu} - u_{k,0})(x) - T z_{k,mu} ].
// Pass the profile if it is already available; otherwise it is recomputed.
inline RelativeScores zd_field(const DynamicsSpec& spec, const RelativeScores& z,
                               const MixedProfile* x_of_z = nullptr) {
  spec.validate();
  MixedProfile local;
  if (x_of_z == nullptr) {
    local = profile_from_scores(spec, z);
    x_of_z = &local;
  }
  RelativeScores dz(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    std::vector<double> u = spec.game->payoff_vector(*x_of_z, static_cast<int>(k));
    dz[k].resize(z[k].size());
    for (std::size_t mu = 0; mu < z[k].size(); ++mu)
      dz[k][mu] = spec.rate(static_cast<int>(k)) * (u[mu + 1] - u[0] - spec.T * z[k][mu]);
  }
  return dz;
}

// Entropy-driven dynamics on the simplex: the score dynamics pushed through
// the inverse reduced Hessian, dx = h^{mu nu} (Delta u - T z).
inline MixedProfile ed_field(const DynamicsSpec& spec, const MixedProfile& x) {
  spec.validate();
  MixedProfile dx(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto n = static_cast<Eigen::Index>(x[k].size()) - 1;
    std::vector<double> w(x[k].begin() + 1, x[k].end());
    std::vector<double> z = reduced_gradient(spec.entropy, w);
    std::vector<double> u = spec.game->payoff_vector(x, static_cast<int>(k));
    Eigen::VectorXd rhs(n);
    for (Eigen::Index mu = 0; mu < n; ++mu)
      rhs(mu) = u[static_cast<std::size_t>(mu) + 1] - u[0] -
                spec.T * z[static_cast<std::size_t>(mu)];
    Eigen::VectorXd dw = hessian_inverse_reduced(spec.entropy, w) * rhs;
    dx[k].resize(x[k].size());
    double s = 0;
    for (Eigen::Index mu = 0; mu < n; ++mu) {
      double v = spec.rate(static_cast<int>(k)) * dw(mu);
      dx[k][static_cast<std::size_t>(mu) + 1] = v;
      s += v;
    }
    dx[k][0] = -s;
  }
  return dx;
}

// Temperature-adjusted replicator: the closed form the entropy-driven field
// takes for the Gibbs kernel.
inline MixedProfile trd_field(const DynamicsSpec& spec, const MixedProfile& x) {
  spec.validate();
  MixedProfile dx(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    for (double v : x[k])
      if (!(v > 0)) throw DomainError("replicator field needs an interior profile");
    std::vector<double> u = spec.game->payoff_vector(x, static_cast<int>(k));
    double ubar = 0, lbar = 0;
    for (std::size_t a = 0; a < x[k].size(); ++a) {
      ubar += x[k][a] * u[a];
      lbar += x[k][a] * std::log(x[k][a]);
    }
    dx[k].resize(x[k].size());
    for (std::size_t a = 0; a < x[k].size(); ++a)
      dx[k][a] = spec.rate(static_cast<int>(k)) * x[k][a] *
                 ((u[a] - ubar) - spec.T * (std::log(x[k][a]) - lbar));
  }
  return dx;
}

// Raw score dynamics on one simplex: dy = u - T y.
inline std::vector<double> score_field(double T, std::span<const double> y,
                                       std::span<const double> u_now) {
  if (y.size() != u_now.size()) throw ArgumentError("score/payoff size mismatch");
  std::vector<double> dy(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dy[i] = u_now[i] - T * y[i];
  return dy;
}

// --- integration -------------------------------------------------------------

namespace detail {

inline double inf_norm(const std::vector<std::vector<double>>& v) {
  double m = 0;
  for (const auto& row : v)
    for (double x : row) m = std::max(m, std::fabs(x));
  return m;
}

template <typename State, typename Field>
State rk4_step(const Field& f, const State& s, double dt) {
  auto axpy = [](const State& a, const State& b, double c) {
    State r = a;
    for (std::size_t k = 0; k < r.size(); ++k)
      for (std::size_t i = 0; i < r[k].size(); ++i) r[k][i] += c * b[k][i];
    return r;
  };
  State k1 = f(s);
  State k2 = f(axpy(s, k1, dt / 2));
  State k3 = f(axpy(s, k2, dt / 2));
  State k4 = f(axpy(s, k3, dt));
  State out = s;
  for (std::size_t k = 0; k < out.size(); ++k)
    for (std::size_t i = 0; i < out[k].size(); ++i)
      out[k][i] += dt / 6 * (k1[k][i] + 2 * k2[k][i] + 2 * k3[k][i] + k4[k][i]);
  return out;
}

}  // namespace detail

// Score divergence beyond this magnitude is treated as vertex convergence;
// the Gibbs map underflows well before exp(-700).
inline constexpr double kScoreCap = 700.0;

inline Trajectory integrate(const DynamicsSpec& spec, const MixedProfile& x0, double t_end,
                            double dt = 0.01, StateSpace space = StateSpace::Score,
                            double rest_tol = 1e-8, int record_stride = 1) {
  spec.validate();
  if (!(dt > 0) || !(t_end > 0)) throw ArgumentError("need positive dt and t_end");
  if (!is_valid_profile(x0, spec.game->action_counts()))
    throw ArgumentError("initial state is not a mixed profile");
  for (const auto& row : x0)
    for (double v : row)
      if (!(v > 0)) throw ArgumentError("initial state must be interior");

  Trajectory traj;
  traj.space = space;
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-12));

  if (space == StateSpace::Score) {
    RelativeScores z = scores_from_profile(spec, x0);
    auto field = [&](const RelativeScores& zz) { return zd_field(spec, zz); };
    auto record = [&](double t, const RelativeScores& zz, double fn) {
      traj.times.push_back(t);
      traj.scores.push_back(zz);
      traj.states.push_back(profile_from_scores(spec, zz));
      traj.field_norms.push_back(fn);
    };
    record(0.0, z, detail::inf_norm(field(z)));
    for (long n = 0; n < steps; ++n) {
      double h = std::min(dt, t_end - static_cast<double>(n) * dt);
      z = detail::rk4_step(field, z, h);
      bool capped = false;
      for (auto& row : z)
        for (double& v : row)
          if (std::fabs(v) > kScoreCap) {
            v = std::copysign(kScoreCap, v);
            capped = true;
          }
      double t = std::min(static_cast<double>(n + 1) * dt, t_end);
      double fn = detail::inf_norm(field(z));
      if (capped || (n + 1) % record_stride == 0 || n + 1 == steps || fn < rest_tol)
        record(t, z, fn);
      if (capped) {
        traj.status = TrajectoryStatus::VertexConverged;
        return traj;
      }
      if (fn < rest_tol) {
        traj.status = TrajectoryStatus::RestPoint;
        return traj;
      }
    }
    return traj;
  }

  MixedProfile x = x0;
  auto field = [&](const MixedProfile& xx) { return ed_field(spec, xx); };
  auto record = [&](double t, double fn) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.field_norms.push_back(fn);
  };
  record(0.0, detail::inf_norm(field(x)));
  for (long n = 0; n < steps; ++n) {
    double h = std::min(dt, t_end - static_cast<double>(n) * dt);
    x = detail::rk4_step(field, x, h);
    double min_coord = std::numeric_limits<double>::infinity();
    for (auto& row : x) {
      double s = 0;
      for (double v : row) {
        if (!(v > 1e-12))
          throw IntegrationError(
              "trajectory reached the simplex boundary; integrate in score space instead");
        min_coord = std::min(min_coord, v);
        s += v;
      }
      for (double& v : row) v /= s;
    }
    double t = std::min(static_cast<double>(n + 1) * dt, t_end);
    double fn = detail::inf_norm(field(x));
    if ((n + 1) % record_stride == 0 || n + 1 == steps || fn < rest_tol) record(t, fn);
    // next to the boundary the field vanishes in strategy coordinates whether
    // or not the vertex is a genuine attractor, so rest detection is withheld
    // there; boundary-bound paths then hit the floor above and raise
    if (fn < rest_tol && min_coord >= 1e-8) {
      traj.status = TrajectoryStatus::RestPoint;
      return traj;
    }
  }
  return traj;
}

// --- diagnostics -------------------------------------------------------------

// F(x) = T sum_k h(x_k) - U(x); Lyapunov for potential games.
inline double free_energy(const DynamicsSpec& spec, const PotentialCertificate& cert,
                          const MixedProfile& x, double potential_tol = 1e-9) {
  spec.validate();
  if (!cert.is_potential(potential_tol))
    throw ArgumentError("free energy requires a potential game certificate");
  double h = 0;
  for (const auto& row : x) h += spec.entropy.value(row);
  return spec.T * h - spec.game->multilinear_value(cert.potential_values, x);
}

// Finite-difference trace of the score-dynamics Jacobian at z; equals
// -(sum_k (|A_k|-1)) * T for unit rates.
inline double zd_divergence(const DynamicsSpec& spec, const RelativeScores& z,
                            double fd_step = 1e-6) {
  spec.validate();
  double tr = 0;
  RelativeScores zp = z, zm = z;
  for (std::size_t k = 0; k < z.size(); ++k)
    for (std::size_t mu = 0; mu < z[k].size(); ++mu) {
      zp[k][mu] += fd_step;
      zm[k][mu] -= fd_step;
      tr += (zd_field(spec, zp)[k][mu] - zd_field(spec, zm)[k][mu]) / (2 * fd_step);
      zp[k][mu] = z[k][mu];
      zm[k][mu] = z[k][mu];
    }
  return tr;
}

enum class StabilityTag { Stable, Unstable, Nonhyperbolic };

struct RestPointClassification {
  std::vector<std::complex<double>> eigenvalues;
  StabilityTag tag = StabilityTag::Nonhyperbolic;
  double max_real = 0.0;
};

inline Eigen::MatrixXd zd_jacobian(const DynamicsSpec& spec, const RelativeScores& z,
                                   double fd_step = 1e-6) {
  spec.validate();
  const int d = spec.game->reduced_dim();
  Eigen::MatrixXd J(d, d);
  RelativeScores zp = z, zm = z;
  int col = 0;
  for (std::size_t k = 0; k < z.size(); ++k)
    for (std::size_t mu = 0; mu < z[k].size(); ++mu) {
      zp[k][mu] += fd_step;
      zm[k][mu] -= fd_step;
      RelativeScores fp = zd_field(spec, zp), fm = zd_field(spec, zm);
      int row = 0;
      for (std::size_t kk = 0; kk < z.size(); ++kk)
        for (std::size_t nu = 0; nu < z[kk].size(); ++nu)
          J(row++, col) = (fp[kk][nu] - fm[kk][nu]) / (2 * fd_step);
      zp[k][mu] = z[k][mu];
      zm[k][mu] = z[k][mu];
      ++col;
    }
  return J;
}

inline RestPointClassification classify_rest_point(const DynamicsSpec& spec,
                                                   const MixedProfile& x_star,
                                                   double rest_tol = 1e-8) {
  spec.validate();
  RelativeScores z = scores_from_profile(spec, x_star);
  // Rest quality is judged on the strategy-space field: for rest points next
  // to a vertex the score residual scales like (x error)/x and would reject
  // points solved to full strategy-space accuracy.
  if (detail::inf_norm(ed_field(spec, x_star)) >= rest_tol)
    throw ArgumentError("point is not a rest point of the dynamics");
  Eigen::MatrixXd J = zd_jacobian(spec, z);
  Eigen::EigenSolver<Eigen::MatrixXd> es(J);
  RestPointClassification out;
  out.max_real = -std::numeric_limits<double>::infinity();
  double min_real = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    std::complex<double> ev = es.eigenvalues()(i);
    out.eigenvalues.push_back(ev);
    out.max_real = std::max(out.max_real, ev.real());
    min_real = std::min(min_real, ev.real());
  }
  if (out.max_real < -1e-9)
    out.tag = StabilityTag::Stable;
  else if (out.max_real > 1e-9)
    out.tag = StabilityTag::Unstable;
  else
    out.tag = StabilityTag::Nonhyperbolic;
  return out;
}

// Fit of an observed relative-score coordinate against the closed-form escape
// envelope z0 e^{|T|t} + du (e^{|T|t}-1)/|T| (with the t limit at T = 0).
struct RateFit {
  bool valid = false;
  double relative_error = std::numeric_limits<double>::infinity();
  double slope = 0.0;  // OLS slope of z(t), meaningful at T = 0
};

inline RateFit rate_check(const DynamicsSpec& spec, const Trajectory& traj, int player = 0,
                          int coord = 0) {
  spec.validate();
  if (spec.T > 0) throw ArgumentError("escape-rate check applies to T <= 0 only");
  if (traj.scores.empty()) throw ArgumentError("rate check needs a score-space trajectory");
  RateFit fit;
  if (traj.status != TrajectoryStatus::VertexConverged &&
      std::fabs(traj.scores.back()[static_cast<std::size_t>(player)]
                                  [static_cast<std::size_t>(coord)]) < 10.0)
    return fit;  // not escaping to a vertex: report invalid
  fit.valid = true;

  // limit payoff gap at the vertex the trajectory approaches
  const MixedProfile& xq = traj.states.back();
  MixedProfile vertex(xq.size());
  for (std::size_t k = 0; k < xq.size(); ++k) {
    vertex[k].assign(xq[k].size(), 0.0);
    vertex[k][static_cast<std::size_t>(std::max_element(xq[k].begin(), xq[k].end()) -
                                       xq[k].begin())] = 1.0;
  }
  std::vector<double> u = spec.game->payoff_vector(vertex, player);
  double du = u[static_cast<std::size_t>(coord) + 1] - u[0];
  double z0 = traj.scores.front()[static_cast<std::size_t>(player)][static_cast<std::size_t>(coord)];
  const double aT = std::fabs(spec.T);

  double num = 0, den = 0, st = 0, sz = 0, stt = 0, stz = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    double t = traj.times[i];
    double z = traj.scores[i][static_cast<std::size_t>(player)][static_cast<std::size_t>(coord)];
    if (std::fabs(z) >= kScoreCap - 1.0) break;  // past the cap the record is clipped
    double pred = (aT > 0) ? z0 * std::exp(aT * t) + du * (std::exp(aT * t) - 1.0) / aT
                           : z0 + du * t;
    num += (z - pred) * (z - pred);
    den += pred * pred;
    st += t;
    sz += z;
    stt += t * t;
    stz += t * z;
    ++n;
  }
  if (n >= 2) {
    fit.relative_error = std::sqrt(num / std::max(den, 1e-300));
    double dn = static_cast<double>(n);
    fit.slope = (dn * stz - st * sz) / (dn * stt - st * st);
  }
  return fit;
}

}  // namespace entrodyn

#endif  // ENTRODYN_DYNAMICS_HPP
