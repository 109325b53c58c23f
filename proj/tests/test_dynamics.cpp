#include <doctest.h>

#include <cmath>
#include <vector>

#include "entrodyn/dynamics.hpp"
#include "entrodyn/equilibria.hpp"
#include "entrodyn/rng.hpp"

using namespace entrodyn;

namespace {

FiniteGame coordination() { return FiniteGame({2, 2}, {{1, 0, 0, 1}, {1, 0, 0, 1}}); }
FiniteGame matching_pennies() {
  return FiniteGame({2, 2}, {{1, -1, -1, 1}, {-1, 1, 1, -1}});
}
FiniteGame zero_game() { return FiniteGame({2, 2}, {{0, 0, 0, 0}, {0, 0, 0, 0}}); }

MixedProfile random_interior_profile(const FiniteGame& g, RngStream& rs) {
  MixedProfile x(static_cast<std::size_t>(g.num_players()));
  for (int k = 0; k < g.num_players(); ++k) {
    double s = 0;
    x[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(g.actions(k)));
    for (auto& v : x[static_cast<std::size_t>(k)]) {
      v = rs.next_uniform(0.05, 1.0);
      s += v;
    }
    for (auto& v : x[static_cast<std::size_t>(k)]) v /= s;
  }
  return x;
}

double field_inf_norm(const MixedProfile& f) {
  double m = 0;
  for (const auto& row : f)
    for (double v : row) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace

TEST_CASE("score dynamics in relative coordinates: decay and temperature zero") {
  FiniteGame g({2}, {{0.0, 0.0}});  // single player, zero payoffs
  EntropyModel gibbs = EntropyModel::gibbs();
  DynamicsSpec spec{&g, gibbs, 1.0, {}};
  auto dz = zd_field(spec, {{3.0}});
  CHECK(dz[0][0] == doctest::Approx(-3.0));

  FiniteGame h({2}, {{0.0, 1.0}});
  DynamicsSpec spec0{&h, gibbs, 0.0, {}};
  auto dz0 = zd_field(spec0, {{-2.0}});
  CHECK(dz0[0][0] == doctest::Approx(1.0));  // payoff gap exactly, no decay
}

TEST_CASE("score dynamics vanish at a solved equilibrium") {
  FiniteGame g = coordination();
  EntropyModel gibbs = EntropyModel::gibbs();
  double T = 0.4;
  DynamicsSpec spec{&g, gibbs, T, {}};
  QrePoint q = qre_solve(g, gibbs, 1.0 / T, uniform_profile(g));
  auto z = scores_from_profile(spec, q.x);
  auto dz = zd_field(spec, z);
  for (const auto& row : dz)
    for (double v : row) CHECK(std::fabs(v) < 1e-8);
}

TEST_CASE("entropy-driven field: replicator closed forms") {
  EntropyModel gibbs = EntropyModel::gibbs();
  // single player, u = (1, 0), T = 0, x = (1/2, 1/2): dx = (1/4, -1/4)
  FiniteGame g({2}, {{1.0, 0.0}});
  DynamicsSpec spec{&g, gibbs, 0.0, {}};
  auto f = ed_field(spec, {{0.5, 0.5}});
  CHECK(f[0][0] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(f[0][1] == doctest::Approx(-0.25).epsilon(1e-10));

  // barycenter of matching pennies at T = 0: hand formula x_a(u_a - ubar)
  FiniteGame mp = matching_pennies();
  DynamicsSpec smp{&mp, gibbs, 0.0, {}};
  MixedProfile x{{0.5, 0.5}, {0.5, 0.5}};
  auto fm = ed_field(smp, x);
  for (int k = 0; k < 2; ++k) {
    auto u = mp.payoff_vector(x, k);
    double ubar = 0.5 * (u[0] + u[1]);
    for (int a = 0; a < 2; ++a)
      CHECK(fm[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] ==
            doctest::Approx(0.5 * (u[static_cast<std::size_t>(a)] - ubar)).epsilon(1e-10));
  }
}

TEST_CASE("zero-payoff game: uniform point is a rest point for every model") {
  FiniteGame g = zero_game();
  for (const auto& m : {EntropyModel::gibbs(), EntropyModel::log_entropy(),
                        EntropyModel::tsallis(0.5), EntropyModel::renyi(0.5)}) {
    for (double T : {-1.0, 0.0, 0.7}) {
      DynamicsSpec spec{&g, m, T, {}};
      auto f = ed_field(spec, uniform_profile(g));
      CHECK(field_inf_norm(f) < 1e-12);
    }
  }
}

TEST_CASE("field components sum to zero per player (simplex tangency)") {
  RngStream rs(31, {0});
  FiniteGame g({2, 3}, {{1, -1, 2, 0, 4, -3}, {2, 2, -1, 0, 1, 1}});
  for (const auto& m : {EntropyModel::gibbs(), EntropyModel::log_entropy(),
                        EntropyModel::tsallis(0.5), EntropyModel::renyi(0.5)}) {
    DynamicsSpec spec{&g, m, 0.3, {}};
    for (int rep = 0; rep < 10; ++rep) {
      auto x = random_interior_profile(g, rs);
      auto f = ed_field(spec, x);
      for (const auto& row : f) {
        double s = 0;
        for (double v : row) s += v;
        CHECK(std::fabs(s) < 1e-12);
      }
    }
  }
}

TEST_CASE("temperature-adjusted replicator equals the gibbs entropy field") {
  RngStream rs(32, {0});
  FiniteGame g22 = coordination();
  FiniteGame g23({2, 3}, {{1, -1, 2, 0, 4, -3}, {2, 2, -1, 0, 1, 1}});
  EntropyModel gibbs = EntropyModel::gibbs();
  for (const FiniteGame* g : {&g22, &g23}) {
    DynamicsSpec spec{g, gibbs, 0.45, {}};
    for (int rep = 0; rep < 100; ++rep) {
      auto x = random_interior_profile(*g, rs);
      auto a = ed_field(spec, x);
      auto b = trd_field(spec, x);
      for (std::size_t k = 0; k < x.size(); ++k)
        for (std::size_t i = 0; i < x[k].size(); ++i)
          CHECK(a[k][i] == doctest::Approx(b[k][i]).epsilon(1e-12).scale(1.0));
    }
  }
  CHECK_THROWS_AS(trd_field(DynamicsSpec{&g22, gibbs, 0.1, {}}, MixedProfile{{1, 0}, {0.5, 0.5}}),
                  DomainError);
}

TEST_CASE("replicator special cases: zero temperature and uniform state") {
  FiniteGame g = coordination();
  EntropyModel gibbs = EntropyModel::gibbs();
  DynamicsSpec t0{&g, gibbs, 0.0, {}};
  DynamicsSpec t1{&g, gibbs, 5.0, {}};
  MixedProfile x{{0.3, 0.7}, {0.6, 0.4}};
  // at T = 0 only the payoff bracket remains
  auto f = trd_field(t0, x);
  for (int k = 0; k < 2; ++k) {
    auto u = g.payoff_vector(x, k);
    double ubar = x[static_cast<std::size_t>(k)][0] * u[0] + x[static_cast<std::size_t>(k)][1] * u[1];
    CHECK(f[static_cast<std::size_t>(k)][0] ==
          doctest::Approx(x[static_cast<std::size_t>(k)][0] * (u[0] - ubar)));
  }
  // at the uniform state the log terms cancel and temperature drops out
  auto fu0 = trd_field(t0, uniform_profile(g));
  auto fu1 = trd_field(t1, uniform_profile(g));
  for (int k = 0; k < 2; ++k)
    for (int a = 0; a < 2; ++a)
      CHECK(fu0[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] ==
            doctest::Approx(fu1[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)]));
}

TEST_CASE("raw score field and its closed-form solution") {
  std::vector<double> u{0.8, 0.2};
  std::vector<double> y0{1.0, -2.0};
  double T = 0.7;
  // fixed point u = T y
  std::vector<double> yfix{u[0] / T, u[1] / T};
  auto df = score_field(T, yfix, u);
  CHECK(std::fabs(df[0]) < 1e-15);
  CHECK(std::fabs(df[1]) < 1e-15);

  // RK4 on dy = u - T y against y(t) = y0 e^{-Tt} + u(1 - e^{-Tt})/T
  std::vector<double> y = y0;
  double dt = 0.01, t_end = 3.0;
  for (int n = 0; n < 300; ++n) {
    auto k1 = score_field(T, y, u);
    std::vector<double> y2(2), y3(2), y4(2);
    for (int i = 0; i < 2; ++i) y2[i] = y[i] + 0.5 * dt * k1[i];
    auto k2 = score_field(T, y2, u);
    for (int i = 0; i < 2; ++i) y3[i] = y[i] + 0.5 * dt * k2[i];
    auto k3 = score_field(T, y3, u);
    for (int i = 0; i < 2; ++i) y4[i] = y[i] + dt * k3[i];
    auto k4 = score_field(T, y4, u);
    for (int i = 0; i < 2; ++i) y[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  for (int i = 0; i < 2; ++i) {
    double exact = y0[i] * std::exp(-T * t_end) + u[i] * (1 - std::exp(-T * t_end)) / T;
    CHECK(std::fabs(y[i] - exact) < 1e-8);
  }
  // T = 0: linear growth
  auto lin = score_field(0.0, y0, u);
  CHECK(lin[0] == doctest::Approx(u[0]));
}

TEST_CASE("integration: linear decay of scores in the zero game") {
  FiniteGame g = zero_game();
  EntropyModel gibbs = EntropyModel::gibbs();
  DynamicsSpec spec{&g, gibbs, 1.0, {}};
  MixedProfile x0{{0.8, 0.2}, {0.35, 0.65}};
  auto z0 = scores_from_profile(spec, x0);
  Trajectory traj = integrate(spec, x0, 5.0, 0.01, StateSpace::Score);
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(traj.scores[i][k][0] ==
            doctest::Approx(z0[k][0] * std::exp(-traj.times[i])).epsilon(1e-8).scale(1.0));
}

TEST_CASE("integration: potential-game trajectories settle on a solved equilibrium") {
  FiniteGame g = coordination();
  EntropyModel gibbs = EntropyModel::gibbs();
  double T = 0.6;
  DynamicsSpec spec{&g, gibbs, T, {}};
  MixedProfile x0{{0.61, 0.39}, {0.58, 0.42}};
  // the slow eigenvalue at T = 0.6 is about -0.1, so give the trajectory
  // enough horizon to push the field norm under the rest tolerance
  Trajectory traj = integrate(spec, x0, 400.0, 0.01, StateSpace::Score);
  CHECK(traj.status == TrajectoryStatus::RestPoint);
  QrePoint q = qre_solve(g, gibbs, 1.0 / T, traj.states.back());
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t a = 0; a < 2; ++a)
      CHECK(traj.states.back()[k][a] == doctest::Approx(q.x[k][a]).epsilon(1e-6));
}

TEST_CASE("score-space and strategy-space integration agree") {
  RngStream rs(33, {0});
  std::vector<std::vector<double>> payoffs(2, std::vector<double>(4));
  for (auto& t : payoffs)
    for (auto& v : t) v = rs.next_uniform(-1, 1);
  FiniteGame g({2, 2}, payoffs);
  EntropyModel gibbs = EntropyModel::gibbs();
  DynamicsSpec spec{&g, gibbs, 0.5, {}};
  MixedProfile x0{{0.3, 0.7}, {0.6, 0.4}};
  Trajectory a = integrate(spec, x0, 10.0, 0.01, StateSpace::Score, 0.0);
  Trajectory b = integrate(spec, x0, 10.0, 0.01, StateSpace::Strategy, 0.0);
  REQUIRE(a.times.size() == b.times.size());
  for (std::size_t i = 0; i < a.times.size(); ++i)
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(a.states[i][k][0] == doctest::Approx(b.states[i][k][0]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("strategy-space integration reports boundary escapes") {
  FiniteGame g = coordination();
  EntropyModel gibbs = EntropyModel::gibbs();
  DynamicsSpec spec{&g, gibbs, -0.5, {}};  // negative temperature pushes to vertices
  MixedProfile x0{{0.95, 0.05}, {0.95, 0.05}};
  CHECK_THROWS_AS(integrate(spec, x0, 50.0, 0.01, StateSpace::Strategy), IntegrationError);
}

TEST_CASE("free energy: definition, stationarity, and descent") {
  FiniteGame g = coordination();
  EntropyModel gibbs = EntropyModel::gibbs();
  PotentialCertificate cert = fit_potential(g);
  MixedProfile x{{0.3, 0.7}, {0.6, 0.4}};

  DynamicsSpec t0{&g, gibbs, 0.0, {}};
  CHECK(free_energy(t0, cert, x) ==
        doctest::Approx(-g.multilinear_value(cert.potential_values, x)));

  double T = 0.4;
  DynamicsSpec spec{&g, gibbs, T, {}};
  Trajectory traj = integrate(spec, x, 100.0, 0.01, StateSpace::Score);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& state : traj.states) {
    double F = free_energy(spec, cert, state);
    CHECK(F <= prev + 1e-8);
    prev = F;
  }
  // stationarity at the endpoint: forward difference along the field
  MixedProfile xe = traj.states.back();
  auto f = ed_field(spec, xe);
  double h = 1e-5;
  MixedProfile xp = xe;
  for (std::size_t k = 0; k < xe.size(); ++k)
    for (std::size_t a = 0; a < xe[k].size(); ++a) xp[k][a] += h * f[k][a];
  CHECK(std::fabs(free_energy(spec, cert, xp) - free_energy(spec, cert, xe)) / h <= 1e-8);

  FiniteGame mp = matching_pennies();
  DynamicsSpec smp{&mp, gibbs, 0.4, {}};
  CHECK_THROWS_AS(free_energy(smp, fit_potential(mp), uniform_profile(mp)), ArgumentError);
}

TEST_CASE("Lyapunov descent holds for every kernel on a potential game") {
  FiniteGame g = coordination();
  PotentialCertificate cert = fit_potential(g);
  for (const auto& m : {EntropyModel::gibbs(), EntropyModel::log_entropy(),
                        EntropyModel::tsallis(0.5)}) {
    DynamicsSpec spec{&g, m, 0.3, {}};
    Trajectory traj = integrate(spec, MixedProfile{{0.7, 0.3}, {0.35, 0.65}}, 40.0, 0.01,
                                StateSpace::Score);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& state : traj.states) {
      double F = free_energy(spec, cert, state);
      CHECK(F <= prev + 1e-8);
      prev = F;
    }
  }
}

TEST_CASE("divergence of the score dynamics is -(reduced dim) * T") {
  RngStream rs(34, {0});
  EntropyModel gibbs = EntropyModel::gibbs();
  FiniteGame g22 = coordination();
  FiniteGame g23({2, 3}, {{1, -1, 2, 0, 4, -3}, {2, 2, -1, 0, 1, 1}});
  FiniteGame g222({2, 2, 2}, {{1, 0, 0, 1, 0, 1, 1, 0},
                              {0, 1, 1, 0, 1, 0, 0, 1},
                              {1, 1, 0, 0, 0, 0, 1, 1}});
  for (const FiniteGame* g : {&g22, &g23, &g222}) {
    for (double T : {-1.0, -0.1, 0.0, 0.1, 1.0}) {
      DynamicsSpec spec{g, gibbs, T, {}};
      for (int rep = 0; rep < 17; ++rep) {
        RelativeScores z(static_cast<std::size_t>(g->num_players()));
        for (int k = 0; k < g->num_players(); ++k)
          for (int mu = 0; mu < g->actions(k) - 1; ++mu)
            z[static_cast<std::size_t>(k)].push_back(rs.next_uniform(-3, 3));
        CHECK(zd_divergence(spec, z) ==
              doctest::Approx(-g->reduced_dim() * T).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("rest point classification at the barycenter of the zero game") {
  FiniteGame g = zero_game();
  EntropyModel gibbs = EntropyModel::gibbs();
  {
    DynamicsSpec spec{&g, gibbs, 0.6, {}};
    auto cls = classify_rest_point(spec, uniform_profile(g));
    CHECK(cls.tag == StabilityTag::Stable);
    for (const auto& ev : cls.eigenvalues) {
      CHECK(ev.real() == doctest::Approx(-0.6).epsilon(1e-5));
      CHECK(std::fabs(ev.imag()) < 1e-6);
    }
  }
  {
    DynamicsSpec spec{&g, gibbs, -0.6, {}};
    auto cls = classify_rest_point(spec, uniform_profile(g));
    CHECK(cls.tag == StabilityTag::Unstable);
  }
  {
    FiniteGame coord = coordination();
    CHECK_THROWS_AS(classify_rest_point(DynamicsSpec{&coord, gibbs, 0.6, {}},
                                        MixedProfile{{0.9, 0.1}, {0.9, 0.1}}),
                    ArgumentError);
  }
}

TEST_CASE("equilibria near strict vertices are stable at small positive temperature") {
  FiniteGame g = coordination();
  EntropyModel gibbs = EntropyModel::gibbs();
  double T = 0.05;
  DynamicsSpec spec{&g, gibbs, T, {}};
  QrePoint q = qre_solve(g, gibbs, 1.0 / T, MixedProfile{{0.95, 0.05}, {0.95, 0.05}});
  CHECK(q.x[0][0] > 0.99);
  auto cls = classify_rest_point(spec, q.x);
  CHECK(cls.tag == StabilityTag::Stable);
}

TEST_CASE("time-reversal duality of rest points") {
  FiniteGame g = coordination();
  std::vector<std::vector<double>> neg(2, std::vector<double>(4));
  for (int k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 4; ++i) neg[static_cast<std::size_t>(k)][i] = -g.payoff(k, i);
  FiniteGame gn({2, 2}, neg);
  EntropyModel gibbs = EntropyModel::gibbs();
  double T = 0.7;
  QrePoint a = qre_solve(g, gibbs, 1.0 / T, uniform_profile(g));
  // rest point of (u, T) must be a rest point of (-u, -T)
  DynamicsSpec dual{&gn, gibbs, -T, {}};
  auto z = scores_from_profile(dual, a.x);
  auto f = zd_field(dual, z);
  for (const auto& row : f)
    for (double v : row) CHECK(std::fabs(v) < 1e-8);
}

TEST_CASE("positive temperature confines scores to the payoff band") {
  FiniteGame g = matching_pennies();
  EntropyModel gibbs = EntropyModel::gibbs();
  double T = 0.5;
  DynamicsSpec spec{&g, gibbs, T, {}};
  MixedProfile x0{{0.9, 0.1}, {0.15, 0.85}};
  Trajectory traj = integrate(spec, x0, 60.0, 0.01, StateSpace::Score, 0.0, 100);
  // |delta u| <= 2 for these payoffs, so the limit band is |z| <= 2/T
  double M = 2.0;
  for (std::size_t i = traj.times.size() / 2; i < traj.times.size(); ++i)
    for (const auto& row : traj.scores[i])
      for (double v : row) CHECK(std::fabs(v) <= M / T + 1e-6);
}

TEST_CASE("per-player rates scale the field blockwise") {
  FiniteGame g = coordination();
  EntropyModel gibbs = EntropyModel::gibbs();
  DynamicsSpec base{&g, gibbs, 0.3, {}};
  DynamicsSpec scaled{&g, gibbs, 0.3, {2.0, 0.5}};
  MixedProfile x{{0.4, 0.6}, {0.7, 0.3}};
  auto f0 = ed_field(base, x);
  auto f1 = ed_field(scaled, x);
  for (std::size_t a = 0; a < 2; ++a) {
    CHECK(f1[0][a] == doctest::Approx(2.0 * f0[0][a]));
    CHECK(f1[1][a] == doctest::Approx(0.5 * f0[1][a]));
  }
  CHECK_THROWS_AS(ed_field(DynamicsSpec{&g, gibbs, 0.3, {1.0}}, x), ArgumentError);
  CHECK_THROWS_AS(ed_field(DynamicsSpec{&g, gibbs, 0.3, {1.0, -1.0}}, x), ArgumentError);
}

TEST_CASE("escape rates toward a dominant vertex") {
  // single player, u = (0, 1): action 1 dominates the benchmark by exactly 1
  FiniteGame g({2}, {{0.0, 1.0}});
  EntropyModel gibbs = EntropyModel::gibbs();
  {
    DynamicsSpec spec{&g, gibbs, 0.0, {}};
    MixedProfile x0{{0.5, 0.5}};
    Trajectory traj = integrate(spec, x0, 20.0, 0.01, StateSpace::Score, 0.0);
    RateFit fit = rate_check(spec, traj);
    CHECK(fit.valid);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.01));
    CHECK(fit.relative_error < 1e-6);

    // x_0(t) approaches 1 like 1 - e^{-O(t)}: log(1 - x0) is eventually linear
    double sxx = 0, sx = 0, sy = 0, sxy = 0, syy = 0;
    int n = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      double t = traj.times[i];
      double x_win = traj.states[i][0][1];
      if (t < 5.0 || x_win >= 1.0 - 1e-12) continue;
      double lv = std::log(1.0 - x_win);
      sx += t;
      sy += lv;
      sxx += t * t;
      sxy += t * lv;
      syy += lv * lv;
      ++n;
    }
    REQUIRE(n > 100);
    double r = (n * sxy - sx * sy) /
               std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    CHECK(r * r > 0.999);
  }
  {
    DynamicsSpec spec{&g, gibbs, -0.1, {}};
    MixedProfile x0{{0.5, 0.5}};
    Trajectory traj = integrate(spec, x0, 20.0, 0.01, StateSpace::Score, 0.0);
    RateFit fit = rate_check(spec, traj);
    CHECK(fit.valid);
    CHECK(fit.relative_error < 0.05);
  }
  {
    // a trajectory that is not escaping is flagged invalid
    FiniteGame zg = zero_game();
    DynamicsSpec spec{&zg, gibbs, 0.0, {}};
    Trajectory traj = integrate(spec, uniform_profile(zg), 5.0, 0.01, StateSpace::Score, 0.0);
    RateFit fit = rate_check(spec, traj);
    CHECK_FALSE(fit.valid);
    DynamicsSpec warm{&g, gibbs, 0.3, {}};
    CHECK_THROWS_AS(rate_check(warm, traj), ArgumentError);
  }
}
