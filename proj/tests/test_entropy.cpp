#include <doctest.h>

#include <cmath>
#include <vector>

#include "entrodyn/entropy.hpp"
#include "entrodyn/rng.hpp"

using namespace entrodyn;

namespace {

std::vector<EntropyModel> all_models() {
  return {EntropyModel::gibbs(), EntropyModel::log_entropy(), EntropyModel::tsallis(0.5),
          EntropyModel::renyi(0.5)};
}

std::vector<double> random_scores(RngStream& rs, std::size_t n, double scale) {
  std::vector<double> y(n);
  for (auto& v : y) v = rs.next_uniform(-scale, scale);
  return y;
}

std::vector<double> random_interior(RngStream& rs, std::size_t n) {
  std::vector<double> x(n);
  double s = 0;
  for (auto& v : x) {
    v = rs.next_uniform(0.05, 1.0);
    s += v;
  }
  for (auto& v : x) v /= s;
  return x;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(EntropyModel::tsallis(0.0), ArgumentError);
  CHECK_THROWS_AS(EntropyModel::tsallis(1.5), ArgumentError);
  CHECK_THROWS_AS(EntropyModel::renyi(-0.2), ArgumentError);
  CHECK(EntropyModel::tsallis(1.0).kind() == EntropyKind::Gibbs);
}

TEST_CASE("kernel curvature and boundary behavior (sampled)") {
  for (const auto& m : {EntropyModel::gibbs(), EntropyModel::log_entropy(),
                        EntropyModel::tsallis(0.5), EntropyModel::tsallis(0.9)}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double xi : {1e-3, 1e-6, 1e-9}) {
      CHECK(m.theta_pp(xi) > 0);
      CHECK(m.theta_p(xi) < prev);  // decreasing toward -inf
      prev = m.theta_p(xi);
    }
    CHECK(prev < -10);
    // xi * theta''(xi) >= m on a sample
    for (double xi = 0.01; xi < 1.0; xi += 0.01)
      CHECK(xi * m.theta_pp(xi) >= m.kernel_bound() - 1e-12);
  }
}

TEST_CASE("regularity flags: the log entropy is the singular one") {
  CHECK(EntropyModel::gibbs().regular());
  CHECK(EntropyModel::tsallis(0.5).regular());
  CHECK(EntropyModel::renyi(0.5).regular());
  CHECK_FALSE(EntropyModel::log_entropy().regular());
  // regular kernels: theta'/theta'' -> 0 at the boundary; log kernel does not
  for (double xi : {1e-3, 1e-6, 1e-9}) {
    CHECK(std::fabs(EntropyModel::gibbs().theta_p(xi) / EntropyModel::gibbs().theta_pp(xi)) <
          0.1);
    CHECK(std::fabs(EntropyModel::log_entropy().theta_p(xi) /
                    EntropyModel::log_entropy().theta_pp(xi)) == doctest::Approx(xi));
  }
}

TEST_CASE("gibbs map closed forms") {
  auto u = gibbs_map(std::vector<double>{0, 0, 0});
  for (double v : u) CHECK(v == doctest::Approx(1.0 / 3));
  auto x = gibbs_map(std::vector<double>{std::log(2.0), 0.0});
  CHECK(x[0] == doctest::Approx(2.0 / 3));
  CHECK(x[1] == doctest::Approx(1.0 / 3));
  auto c = gibbs_map(std::vector<double>{7.5, 7.5, 7.5, 7.5});
  for (double v : c) CHECK(v == doctest::Approx(0.25));
  // overflow safety far beyond the advertised band
  auto big = gibbs_map(std::vector<double>{1e4, 0.0, -1e4});
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(big[2]));
}

TEST_CASE("choice map: gibbs agrees with the softmax closed form") {
  RngStream rs(11, {0});
  for (int rep = 0; rep < 20; ++rep) {
    auto y = random_scores(rs, 4, 30.0);
    auto a = choice_map(EntropyModel::gibbs(), y);
    auto b = gibbs_map(y);
    for (std::size_t i = 0; i < y.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("choice map: constant scores give the uniform point for every model") {
  for (const auto& m : all_models()) {
    auto x = choice_map(m, std::vector<double>{3.0, 3.0, 3.0});
    for (double v : x) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-10));
  }
}

TEST_CASE("choice map: tsallis near q = 1 approaches the gibbs result") {
  std::vector<double> y{1.0, 0.0};
  auto t = choice_map(EntropyModel::tsallis(0.999), y);
  auto g = choice_map(EntropyModel::gibbs(), y);
  CHECK(std::fabs(t[0] - g[0]) < 1e-2);
}

TEST_CASE("choice map shift invariance") {
  RngStream rs(12, {0});
  for (const auto& m : all_models()) {
    auto y = random_scores(rs, 3, 5.0);
    auto ys = y;
    for (double& v : ys) v += 17.25;
    auto a = choice_map(m, y);
    auto b = choice_map(m, ys);
    for (std::size_t i = 0; i < y.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
  }
}

TEST_CASE("choice map is the unique entropy-regularized maximizer") {
  // value at the returned point beats dense simplex samples
  RngStream rs(13, {0});
  for (const auto& m : all_models()) {
    auto y = random_scores(rs, 3, 2.0);
    auto xstar = choice_map(m, y);
    double best = 0;
    for (std::size_t i = 0; i < y.size(); ++i) best += xstar[i] * y[i];
    best -= m.value(xstar);
    for (int rep = 0; rep < 500; ++rep) {
      auto x = random_interior(rs, 3);
      double val = 0;
      for (std::size_t i = 0; i < y.size(); ++i) val += x[i] * y[i];
      val -= m.value(x);
      CHECK(val <= best + 1e-9);
    }
  }
}

TEST_CASE("decomposable fast path equals the variational path") {
  RngStream rs(14, {0});
  for (const auto& m : {EntropyModel::gibbs(), EntropyModel::tsallis(0.5)}) {
    for (int rep = 0; rep < 50; ++rep) {
      auto y = random_scores(rs, 3, 8.0);
      auto fast = choice_map(m, y);
      auto slow = choice_map_variational(m, y);
      for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-8));
    }
  }
}

TEST_CASE("reduced gradient closed forms and boundary errors") {
  auto gibbs = EntropyModel::gibbs();
  auto z0 = reduced_gradient(gibbs, std::vector<double>{0.5});
  CHECK(z0[0] == doctest::Approx(0.0));
  auto z1 = reduced_gradient(gibbs, std::vector<double>{2.0 / 3});
  CHECK(z1[0] == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(reduced_gradient(gibbs, std::vector<double>{1.0}), DomainError);
  CHECK_THROWS_AS(reduced_gradient(gibbs, std::vector<double>{0.0}), DomainError);
}

TEST_CASE("choice map and reduced gradient are mutually inverse") {
  RngStream rs(15, {0});
  for (const auto& m : all_models()) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> z(2);
      for (auto& v : z) v = rs.next_uniform(-20.0, 20.0);
      auto x = choice_map_reduced(m, z);
      std::vector<double> w(x.begin() + 1, x.end());
      auto z_back = reduced_gradient(m, w);
      for (std::size_t i = 0; i < z.size(); ++i)
        CHECK(z_back[i] == doctest::Approx(z[i]).epsilon(1e-9).scale(std::max(1.0, std::fabs(z[i]))));
      // and the other direction from an interior point
      auto w2 = random_interior(rs, 3);
      std::vector<double> wr(w2.begin() + 1, w2.end());
      auto zz = reduced_gradient(m, wr);
      auto x2 = choice_map_reduced(m, zz);
      for (std::size_t i = 0; i < w2.size(); ++i)
        CHECK(x2[i] == doctest::Approx(w2[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("reduced Hessian closed forms") {
  auto gibbs = EntropyModel::gibbs();
  // uniform on 3 actions: theta''(1/3) = 3 everywhere
  Eigen::MatrixXd H = hessian_reduced(gibbs, std::vector<double>{1.0 / 3, 1.0 / 3});
  CHECK(H(0, 0) == doctest::Approx(6.0));
  CHECK(H(0, 1) == doctest::Approx(3.0));
  CHECK(H(1, 1) == doctest::Approx(6.0));
  // 2-action case collapses to a scalar
  Eigen::MatrixXd H2 = hessian_reduced(gibbs, std::vector<double>{0.25});
  CHECK(H2(0, 0) == doctest::Approx(gibbs.theta_pp(0.25) + gibbs.theta_pp(0.75)));
}

TEST_CASE("reduced Hessian is positive definite at random interior points") {
  RngStream rs(16, {0});
  for (const auto& m : all_models()) {
    for (int rep = 0; rep < 25; ++rep) {
      auto x = random_interior(rs, 4);
      std::vector<double> w(x.begin() + 1, x.end());
      Eigen::MatrixXd H = hessian_reduced(m, w);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
      CHECK(es.eigenvalues().minCoeff() > 0);
    }
  }
}

TEST_CASE("rank-one inverse formula") {
  // equal weights (1,1,1): inverse is 2/3 on the diagonal, -1/3 off
  Eigen::MatrixXd A = diag_plus_rank_one_inverse({1.0, 1.0, 1.0});
  CHECK(A(0, 0) == doctest::Approx(2.0 / 3));
  CHECK(A(0, 1) == doctest::Approx(-1.0 / 3));
  // scalar case: 1/(q0 + q1)
  Eigen::MatrixXd S = diag_plus_rank_one_inverse({2.0, 5.0});
  CHECK(S(0, 0) == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("closed-form Hessian inverse matches dense inversion") {
  RngStream rs(17, {0});
  for (const auto& m : {EntropyModel::gibbs(), EntropyModel::log_entropy(),
                        EntropyModel::tsallis(0.5)}) {
    for (int rep = 0; rep < 20; ++rep) {
      auto x = random_interior(rs, 5);
      std::vector<double> w(x.begin() + 1, x.end());
      Eigen::MatrixXd A = hessian_inverse_reduced(m, w);
      Eigen::MatrixXd D = hessian_reduced(m, w).inverse();
      CHECK((A - D).cwiseAbs().maxCoeff() < 1e-12 * D.cwiseAbs().maxCoeff());
      Eigen::MatrixXd I = A * hessian_reduced(m, w);
      CHECK((I - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("free entropy closed forms and shift rule") {
  auto gibbs = EntropyModel::gibbs();
  CHECK(free_entropy(gibbs, std::vector<double>{0, 0, 0}) == doctest::Approx(std::log(3.0)));
  CHECK(free_entropy(gibbs, std::vector<double>{5, 0}) ==
        doctest::Approx(std::log(1 + std::exp(5.0))));
  RngStream rs(18, {0});
  for (const auto& m : all_models()) {
    auto y = random_scores(rs, 3, 4.0);
    auto ys = y;
    for (double& v : ys) v += 2.5;
    CHECK(free_entropy(m, ys) == doctest::Approx(free_entropy(m, y) + 2.5).epsilon(1e-9));
  }
}

TEST_CASE("conjugate duality: gradient of the free entropy is the choice map") {
  RngStream rs(19, {0});
  const double step = 1e-5;
  for (const auto& m : all_models()) {
    for (int rep = 0; rep < 10; ++rep) {
      auto y = random_scores(rs, 3, 3.0);
      auto x = choice_map(m, y);
      for (std::size_t i = 0; i < y.size(); ++i) {
        auto yp = y, ym = y;
        yp[i] += step;
        ym[i] -= step;
        double g = (free_entropy(m, yp) - free_entropy(m, ym)) / (2 * step);
        CHECK(g == doctest::Approx(x[i]).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("gibbs choice frequencies match argmax over perturbed scores") {
  // random-utility view: argmax of y + Gumbel(eps) noise has gibbs(y/eps) law
  const double eps = 0.5;
  std::vector<double> y{0.4, 0.0, -0.3};
  auto probs = gibbs_map(std::vector<double>{y[0] / eps, y[1] / eps, y[2] / eps});
  const int draws = 100000;
  std::vector<int> counts(3, 0);
  RngStream rs(20, {0});
  for (int d = 0; d < draws; ++d) {
    int best = 0;
    double bv = -1e300;
    for (int i = 0; i < 3; ++i) {
      double v = y[static_cast<std::size_t>(i)] + rs.next_gumbel(eps);
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    ++counts[static_cast<std::size_t>(best)];
  }
  for (int i = 0; i < 3; ++i) {
    double p = probs[static_cast<std::size_t>(i)];
    double freq = static_cast<double>(counts[static_cast<std::size_t>(i)]) / draws;
    double se = std::sqrt(p * (1 - p) / draws);
    CHECK(std::fabs(freq - p) < 4 * se);
  }
}

TEST_CASE("non-finite scores are rejected") {
  CHECK_THROWS_AS(choice_map(EntropyModel::gibbs(),
                             std::vector<double>{1.0, std::numeric_limits<double>::infinity()}),
                  ArgumentError);
  CHECK_THROWS_AS(gibbs_map(std::vector<double>{std::nan("")}), ArgumentError);
}
