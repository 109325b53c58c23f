#ifndef ENTRODYN_ENTROPY_HPP
#define ENTRODYN_ENTROPY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entrodyn/errors.hpp"

namespace entrodyn {

enum class EntropyKind { Gibbs, Log, Tsallis, Renyi };

// A generalized entropy on the simplex together with its choice map. The
// Gibbs, log and Tsallis entropies are decomposable with a scalar Legendre
// kernel theta; the Renyi entropy goes through the general (dense-Hessian)
// path. Models are immutable evaluator bundles, safe for concurrent use.
class EntropyModel {
 public:
  static EntropyModel gibbs() { return EntropyModel(EntropyKind::Gibbs, 1.0); }
  static EntropyModel log_entropy() { return EntropyModel(EntropyKind::Log, 1.0); }
  static EntropyModel tsallis(double q) {
    if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("tsallis parameter must lie in (0,1]");
    if (q == 1.0) return gibbs();  // Tsallis degenerates to Gibbs at q = 1
    return EntropyModel(EntropyKind::Tsallis, q);
  }
  static EntropyModel renyi(double q) {
    if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("renyi parameter must lie in (0,1]");
    if (q == 1.0) return gibbs();
    return EntropyModel(EntropyKind::Renyi, q);
  }

  EntropyKind kind() const { return kind_; }
  double q() const { return q_; }
  bool decomposable() const { return kind_ != EntropyKind::Renyi; }
  // The log-entropy is +infinity on every proper subface, hence not regular.
  bool regular() const { return kind_ != EntropyKind::Log; }

  // Lower bound m with xi * theta''(xi) >= m on (0,1).
  double kernel_bound() const {
    switch (kind_) {
      case EntropyKind::Gibbs: return 1.0;
      case EntropyKind::Log: return 1.0;
      case EntropyKind::Tsallis: return q_;
      default: throw ArgumentError("kernel bound undefined for non-decomposable entropy");
    }
  }

  double theta(double xi) const {
    switch (kind_) {
      case EntropyKind::Gibbs: return xi > 0 ? xi * std::log(xi) : 0.0;
      case EntropyKind::Log: return -std::log(xi);
      case EntropyKind::Tsallis: return (xi - std::pow(xi, q_)) / (1.0 - q_);
      default: throw ArgumentError("theta undefined for non-decomposable entropy");
    }
  }

  double theta_p(double xi) const {
    switch (kind_) {
      case EntropyKind::Gibbs: return 1.0 + std::log(xi);
      case EntropyKind::Log: return -1.0 / xi;
      case EntropyKind::Tsallis: return (1.0 - q_ * std::pow(xi, q_ - 1.0)) / (1.0 - q_);
      default: throw ArgumentError("theta' undefined for non-decomposable entropy");
    }
  }

  double theta_pp(double xi) const {
    switch (kind_) {
      case EntropyKind::Gibbs: return 1.0 / xi;
      case EntropyKind::Log: return 1.0 / (xi * xi);
      case EntropyKind::Tsallis: return q_ * std::pow(xi, q_ - 2.0);
      default: throw ArgumentError("theta'' undefined for non-decomposable entropy");
    }
  }

  // Inverse of theta' (strictly increasing on (0, +inf)).
  double theta_p_inv(double v) const {
    switch (kind_) {
      case EntropyKind::Gibbs: return std::exp(v - 1.0);
      case EntropyKind::Log:
        if (!(v < 0)) throw DomainError("theta' of the log kernel is negative");
        return -1.0 / v;
      case EntropyKind::Tsallis: {
        double t = (1.0 - (1.0 - q_) * v) / q_;
        if (!(t > 0)) throw DomainError("value outside the range of theta'");
        return std::pow(t, 1.0 / (q_ - 1.0));
      }
      default: throw ArgumentError("theta' inverse undefined for non-decomposable entropy");
    }
  }

  // Supremum of theta' over (0, +inf); +inf when unbounded.
  double theta_p_sup() const {
    switch (kind_) {
      case EntropyKind::Gibbs: return std::numeric_limits<double>::infinity();
      case EntropyKind::Log: return 0.0;
      case EntropyKind::Tsallis: return 1.0 / (1.0 - q_);
      default: throw ArgumentError("non-decomposable entropy");
    }
  }

  // h(x) on one simplex (full coordinates).
  double value(std::span<const double> x) const {
    if (kind_ == EntropyKind::Renyi) {
      double s = 0;
      for (double v : x) s += std::pow(v, q_);
      return std::log(s) / (q_ - 1.0);
    }
    double s = 0;
    for (double v : x) s += theta(v);
    return s;
  }

  // Full-coordinate gradient of h at interior x.
  std::vector<double> gradient(std::span<const double> x) const {
    std::vector<double> g(x.size());
    if (kind_ == EntropyKind::Renyi) {
      double s = 0;
      for (double v : x) s += std::pow(v, q_);
      for (std::size_t i = 0; i < x.size(); ++i)
        g[i] = q_ / (q_ - 1.0) * std::pow(x[i], q_ - 1.0) / s;
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = theta_p(x[i]);
    }
    return g;
  }

  // Full-coordinate Hessian of h at interior x (dense; diagonal for kernels).
  Eigen::MatrixXd hessian_full(std::span<const double> x) const {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    if (kind_ == EntropyKind::Renyi) {
      double s = 0;
      for (double v : x) s += std::pow(v, q_);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          double t = -q_ * q_ / (q_ - 1.0) * std::pow(x[i], q_ - 1.0) *
                     std::pow(x[j], q_ - 1.0) / (s * s);
          if (i == j) t += q_ * std::pow(x[i], q_ - 2.0) / s;
          H(i, j) = t;
        }
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) H(i, i) = theta_pp(x[i]);
    }
    return H;
  }

 private:
  EntropyModel(EntropyKind kind, double q) : kind_(kind), q_(q) {}
  EntropyKind kind_;
  double q_;
};

namespace detail {

inline std::vector<double> full_from_reduced(std::span<const double> w) {
  std::vector<double> x(w.size() + 1);
  double s = 0;
  for (double v : w) s += v;
  x[0] = 1.0 - s;
  std::copy(w.begin(), w.end(), x.begin() + 1);
  return x;
}

inline void check_interior_reduced(std::span<const double> w) {
  double s = 0;
  for (double v : w) {
    if (!(v > 0)) throw DomainError("reduced point must be strictly interior");
    s += v;
  }
  if (!(s < 1.0)) throw DomainError("reduced point must be strictly interior");
}

}  // namespace detail

// Softmax with max-shift; safe for scores up to +-1e4 and far beyond.
inline std::vector<double> gibbs_map(std::span<const double> y) {
  if (y.empty()) throw ArgumentError("empty score vector");
  double m = -std::numeric_limits<double>::infinity();
  for (double v : y) {
    if (!std::isfinite(v)) throw ArgumentError("scores must be finite");
    m = std::max(m, v);
  }
  std::vector<double> x(y.size());
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    x[i] = std::exp(y[i] - m);
    s += x[i];
  }
  for (double& v : x) v /= s;
  return x;
}

// F0(w) = grad of the pulled-back entropy h0 at reduced interior w; for
// decomposable kernels this is theta'(w_mu) - theta'(x_0).
inline std::vector<double> reduced_gradient(const EntropyModel& model, std::span<const double> w) {
  detail::check_interior_reduced(w);
  std::vector<double> x = detail::full_from_reduced(w);
  std::vector<double> z(w.size());
  if (model.decomposable()) {
    double t0 = model.theta_p(x[0]);
    for (std::size_t i = 0; i < w.size(); ++i) z[i] = model.theta_p(w[i]) - t0;
  } else {
    std::vector<double> g = model.gradient(x);
    for (std::size_t i = 0; i < w.size(); ++i) z[i] = g[i + 1] - g[0];
  }
  return z;
}

// Reduced Hessian h_{mu nu} at interior w; diagonal-plus-rank-one for kernels.
inline Eigen::MatrixXd hessian_reduced(const EntropyModel& model, std::span<const double> w) {
  detail::check_interior_reduced(w);
  std::vector<double> x = detail::full_from_reduced(w);
  const auto n = static_cast<Eigen::Index>(w.size());
  if (model.decomposable()) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Constant(n, n, model.theta_pp(x[0]));
    for (Eigen::Index i = 0; i < n; ++i) H(i, i) += model.theta_pp(x[i + 1]);
    return H;
  }
  Eigen::MatrixXd F = model.hessian_full(x);
  Eigen::MatrixXd H(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      H(i, j) = F(i + 1, j + 1) + F(0, 0) - F(0, i + 1) - F(0, j + 1);
  return H;
}

// Closed-form inverse of a diagonal-plus-rank-one matrix q_mu d_{mu nu} + q_0,
// with Q_h the harmonic aggregate of all n+1 weights.
inline Eigen::MatrixXd diag_plus_rank_one_inverse(const std::vector<double>& q_full) {
  const auto n = static_cast<Eigen::Index>(q_full.size()) - 1;
  double qh_inv = 0;
  for (double v : q_full) {
    if (!(v > 0)) throw ArgumentError("weights must be positive");
    qh_inv += 1.0 / v;
  }
  const double Qh = 1.0 / qh_inv;
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double v = -Qh / (q_full[i + 1] * q_full[j + 1]);
      if (i == j) v += 1.0 / q_full[i + 1];
      A(i, j) = v;
    }
  return A;
}

// Inverse reduced Hessian h^{mu nu}: closed form for decomposable kernels,
// dense inversion otherwise.
inline Eigen::MatrixXd hessian_inverse_reduced(const EntropyModel& model,
                                               std::span<const double> w) {
  detail::check_interior_reduced(w);
  if (model.decomposable()) {
    std::vector<double> x = detail::full_from_reduced(w);
    std::vector<double> q(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) q[i] = model.theta_pp(x[i]);
    return diag_plus_rank_one_inverse(q);
  }
  return hessian_reduced(model, w).inverse();
}

namespace detail {

// Dual 1-D solve for decomposable kernels: find c with
// sum_beta theta'^{-1}(y_beta - c) = 1, then x_beta = theta'^{-1}(y_beta - c).
inline std::vector<double> choice_map_kernel_dual(const EntropyModel& model,
                                                  std::span<const double> y) {
  const double sup = model.theta_p_sup();
  double ymax = -std::numeric_limits<double>::infinity();
  for (double v : y) ymax = std::max(ymax, v);

  auto mass = [&](double c) {
    double s = 0;
    for (double v : y) s += model.theta_p_inv(v - c);
    return s;
  };

  // bracket: mass decreases in c; pick lo with mass >= 1, hi with mass <= 1
  double lo, hi;
  if (std::isfinite(sup)) {
    lo = ymax - sup;  // mass -> +inf as c -> lo+
    double step = 1.0;
    hi = lo + step;
    while (mass(hi) > 1.0) {
      step *= 2.0;
      hi = lo + step;
      if (step > 1e300) throw NumericalError("dual bracket expansion failed");
    }
    // nudge lo inside the domain
    lo = std::nextafter(lo, hi);
  } else {
    lo = ymax - 1.0;
    while (mass(lo) < 1.0) lo -= std::max(1.0, std::fabs(lo));
    hi = ymax + 1.0;
    while (mass(hi) > 1.0) hi += std::max(1.0, std::fabs(hi));
  }

  // safeguarded Newton on g(c) = mass(c) - 1; the bracket is forced to halve
  // at least every other iteration so stiff kernels cannot make the Newton
  // updates crawl across a wide bracket
  double c = 0.5 * (lo + hi);
  double width_before = hi - lo;
  for (int it = 0; it < 300; ++it) {
    double g = mass(c) - 1.0;
    if (g > 0)
      lo = c;
    else
      hi = c;
    double gp = 0;  // g'(c) = -sum 1/theta''(x_beta)
    for (double v : y) gp -= 1.0 / model.theta_pp(model.theta_p_inv(v - c));
    double cn = (gp < 0) ? c - g / gp : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(cn) || cn <= lo || cn >= hi) cn = 0.5 * (lo + hi);
    if (it % 2 == 1) {
      if (hi - lo > 0.5 * width_before) cn = 0.5 * (lo + hi);
      width_before = hi - lo;
    }
    if (std::fabs(cn - c) <= 1e-16 * std::max(1.0, std::fabs(c)) && std::fabs(g) < 1e-13) {
      c = cn;
      break;
    }
    c = cn;
  }
  std::vector<double> x(y.size());
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    x[i] = model.theta_p_inv(y[i] - c);
    s += x[i];
  }
  for (double& v : x) v /= s;  // remove the last-ulp slack in the constraint
  return x;
}

}  // namespace detail

// Damped Newton on the reduced maximization problem: solves F0(w) = z, i.e.
// maximizes sum w_mu z_mu - h0(w) over the interior of the reduced simplex.
// This is the generic variational path; it works for any entropy model.
inline std::vector<double> choice_map_newton(const EntropyModel& model, std::span<const double> z,
                                             double tol = 1e-12, int max_iters = 200) {
  const std::size_t n = z.size();
  std::vector<double> w(n, 1.0 / (n + 1.0));
  auto objective = [&](const std::vector<double>& wv) {
    // minimize h0(w) - z.w (strictly convex)
    std::vector<double> x = detail::full_from_reduced(wv);
    double val = model.value(x);
    for (std::size_t i = 0; i < n; ++i) val -= z[i] * wv[i];
    return val;
  };
  double z_scale = 1.0;
  for (double v : z) z_scale = std::max(z_scale, std::fabs(v));
  const double grad_tol = tol * z_scale;

  auto residual_of = [&](const std::vector<double>& wv) {
    std::vector<double> g = reduced_gradient(model, wv);
    double r = 0;
    for (std::size_t i = 0; i < n; ++i) r = std::max(r, std::fabs(g[i] - z[i]));
    return r;
  };
  // floating-point floor: near the optimum the objective decrease drops below
  // representable precision while the gradient residual is still shrinking, so
  // steps are accepted on either objective decrease or residual decrease
  const double fp_floor = 1e-8 * z_scale;

  double fw = objective(w);
  double gnorm = residual_of(w);
  for (int it = 0; it < max_iters; ++it) {
    if (gnorm <= grad_tol) return w;
    std::vector<double> g = reduced_gradient(model, w);

    Eigen::MatrixXd H = hessian_reduced(model, w);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs(static_cast<Eigen::Index>(i)) = z[i] - g[i];
    Eigen::VectorXd d = H.ldlt().solve(rhs);

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 120; ++ls) {
      std::vector<double> wn(n);
      double s = 0;
      bool interior = true;
      for (std::size_t i = 0; i < n; ++i) {
        wn[i] = w[i] + t * d(static_cast<Eigen::Index>(i));
        if (!(wn[i] >= 1e-300)) interior = false;
        s += wn[i];
      }
      if (interior && s <= 1.0 - 1e-300) {
        double fn = objective(wn);
        double gn = residual_of(wn);
        if (fn <= fw + 1e-18 * std::fabs(fw) || gn < gnorm) {
          w = std::move(wn);
          fw = fn;
          gnorm = gn;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (gnorm <= fp_floor) return w;
      throw NumericalError("choice map Newton line search stagnated", w, gnorm);
    }
  }
  if (gnorm <= std::max(grad_tol * 10, fp_floor)) return w;
  throw NumericalError("choice map Newton did not converge", w, gnorm);
}

// Q0(z): reduced choice map, returned in full coordinates.
inline std::vector<double> choice_map_reduced(const EntropyModel& model,
                                              std::span<const double> z) {
  for (double v : z)
    if (!std::isfinite(v)) throw ArgumentError("relative scores must be finite");
  if (model.kind() == EntropyKind::Gibbs) {
    std::vector<double> y(z.size() + 1, 0.0);
    std::copy(z.begin(), z.end(), y.begin() + 1);
    return gibbs_map(y);
  }
  if (model.decomposable()) {
    std::vector<double> y(z.size() + 1, 0.0);
    std::copy(z.begin(), z.end(), y.begin() + 1);
    return detail::choice_map_kernel_dual(model, y);
  }
  return detail::full_from_reduced(choice_map_newton(model, z));
}

// Q(y): the unique maximizer of sum x_beta y_beta - h(x) over the simplex.
inline std::vector<double> choice_map(const EntropyModel& model, std::span<const double> y) {
  if (y.empty()) throw ArgumentError("empty score vector");
  for (double v : y)
    if (!std::isfinite(v)) throw ArgumentError("scores must be finite");
  if (model.kind() == EntropyKind::Gibbs) return gibbs_map(y);
  if (model.decomposable()) return detail::choice_map_kernel_dual(model, y);
  std::vector<double> z(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) z[i] = y[i + 1] - y[0];
  return detail::full_from_reduced(choice_map_newton(model, z));
}

// Variational path for any model (used to cross-check the kernel fast path).
inline std::vector<double> choice_map_variational(const EntropyModel& model,
                                                  std::span<const double> y) {
  std::vector<double> z(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) z[i] = y[i + 1] - y[0];
  return detail::full_from_reduced(choice_map_newton(model, z));
}

// h*(y): the Legendre-Fenchel conjugate (free entropy); log-sum-exp for Gibbs.
inline double free_entropy(const EntropyModel& model, std::span<const double> y) {
  if (model.kind() == EntropyKind::Gibbs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : y) m = std::max(m, v);
    double s = 0;
    for (double v : y) s += std::exp(v - m);
    return m + std::log(s);
  }
  std::vector<double> x = choice_map(model, y);
  double val = -model.value(x);
  for (std::size_t i = 0; i < y.size(); ++i) val += x[i] * y[i];
  return val;
}

}  // namespace entrodyn

#endif  // ENTRODYN_ENTROPY_HPP
