#pragma once

#include <ipub/objective.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ipub {

struct SolverConfig {
  /// Stop when the (minimum-norm sub)gradient norm, or the largest projected
  /// dual gradient for coordinate descent, falls below this.
  double grad_tol = 1e-8;
  int max_iter = 500;
  double line_search_shrink = 0.5;
  double armijo_c = 1e-4;
  int dcd_epochs = 2000;

  void check() const {
    if (!(grad_tol > 0 && grad_tol < 1)) throw Error("SolverConfig: grad_tol must lie in (0, 1)");
    if (max_iter <= 0 || dcd_epochs <= 0) throw Error("SolverConfig: iteration limits must be positive");
    if (!(line_search_shrink > 0 && line_search_shrink < 1))
      throw Error("SolverConfig: line_search_shrink must lie in (0, 1)");
    if (!(armijo_c > 0 && armijo_c < 1)) throw Error("SolverConfig: armijo_c must lie in (0, 1)");
  }
};

/// X' = (lower + upper) / 2.
template <class Scalar>
Matrix<Scalar> impute_midpoint(const IntervalMatrix<Scalar>& X) {
  Matrix<Scalar> mid = (X.lower() + X.upper()) / Scalar(2);
  // Observed entries keep their exact value.
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i)
      if (!X.is_missing(i, j)) mid(i, j) = X.lower(i, j);
  return mid;
}

/// Gradient of the smooth part (1/n) sum l + (lambda/2)||w||^2. The L1 term
/// of the elastic net is excluded.
template <class Scalar>
Vector<Scalar> smooth_gradient(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& X,
                               const Vector<Scalar>& y, const Vector<Scalar>& w) {
  const Vector<Scalar> scores = X * w;
  Vector<Scalar> dl(X.rows());
  for (Index i = 0; i < X.rows(); ++i) dl(i) = loss_derivative(spec.loss, y(i), scores(i));
  return X.transpose() * dl / static_cast<Scalar>(X.rows()) + spec.lambda() * w;
}

template <class Scalar>
Scalar dual_residual_gap(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& X,
                         const Vector<Scalar>& y, const Vector<Scalar>& w,
                         const Vector<Scalar>& alpha) {
  const Scalar gap = primal_objective(spec, X, y, w) - dual_objective(spec, X, y, alpha);
  if (gap < Scalar(-1e-10))
    throw InternalError("weak duality violated: P - D = " + std::to_string(static_cast<double>(gap)));
  return std::max(gap, Scalar(0));
}

template <class Scalar>
Scalar dual_residual_gap(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& X,
                         const Vector<Scalar>& y, const PrimalDualSolution<Scalar>& sol) {
  return dual_residual_gap(spec, X, y, sol.w, sol.alpha);
}

namespace detail {

template <class Scalar>
void check_training_inputs(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& X,
                           const Vector<Scalar>& y) {
  if (X.rows() != y.size()) throw DimensionError("train: X rows differ from y length");
  if (X.rows() == 0) throw DimensionError("train: empty training set");
  if (!(spec.lambda() > Scalar(0))) throw Error("train: lambda must be positive");
  if (!(spec.penalty.kappa >= Scalar(0))) throw Error("train: kappa must be nonnegative");
  for (Index i = 0; i < y.size(); ++i) require_label(spec.loss, y(i));
  if (!X.allFinite()) throw Error("train: non-finite input matrix");
}

// Exact maximizer over delta in [-beta, 1 - beta] of the hinge dual restricted
// to one coordinate:  delta/n - sum_j rho_j^*(s_j + delta c_j),  c = y_i x_i / n.
// The derivative is piecewise linear and nonincreasing, so the root is found
// by walking the soft-threshold breakpoints.
template <class Scalar, class DerivedC>
Scalar hinge_coordinate_step(const Penalty<Scalar>& p, const Eigen::MatrixBase<DerivedC>& c,
                             const Vector<Scalar>& s, Scalar beta, Scalar inv_n) {
  const Scalar kappa = p.l1();
  const Scalar lo = -beta, hi = Scalar(1) - beta;
  auto slope = [&](Scalar delta) {
    Scalar acc(0);
    for (Index j = 0; j < c.size(); ++j)
      if (c(j) != Scalar(0)) acc += c(j) * soft_threshold(s(j) + delta * c(j), kappa);
    return inv_n - acc / p.lambda;
  };
  const Scalar g_hi = slope(hi);
  if (g_hi >= Scalar(0)) return hi;
  const Scalar g_lo = slope(lo);
  if (g_lo <= Scalar(0)) return lo;
  if (kappa == Scalar(0)) {
    const Scalar cc = c.squaredNorm();
    const Scalar cs = c.dot(s);
    return std::clamp((p.lambda * inv_n - cs) / cc, lo, hi);
  }
  std::vector<Scalar> breaks;
  for (Index j = 0; j < c.size(); ++j) {
    if (c(j) == Scalar(0)) continue;
    for (Scalar b : {(kappa - s(j)) / c(j), (-kappa - s(j)) / c(j)})
      if (b > lo && b < hi) breaks.push_back(b);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.push_back(hi);
  Scalar a = lo, ga = g_lo;
  for (Scalar b : breaks) {
    const Scalar gb = b == hi ? g_hi : slope(b);
    if (gb <= Scalar(0)) {
      if (ga == gb) return a;
      return std::clamp(a + ga * (b - a) / (ga - gb), a, b);
    }
    a = b;
    ga = gb;
  }
  return hi;
}

template <class Scalar>
Scalar optimality_norm(const Vector<Scalar>& grad, const Vector<Scalar>& w, Scalar l1) {
  if (l1 == Scalar(0)) return grad.norm();
  Scalar acc(0);
  for (Index j = 0; j < w.size(); ++j) {
    Scalar r;
    if (w(j) > Scalar(0)) r = grad(j) + l1;
    else if (w(j) < Scalar(0)) r = grad(j) - l1;
    else r = std::max(std::abs(grad(j)) - l1, Scalar(0));
    acc += r * r;
  }
  return std::sqrt(acc);
}

// argmin_d  g.d + 0.5 d'Hd + l1 ||w + d||_1  by cyclic coordinate descent.
template <class Scalar>
Vector<Scalar> solve_l1_quadratic(const Matrix<Scalar>& H, const Vector<Scalar>& g,
                                  const Vector<Scalar>& w, Scalar l1) {
  const Index d = w.size();
  Vector<Scalar> step = Vector<Scalar>::Zero(d);
  Vector<Scalar> Hd = Vector<Scalar>::Zero(d);
  for (int sweep = 0; sweep < 20000; ++sweep) {
    Scalar max_change(0), scale(1);
    for (Index j = 0; j < d; ++j) {
      const Scalar a = H(j, j);
      const Scalar b = g(j) + Hd(j) - a * step(j);
      const Scalar u = soft_threshold(w(j) - b / a, l1 / a);
      const Scalar delta = (u - w(j)) - step(j);
      if (delta != Scalar(0)) {
        Hd += H.col(j) * delta;
        step(j) += delta;
        max_change = std::max(max_change, std::abs(delta));
      }
      scale = std::max(scale, std::abs(u));
    }
    if (max_change <= Scalar(1e-15) * scale) break;
  }
  return step;
}

template <class Scalar>
Scalar smooth_value(const ModelSpec<Scalar>& spec, const Vector<Scalar>& y,
                    const Vector<Scalar>& scores, const Vector<Scalar>& w) {
  Scalar loss(0);
  for (Index i = 0; i < y.size(); ++i) loss += loss_value(spec.loss, y(i), scores(i));
  return loss / static_cast<Scalar>(y.size()) + spec.lambda() / Scalar(2) * w.squaredNorm();
}

template <class Scalar>
PrimalDualSolution<Scalar> finalize(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& X,
                                    const Vector<Scalar>& y, PrimalDualSolution<Scalar> sol) {
  for (Index i = 0; i < sol.alpha.size(); ++i) sol.alpha(i) = clamp_dual(spec.loss, y(i), sol.alpha(i));
  sol.row_scores = X * sol.w;
  sol.col_scores = X.transpose() * sol.alpha;
  sol.residual_gap = dual_residual_gap(spec, X, y, sol.w, sol.alpha);
  sol.imputed = X;
  return sol;
}

// Damped (proximal) Newton for the squared and logistic losses. With an L1
// term the step solves the quadratic model plus ||.||_1 exactly; the
// backtracking test is the Armijo rule on the full composite objective.
template <class Scalar>
PrimalDualSolution<Scalar> train_newton(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& X,
                                        const Vector<Scalar>& y, const SolverConfig& cfg) {
  const Index n = X.rows(), d = X.cols();
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  const Scalar lambda = spec.lambda();
  const Scalar l1 = spec.penalty.l1();

  PrimalDualSolution<Scalar> sol;
  sol.solver = l1 > Scalar(0) ? SolverKind::proximal_newton : SolverKind::newton;
  Vector<Scalar> w = Vector<Scalar>::Zero(d);
  Vector<Scalar> scores = Vector<Scalar>::Zero(n);
  auto composite = [&](const Vector<Scalar>& v, const Vector<Scalar>& ww) {
    return smooth_value(spec, y, v, ww) + l1 * ww.template lpNorm<1>();
  };
  Scalar F = composite(scores, w);
  sol.objective_history.push_back(F);

  Vector<Scalar> dl(n), d2(n);
  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    for (Index i = 0; i < n; ++i) dl(i) = loss_derivative(spec.loss, y(i), scores(i));
    const Vector<Scalar> grad = X.transpose() * dl * inv_n + lambda * w;
    if (optimality_norm(grad, w, l1) <= Scalar(cfg.grad_tol)) {
      sol.converged = true;
      break;
    }
    for (Index i = 0; i < n; ++i) d2(i) = loss_second_derivative(spec.loss, y(i), scores(i));
    Matrix<Scalar> H = X.transpose() * d2.asDiagonal() * X * inv_n;
    H.diagonal().array() += lambda;

    Vector<Scalar> step;
    if (l1 == Scalar(0)) step = -H.llt().solve(grad);
    else step = solve_l1_quadratic(H, grad, w, l1);
    const Scalar decrease =
        grad.dot(step) + l1 * ((w + step).template lpNorm<1>() - w.template lpNorm<1>());
    if (!(decrease < Scalar(0))) break;

    const Vector<Scalar> Xstep = X * step;
    Scalar t(1);
    bool accepted = false;
    Vector<Scalar> w_new, s_new;
    Scalar F_new = F;
    for (int ls = 0; ls < 60; ++ls) {
      w_new = w + t * step;
      s_new = scores + t * Xstep;
      F_new = composite(s_new, w_new);
      if (F_new <= F + Scalar(cfg.armijo_c) * t * decrease) {
        accepted = true;
        break;
      }
      t *= Scalar(cfg.line_search_shrink);
    }
    if (!accepted) {
      // Near the optimum the Armijo test drowns in rounding; a full step that
      // does not increase the objective is still progress.
      w_new = w + step;
      s_new = X * w_new;
      F_new = composite(s_new, w_new);
      if (!(F_new <= F)) break;
    }
    w = std::move(w_new);
    scores = X * w;  // refresh to keep the cache free of drift
    F = composite(scores, w);
    sol.objective_history.push_back(F);
  }
  sol.iterations = it;
  sol.w = w;
  sol.alpha.resize(n);
  for (Index i = 0; i < n; ++i) sol.alpha(i) = -loss_derivative(spec.loss, y(i), scores(i));
  return finalize(spec, X, y, std::move(sol));
}

// Dual coordinate descent for the hinge loss, over beta_i = alpha_i / y_i in
// [0, 1], keeping s = X' alpha / n and w = grad rho^*(s) in sync.
template <class Scalar>
PrimalDualSolution<Scalar> train_hinge_dcd(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& X,
                                           const Vector<Scalar>& y, const SolverConfig& cfg) {
  const Index n = X.rows(), d = X.cols();
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  const auto& pen = spec.penalty;

  PrimalDualSolution<Scalar> sol;
  sol.solver = SolverKind::dual_coordinate_descent;
  Vector<Scalar> beta = Vector<Scalar>::Zero(n);
  Vector<Scalar> s = Vector<Scalar>::Zero(d);
  Vector<Scalar> w = Vector<Scalar>::Zero(d);
  Vector<Scalar> c(d);

  auto dual_value = [&]() {
    return beta.sum() * inv_n - penalty_conjugate(pen, s);
  };

  int epoch = 0;
  for (; epoch < cfg.dcd_epochs; ++epoch) {
    Scalar max_pg(0);
    for (Index i = 0; i < n; ++i) {
      // n * d/dbeta_i of the dual at the current point.
      const Scalar G = Scalar(1) - y(i) * X.row(i).dot(w);
      Scalar pg = G;
      if (beta(i) <= Scalar(0) && G < Scalar(0)) pg = Scalar(0);
      if (beta(i) >= Scalar(1) && G > Scalar(0)) pg = Scalar(0);
      max_pg = std::max(max_pg, std::abs(pg));
      if (pg == Scalar(0)) continue;
      c = X.row(i).transpose() * (y(i) * inv_n);
      const Scalar delta = hinge_coordinate_step(pen, c, s, beta(i), inv_n);
      if (delta == Scalar(0)) continue;
      beta(i) = std::clamp(beta(i) + delta, Scalar(0), Scalar(1));
      s += delta * c;
      for (Index j = 0; j < d; ++j)
        if (c(j) != Scalar(0)) w(j) = penalty_conjugate_derivative(pen, s(j));
    }
    sol.objective_history.push_back(dual_value());
    if (max_pg <= Scalar(cfg.grad_tol)) {
      sol.converged = true;
      break;
    }
  }
  sol.iterations = epoch;
  const Vector<Scalar> alpha = y.cwiseProduct(beta);
  s = X.transpose() * alpha * inv_n;
  sol.w = penalty_conjugate_gradient(pen, s);
  sol.alpha = alpha;
  return finalize(spec, X, y, std::move(sol));
}

}  // namespace detail

/// Dual point recovered from a primal w: alpha_i = -l'(y_i, w . x_i). At a
/// hinge kink (|y w.x - 1| <= 1e-9) the subgradient is chosen to maximize
/// the dual objective over the kinked coordinates.
template <class Scalar>
Vector<Scalar> recover_dual(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& X,
                            const Vector<Scalar>& y, const Vector<Scalar>& w) {
  const Index n = X.rows();
  const Vector<Scalar> scores = X * w;
  Vector<Scalar> alpha(n);
  if (spec.loss != Loss::hinge) {
    for (Index i = 0; i < n; ++i) alpha(i) = -loss_derivative(spec.loss, y(i), scores(i));
    return alpha;
  }
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  std::vector<Index> kinks;
  Vector<Scalar> beta(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar m = y(i) * scores(i);
    if (std::abs(m - Scalar(1)) <= Scalar(1e-9)) {
      kinks.push_back(i);
      beta(i) = Scalar(0);
    } else {
      beta(i) = m < Scalar(1) ? Scalar(1) : Scalar(0);
    }
  }
  if (!kinks.empty()) {
    Vector<Scalar> s = X.transpose() * y.cwiseProduct(beta) * inv_n;
    Vector<Scalar> c(X.cols());
    for (int sweep = 0; sweep < 200; ++sweep) {
      Scalar moved(0);
      for (Index i : kinks) {
        c = X.row(i).transpose() * (y(i) * inv_n);
        const Scalar delta = detail::hinge_coordinate_step(spec.penalty, c, s, beta(i), inv_n);
        if (delta == Scalar(0)) continue;
        beta(i) = std::clamp(beta(i) + delta, Scalar(0), Scalar(1));
        s += delta * c;
        moved = std::max(moved, std::abs(delta));
      }
      if (moved <= Scalar(1e-15)) break;
    }
  }
  return y.cwiseProduct(beta);
}

/// Trains on a concrete matrix X' and returns the primal/dual pair with the
/// cached inner products and the residual duality gap on X'.
template <class Scalar>
PrimalDualSolution<Scalar> train(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& X,
                                 const Vector<Scalar>& y, const SolverConfig& cfg = {}) {
  cfg.check();
  detail::check_training_inputs(spec, X, y);
  if (spec.loss == Loss::hinge) return detail::train_hinge_dcd(spec, X, y, cfg);
  return detail::train_newton(spec, X, y, cfg);
}

}  // namespace ipub
