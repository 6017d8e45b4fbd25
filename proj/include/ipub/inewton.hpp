#pragma once

#include <ipub/bound.hpp>
#include <ipub/interval.hpp>

#include <cmath>
#include <optional>

namespace ipub {

template <class Scalar>
Interval<Scalar> entry_interval(const IntervalMatrix<Scalar>& X, Index i, Index j) {
  return {X.lower(i, j), X.upper(i, j)};
}

namespace detail {

template <class Scalar>
void require_logistic_l2(const ModelSpec<Scalar>& spec) {
  if (spec.loss != Loss::logistic || spec.penalty.kind != PenaltyKind::l2)
    throw Error("interval Newton supports logistic loss with the L2 penalty only");
}

// Interval scores x''_i . w over the data box and the parameter box.
template <class Scalar>
IntervalBox<Scalar> interval_scores(const IntervalMatrix<Scalar>& X, const IntervalBox<Scalar>& W) {
  IntervalBox<Scalar> v(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    Interval<Scalar> acc{};
    for (Index j = 0; j < X.cols(); ++j) acc += entry_interval(X, i, j) * W(j);
    v(i) = acc;
  }
  return v;
}

}  // namespace detail

/// Enclosure of grad P(w) = (1/n) sum_i l'(y_i, x_i.w) x_i + lambda w for the
/// logistic loss, over every X'' in the data box and every w in W.
template <class Scalar>
IntervalBox<Scalar> interval_gradient(const IntervalMatrix<Scalar>& X, const Vector<Scalar>& y,
                                      const IntervalBox<Scalar>& W, Scalar lambda) {
  if (X.rows() != y.size() || X.cols() != W.size())
    throw DimensionError("interval_gradient: dimension mismatch");
  const Index n = X.rows(), d = X.cols();
  const IntervalBox<Scalar> v = detail::interval_scores(X, W);
  // l'(y, v) = -y sigma(-y v)
  IntervalBox<Scalar> dl(n);
  for (Index i = 0; i < n; ++i) dl(i) = Interval<Scalar>(-y(i)) * recip(Scalar(1) + exp_iv(Interval<Scalar>(y(i)) * v(i)));
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  IntervalBox<Scalar> g(d);
  for (Index j = 0; j < d; ++j) {
    Interval<Scalar> acc{};
    for (Index i = 0; i < n; ++i) acc += dl(i) * entry_interval(X, i, j);
    g(j) = acc * inv_n + lambda * W(j);
  }
  return g;
}

/// Enclosure of the Hessian (1/n) sum_i l''(y_i, x_i.w) x_i x_i' + lambda I.
template <class Scalar>
IntervalMat<Scalar> interval_hessian(const IntervalMatrix<Scalar>& X, const Vector<Scalar>& y,
                                     const IntervalBox<Scalar>& W, Scalar lambda) {
  if (X.rows() != y.size() || X.cols() != W.size())
    throw DimensionError("interval_hessian: dimension mismatch");
  const Index n = X.rows(), d = X.cols();
  const IntervalBox<Scalar> v = detail::interval_scores(X, W);
  IntervalMat<Scalar> H(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index k = 0; k < d; ++k) H(j, k) = Interval<Scalar>(Scalar(0));
  for (Index i = 0; i < n; ++i) {
    const Interval<Scalar> s = recip(Scalar(1) + exp_iv(v(i)));
    const Interval<Scalar> h = s * (Scalar(1) - s);
    for (Index j = 0; j < d; ++j) {
      const Interval<Scalar> xj = entry_interval(X, i, j);
      H(j, j) += h * sqr(xj);
      const Interval<Scalar> hx = h * xj;
      for (Index k = j + 1; k < d; ++k) H(j, k) += hx * entry_interval(X, i, k);
    }
  }
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  for (Index j = 0; j < d; ++j) {
    H(j, j) = H(j, j) * inv_n + Interval<Scalar>(lambda);
    for (Index k = j + 1; k < d; ++k) {
      H(j, k) = H(j, k) * inv_n;
      H(k, j) = H(j, k);
    }
  }
  return H;
}

/// Interval Gaussian elimination without pivoting. Returns nullopt when a
/// pivot interval contains zero.
template <class Scalar>
std::optional<IntervalBox<Scalar>> interval_gauss_solve(IntervalMat<Scalar> A, IntervalBox<Scalar> b) {
  const Index d = A.rows();
  if (A.cols() != d || b.size() != d) throw DimensionError("interval_gauss_solve: shape mismatch");
  for (Index k = 0; k < d; ++k) {
    if (A(k, k).contains_zero()) return std::nullopt;
    for (Index i = k + 1; i < d; ++i) {
      const Interval<Scalar> f = A(i, k) / A(k, k);
      for (Index j = k + 1; j < d; ++j) A(i, j) -= f * A(k, j);
      b(i) -= f * b(k);
    }
  }
  IntervalBox<Scalar> x(d);
  for (Index k = d - 1; k >= 0; --k) {
    Interval<Scalar> acc = b(k);
    for (Index j = k + 1; j < d; ++j) acc -= A(k, j) * x(j);
    x(k) = acc / A(k, k);
  }
  return x;
}

template <class Scalar>
struct NewtonStep {
  IntervalBox<Scalar> image;       // N(W), before intersection
  std::optional<IntervalBox<Scalar>> next;  // N(W) intersected with W; empty if disjoint
  bool pivot_failed = false;
};

/// One interval Newton step N(W) = m(W) - IGA(H(W), grad(m(W))) with the
/// data box intervalized in both the Hessian and the gradient.
template <class Scalar>
NewtonStep<Scalar> inewton_step(const IntervalMatrix<Scalar>& X, const Vector<Scalar>& y,
                                const IntervalBox<Scalar>& W, Scalar lambda) {
  NewtonStep<Scalar> out;
  const Vector<Scalar> m = box_midpoint(W);
  const IntervalBox<Scalar> g = interval_gradient(X, y, point_box(m), lambda);
  const IntervalMat<Scalar> H = interval_hessian(X, y, W, lambda);
  auto z = interval_gauss_solve(H, g);
  if (!z) {
    out.pivot_failed = true;
    return out;
  }
  out.image.resize(W.size());
  IntervalBox<Scalar> next(W.size());
  bool empty = false;
  for (Index j = 0; j < W.size(); ++j) {
    out.image(j) = Interval<Scalar>(m(j)) - (*z)(j);
    auto cut = intersect(out.image(j), W(j));
    if (!cut) {
      empty = true;
      break;
    }
    next(j) = *cut;
  }
  if (!empty) out.next = std::move(next);
  return out;
}

template <class Scalar>
struct InewtonResult {
  IntervalBox<Scalar> box;
  int iterations = 0;
  /// False when elimination hit a pivot containing zero or the Newton image
  /// missed the box; the returned box is then the last valid one.
  bool contracted = true;
};

/// Iterates W <- N(W) intersected with W for at most `max_iter` steps, or
/// until no coordinate shrinks by more than 1e-12.
template <class Scalar>
InewtonResult<Scalar> inewton_enclose(const TrainingSet<Scalar>& ts, Scalar lambda, int max_iter,
                                      const IntervalBox<Scalar>& init) {
  InewtonResult<Scalar> res{init, 0, true};
  if (init.size() != ts.d()) throw DimensionError("inewton_enclose: box dimension mismatch");
  for (int k = 0; k < max_iter; ++k) {
    NewtonStep<Scalar> step = inewton_step(ts.X, ts.y, res.box, lambda);
    if (step.pivot_failed || !step.next) {
      res.contracted = false;
      break;
    }
    Scalar shrink(0);
    for (Index j = 0; j < res.box.size(); ++j)
      shrink = std::max(shrink, res.box(j).width() - (*step.next)(j).width());
    res.box = std::move(*step.next);
    res.iterations = k + 1;
    if (shrink <= Scalar(1e-12)) break;
  }
  return res;
}

template <class Scalar>
struct InitialBox {
  IntervalBox<Scalar> box;
  bool verified = false;
  int doublings = 0;
};

/// Box centered at w' with half-width 1.1 * radius per coordinate. It is
/// accepted once one Newton image lands inside it (each imputation then has
/// its unique minimizer in the box); otherwise the widths double, at most
/// eight times. If no attempt verifies, the undoubled box is returned with
/// verified = false: it still covers the IPUB ball, which holds every w''.
template <class Scalar>
InitialBox<Scalar> inewton_initial_box(const TrainingSet<Scalar>& ts, Scalar lambda,
                                       const Vector<Scalar>& center, Scalar radius) {
  InitialBox<Scalar> out;
  Scalar half = std::max(Scalar(1.1) * radius, Scalar(1e-9));
  auto make = [&](Scalar h) {
    IntervalBox<Scalar> b(center.size());
    for (Index j = 0; j < center.size(); ++j) b(j) = Interval<Scalar>(center(j) - h, center(j) + h);
    return b;
  };
  const Scalar base = half;
  out.box = make(half);
  for (int attempt = 0; attempt <= 8; ++attempt) {
    NewtonStep<Scalar> step = inewton_step(ts.X, ts.y, out.box, lambda);
    bool inside = !step.pivot_failed;
    for (Index j = 0; inside && j < out.box.size(); ++j) inside = out.box(j).contains(step.image(j));
    if (inside) {
      out.verified = true;
      return out;
    }
    if (attempt == 8) break;
    half *= Scalar(2);
    out.box = make(half);
    out.doublings = attempt + 1;
  }
  out.box = make(base);
  return out;
}

/// Interval dot product of the parameter box with x, mapped through the link.
template <class Scalar, class Derived>
PredictionInterval<Scalar> inewton_predict_interval(const IntervalBox<Scalar>& box,
                                                    const Eigen::MatrixBase<Derived>& x, Link link) {
  if (x.size() != box.size()) throw DimensionError("inewton_predict_interval: dimension mismatch");
  Interval<Scalar> acc{};
  for (Index j = 0; j < box.size(); ++j) acc += box(j) * Interval<Scalar>(static_cast<Scalar>(x(j)));
  return make_prediction_interval(acc.lo, acc.hi, link);
}

}  // namespace ipub
