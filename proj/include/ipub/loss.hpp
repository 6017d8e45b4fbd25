#pragma once

#include <ipub/types.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace ipub {

/// Absolute slack allowed on the dual box 0 <= alpha/y <= 1 before a value
/// counts as infeasible. Values inside the slack are clamped onto the box.
inline constexpr double kDualSlack = 1e-12;

template <class Scalar>
struct SubderivativeInterval {
  Scalar lo;
  Scalar hi;
  bool degenerate() const { return lo == hi; }
  bool contains(Scalar g) const { return lo <= g && g <= hi; }
};

namespace detail {

template <class Scalar>
void require_label(Loss loss, Scalar y) {
  if (!label_in_domain(loss, y))
    throw DomainError("label " + std::to_string(static_cast<double>(y)) + " outside the " +
                      std::string(to_string(loss)) + " loss domain");
}

// sigma(-m) = 1 / (1 + exp(m)) without overflow.
template <class Scalar>
Scalar logistic_tail(Scalar m) {
  using std::exp;
  if (m > Scalar(0)) {
    const Scalar e = exp(-m);
    return e / (Scalar(1) + e);
  }
  return Scalar(1) / (Scalar(1) + exp(m));
}

}  // namespace detail

template <class Scalar>
Scalar loss_value(Loss loss, Scalar y, Scalar v) {
  using std::exp;
  using std::log1p;
  detail::require_label(loss, y);
  switch (loss) {
    case Loss::squared: return (y - v) * (y - v);
    case Loss::hinge: return std::max(Scalar(0), Scalar(1) - y * v);
    case Loss::logistic: {
      const Scalar m = y * v;
      return log1p(exp(-std::abs(m))) + std::max(Scalar(0), -m);
    }
  }
  return Scalar(0);
}

/// Derivative of the loss in its second argument. For the hinge loss this
/// is only defined off the kink; use loss_subderivative there.
template <class Scalar>
Scalar loss_derivative(Loss loss, Scalar y, Scalar v) {
  switch (loss) {
    case Loss::squared: return Scalar(2) * (v - y);
    case Loss::hinge: return y * v < Scalar(1) ? -y : Scalar(0);
    case Loss::logistic: return -y * detail::logistic_tail(y * v);
  }
  return Scalar(0);
}

template <class Scalar>
Scalar loss_second_derivative(Loss loss, Scalar y, Scalar v) {
  switch (loss) {
    case Loss::squared: return Scalar(2);
    case Loss::logistic: {
      const Scalar s = detail::logistic_tail(y * v);
      return s * (Scalar(1) - s);
    }
    case Loss::hinge: break;
  }
  throw DomainError("hinge loss has no second derivative");
}

template <class Scalar>
SubderivativeInterval<Scalar> loss_subderivative(Loss loss, Scalar y, Scalar v) {
  if (loss == Loss::hinge) {
    const Scalar m = y * v;
    if (m > Scalar(1)) return {Scalar(0), Scalar(0)};
    if (m < Scalar(1)) return {-y, -y};
    // [-y, 0] for y = +1, [0, -y] for y = -1.
    return {std::min(-y, Scalar(0)), std::max(-y, Scalar(0))};
  }
  const Scalar g = loss_derivative(loss, y, v);
  return {g, g};
}

/// Checks alpha against the dual domain of the loss and clamps it onto the
/// box when it sits within kDualSlack. Throws DualInfeasibleError otherwise.
template <class Scalar>
Scalar clamp_dual(Loss loss, Scalar y, Scalar alpha) {
  if (!std::isfinite(alpha)) throw DualInfeasibleError("non-finite dual value");
  if (loss == Loss::squared) return alpha;
  detail::require_label(loss, y);
  const Scalar t = alpha / y;
  const Scalar slack = Scalar(kDualSlack);
  if (t < -slack || t > Scalar(1) + slack)
    throw DualInfeasibleError("dual value alpha/y = " + std::to_string(static_cast<double>(t)) +
                              " outside [0, 1]");
  return y * std::clamp(t, Scalar(0), Scalar(1));
}

/// Conjugate of the loss evaluated at -alpha: l*(y, -alpha).
template <class Scalar>
Scalar loss_conjugate(Loss loss, Scalar y, Scalar alpha) {
  using std::log;
  using std::log1p;
  const Scalar a = clamp_dual(loss, y, alpha);
  switch (loss) {
    case Loss::squared: return a * (a - Scalar(4) * y) / Scalar(4);
    case Loss::hinge: return -a / y;
    case Loss::logistic: {
      const Scalar t = a / y;
      if (t == Scalar(0) || t == Scalar(1)) return Scalar(0);
      // Binary entropy form of (1 - t) log|y - a| + t log|a| - log|y|.
      return (Scalar(1) - t) * log1p(-t) + t * log(t);
    }
  }
  return Scalar(0);
}

}  // namespace ipub
