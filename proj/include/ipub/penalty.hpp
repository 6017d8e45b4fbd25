#pragma once

#include <ipub/types.hpp>

#include <algorithm>
#include <cmath>

namespace ipub {

template <class Scalar>
Scalar soft_threshold(Scalar s, Scalar kappa) {
  return std::max(s - kappa, Scalar(0)) - std::max(-s - kappa, Scalar(0));
}

template <class Derived>
typename Derived::Scalar penalty_value(const Penalty<typename Derived::Scalar>& p,
                                       const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  Scalar value = p.lambda / Scalar(2) * w.squaredNorm();
  if (p.kind == PenaltyKind::elastic_net) value += p.kappa * w.template lpNorm<1>();
  return value;
}

/// Per-coordinate conjugate rho_j^*(s).
template <class Scalar>
Scalar penalty_conjugate_component(const Penalty<Scalar>& p, Scalar s) {
  const Scalar a = std::max(std::abs(s) - p.l1(), Scalar(0));
  return a * a / (Scalar(2) * p.lambda);
}

/// d/ds rho_j^*(s): the primal coordinate recovered from the dual.
template <class Scalar>
Scalar penalty_conjugate_derivative(const Penalty<Scalar>& p, Scalar s) {
  return soft_threshold(s, p.l1()) / p.lambda;
}

template <class Derived>
Vector<typename Derived::Scalar> penalty_conjugate_gradient(
    const Penalty<typename Derived::Scalar>& p, const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  return s.unaryExpr([&p](Scalar v) { return penalty_conjugate_derivative(p, v); });
}

template <class Derived>
typename Derived::Scalar penalty_conjugate(const Penalty<typename Derived::Scalar>& p,
                                           const Eigen::MatrixBase<Derived>& s) {
  typename Derived::Scalar total(0);
  for (Index j = 0; j < s.size(); ++j) total += penalty_conjugate_component(p, s(j));
  return total;
}

}  // namespace ipub
