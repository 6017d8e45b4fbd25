#pragma once

#include <ipub/loss.hpp>
#include <ipub/penalty.hpp>

namespace ipub {

namespace detail {

template <class DerivedX, class DerivedY>
void check_shapes(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& y,
                  Index coef_size, Index coef_expected, const char* what) {
  if (X.rows() != y.size())
    throw DimensionError(std::string(what) + ": X rows differ from y length");
  if (coef_size != coef_expected)
    throw DimensionError(std::string(what) + ": coefficient vector has wrong length");
}

}  // namespace detail

/// P_X(w) = (1/n) sum_i l(y_i, w . x_i) + rho(w).
template <class DerivedX, class DerivedY, class DerivedW>
typename DerivedX::Scalar primal_objective(const ModelSpec<typename DerivedX::Scalar>& spec,
                                           const Eigen::MatrixBase<DerivedX>& X,
                                           const Eigen::MatrixBase<DerivedY>& y,
                                           const Eigen::MatrixBase<DerivedW>& w) {
  using Scalar = typename DerivedX::Scalar;
  detail::check_shapes(X, y, w.size(), X.cols(), "primal_objective");
  const Vector<Scalar> scores = X * w;
  Scalar loss(0);
  for (Index i = 0; i < X.rows(); ++i) loss += loss_value(spec.loss, y(i), scores(i));
  const Scalar n = static_cast<Scalar>(X.rows());
  return (X.rows() > 0 ? loss / n : Scalar(0)) + penalty_value(spec.penalty, w);
}

/// D_X(alpha) = -(1/n) sum_i l*(y_i, -alpha_i) - sum_j rho_j^*((1/n) alpha . x_j).
template <class DerivedX, class DerivedY, class DerivedA>
typename DerivedX::Scalar dual_objective(const ModelSpec<typename DerivedX::Scalar>& spec,
                                         const Eigen::MatrixBase<DerivedX>& X,
                                         const Eigen::MatrixBase<DerivedY>& y,
                                         const Eigen::MatrixBase<DerivedA>& alpha) {
  using Scalar = typename DerivedX::Scalar;
  detail::check_shapes(X, y, alpha.size(), X.rows(), "dual_objective");
  const Scalar n = static_cast<Scalar>(X.rows());
  Scalar conj(0);
  for (Index i = 0; i < X.rows(); ++i) conj += loss_conjugate(spec.loss, y(i), alpha(i));
  const Vector<Scalar> s = X.transpose() * alpha / n;
  return -conj / n - penalty_conjugate(spec.penalty, s);
}

}  // namespace ipub
