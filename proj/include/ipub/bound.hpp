#pragma once

#include <ipub/objective.hpp>

#include <cmath>
#include <optional>
#include <string>

namespace ipub {

/// Extremes of w'.x''_i over each row box (rows in index.rows()) and of
/// alpha'.x''_j over each column box (columns in index.cols()).
template <class Scalar>
struct ExtremeScores {
  Vector<Scalar> p_minus, p_plus;
  Vector<Scalar> q_minus, q_plus;
};

template <class Scalar>
struct DeltaBreakdown {
  Scalar loss_term = Scalar(0);
  Scalar penalty_term = Scalar(0);
  Scalar residual_gap = Scalar(0);
  Scalar delta_total = Scalar(0);
  ExtremeScores<Scalar> scores;
};

/// Lists longer than this accumulate their endpoint corrections with
/// compensated summation.
inline constexpr std::size_t kCompensatedSumThreshold = 64;

/// Tolerated negative summand in the delta sums before the caches are
/// declared corrupt.
inline constexpr double kNegativeSummandTol = 1e-10;

namespace detail {

template <class Scalar>
class KahanSum {
 public:
  explicit KahanSum(Scalar start) : sum_(start) {}
  void add(Scalar v) {
    const Scalar y = v - carry_;
    const Scalar t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  Scalar value() const { return sum_; }

 private:
  Scalar sum_;
  Scalar carry_ = Scalar(0);
};

// Adds the min/max corrections for one missing entry with coefficient `coef`.
template <class Scalar>
void endpoint_corrections(Scalar coef, Scalar lo, Scalar hi, Scalar mid, Scalar& down, Scalar& up) {
  const Scalar nominal = coef * mid;
  down = (coef > Scalar(0) ? coef * lo : coef * hi) - nominal;
  up = (coef > Scalar(0) ? coef * hi : coef * lo) - nominal;
}

template <class Scalar>
void check_consistency(const PrimalDualSolution<Scalar>& sol, const IntervalMatrix<Scalar>& X,
                       const MissingIndex& index) {
  if (index.n() != X.rows() || index.d() != X.cols())
    throw Error("missing index inconsistent with X: shape differs");
  if (sol.imputed.rows() != X.rows() || sol.imputed.cols() != X.cols() ||
      sol.w.size() != X.cols() || sol.alpha.size() != X.rows() ||
      sol.row_scores.size() != X.rows() || sol.col_scores.size() != X.cols())
    throw DimensionError("solution caches do not match the shape of X");
  for (const auto& e : index.entries()) {
    if (!X.is_missing(e.row, e.col))
      throw Error("missing index inconsistent with X at (" + std::to_string(e.row) + "," +
                  std::to_string(e.col) + ")");
    const Scalar v = sol.imputed(e.row, e.col);
    if (v < X.lower(e.row, e.col) || v > X.upper(e.row, e.col))
      throw Error("imputed matrix leaves the interval at (" + std::to_string(e.row) + "," +
                  std::to_string(e.col) + ")");
  }
}

template <class Scalar>
Scalar checked_summand(Scalar v, const char* what) {
  if (v < Scalar(-kNegativeSummandTol))
    throw InternalError(std::string("negative ") + what + " summand " +
                        std::to_string(static_cast<double>(v)) + ": caches out of sync");
  return std::max(v, Scalar(0));
}

}  // namespace detail

/// p-/p+ per missing row and q-/q+ per missing column, from the cached
/// scores plus one endpoint correction per missing entry. Cost O(M).
template <class Scalar>
ExtremeScores<Scalar> compute_extreme_scores(const PrimalDualSolution<Scalar>& sol,
                                             const IntervalMatrix<Scalar>& X,
                                             const MissingIndex& index) {
  detail::check_consistency(sol, X, index);
  const auto rows = index.rows();
  const auto cols = index.cols();
  ExtremeScores<Scalar> out;
  out.p_minus.resize(static_cast<Index>(rows.size()));
  out.p_plus.resize(static_cast<Index>(rows.size()));
  out.q_minus.resize(static_cast<Index>(cols.size()));
  out.q_plus.resize(static_cast<Index>(cols.size()));

  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    const auto missing_cols = index.cols_in_row_at(k);
    const Scalar base = sol.row_scores(i);
    Scalar down, up;
    if (missing_cols.size() > kCompensatedSumThreshold) {
      detail::KahanSum<Scalar> lo(base), hi(base);
      for (Index j : missing_cols) {
        detail::endpoint_corrections(sol.w(j), X.lower(i, j), X.upper(i, j), sol.imputed(i, j), down, up);
        lo.add(down);
        hi.add(up);
      }
      out.p_minus(static_cast<Index>(k)) = lo.value();
      out.p_plus(static_cast<Index>(k)) = hi.value();
    } else {
      Scalar lo = base, hi = base;
      for (Index j : missing_cols) {
        detail::endpoint_corrections(sol.w(j), X.lower(i, j), X.upper(i, j), sol.imputed(i, j), down, up);
        lo += down;
        hi += up;
      }
      out.p_minus(static_cast<Index>(k)) = lo;
      out.p_plus(static_cast<Index>(k)) = hi;
    }
  }

  for (std::size_t k = 0; k < cols.size(); ++k) {
    const Index j = cols[k];
    const auto missing_rows = index.rows_in_col_at(k);
    const Scalar base = sol.col_scores(j);
    Scalar down, up;
    if (missing_rows.size() > kCompensatedSumThreshold) {
      detail::KahanSum<Scalar> lo(base), hi(base);
      for (Index i : missing_rows) {
        detail::endpoint_corrections(sol.alpha(i), X.lower(i, j), X.upper(i, j), sol.imputed(i, j), down, up);
        lo.add(down);
        hi.add(up);
      }
      out.q_minus(static_cast<Index>(k)) = lo.value();
      out.q_plus(static_cast<Index>(k)) = hi.value();
    } else {
      Scalar lo = base, hi = base;
      for (Index i : missing_rows) {
        detail::endpoint_corrections(sol.alpha(i), X.lower(i, j), X.upper(i, j), sol.imputed(i, j), down, up);
        lo += down;
        hi += up;
      }
      out.q_minus(static_cast<Index>(k)) = lo;
      out.q_plus(static_cast<Index>(k)) = hi;
    }
  }
  return out;
}

/// Upper bound on  max_X'' P_X''(w') - min_X'' D_X''(alpha')  over every
/// imputation in the box. The residual gap of (w', alpha') on X' is added so
/// the bound stays valid for an inexact solver. Cost O(M) beyond the caches.
template <class Scalar>
DeltaBreakdown<Scalar> compute_delta(const ModelSpec<Scalar>& spec,
                                     const PrimalDualSolution<Scalar>& sol,
                                     const IntervalMatrix<Scalar>& X, const MissingIndex& index,
                                     const Vector<Scalar>& y) {
  if (y.size() != X.rows()) throw DimensionError("compute_delta: y length differs from X rows");
  DeltaBreakdown<Scalar> out;
  out.scores = compute_extreme_scores(sol, X, index);
  const Scalar n = static_cast<Scalar>(X.rows());
  const auto rows = index.rows();
  const auto cols = index.cols();
  const auto& sc = out.scores;

  Scalar loss_sum(0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    const Index kk = static_cast<Index>(k);
    const Scalar worst = std::max(loss_value(spec.loss, y(i), sc.p_minus(kk)),
                                  loss_value(spec.loss, y(i), sc.p_plus(kk)));
    loss_sum += detail::checked_summand(worst - loss_value(spec.loss, y(i), sol.row_scores(i)), "loss");
  }

  Scalar penalty_sum(0);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const Index j = cols[k];
    const Index kk = static_cast<Index>(k);
    const Scalar worst = std::max(penalty_conjugate_component(spec.penalty, sc.q_minus(kk) / n),
                                  penalty_conjugate_component(spec.penalty, sc.q_plus(kk) / n));
    penalty_sum += detail::checked_summand(
        worst - penalty_conjugate_component(spec.penalty, sol.col_scores(j) / n), "penalty");
  }

  out.loss_term = loss_sum / n;
  out.penalty_term = penalty_sum;
  out.residual_gap = sol.residual_gap;
  out.delta_total = out.loss_term + out.penalty_term + out.residual_gap;
  return out;
}

template <class Scalar>
DeltaBreakdown<Scalar> compute_delta(const ModelSpec<Scalar>& spec,
                                     const PrimalDualSolution<Scalar>& sol,
                                     const TrainingSet<Scalar>& ts) {
  return compute_delta(spec, sol, ts.X, ts.index, ts.y);
}

/// Ball centered at w' with radius sqrt(2 delta / lambda); contains every
/// model trainable from an imputation inside the box.
template <class Scalar>
UncertaintyBall<Scalar> uncertainty_ball(Scalar delta, Scalar lambda, const Vector<Scalar>& center) {
  if (!(lambda > Scalar(0))) throw Error("uncertainty_ball: lambda must be positive");
  if (delta < Scalar(0)) throw Error("uncertainty_ball: negative delta");
  return {center, delta, lambda, std::sqrt(Scalar(2) * delta / lambda)};
}

template <class Scalar>
UncertaintyBall<Scalar> uncertainty_ball(const DeltaBreakdown<Scalar>& delta, Scalar lambda,
                                         const Vector<Scalar>& center) {
  return uncertainty_ball(delta.delta_total, lambda, center);
}

template <class Scalar>
Scalar apply_link(Link link, Scalar v) {
  switch (link) {
    case Link::identity: return v;
    case Link::sign: return v > Scalar(0) ? Scalar(1) : (v < Scalar(0) ? Scalar(-1) : Scalar(0));
    case Link::sigmoid: {
      using std::exp;
      if (v >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-v));
      const Scalar e = exp(v);
      return e / (Scalar(1) + e);
    }
  }
  return v;
}

/// Label rule for a linear-score interval: strictly positive, strictly
/// negative, or unknown (an endpoint at exactly zero is unknown).
template <class Scalar>
Label classify_linear(Scalar lo, Scalar hi) {
  if (lo > Scalar(0)) return Label::positive;
  if (hi < Scalar(0)) return Label::negative;
  return Label::unknown;
}

/// Maps a linear-score interval through a monotone link.
template <class Scalar>
PredictionInterval<Scalar> make_prediction_interval(Scalar lo, Scalar hi, Link link) {
  PredictionInterval<Scalar> out;
  out.linear_lo = lo;
  out.linear_hi = hi;
  out.value_lo = apply_link(link, lo);
  out.value_hi = apply_link(link, hi);
  if (link != Link::identity) out.label = classify_linear(lo, hi);
  return out;
}

/// [w'.x - ||x|| r, w'.x + ||x|| r] mapped through the link. Cost O(d).
template <class Scalar, class Derived>
PredictionInterval<Scalar> predict_interval(const UncertaintyBall<Scalar>& ball,
                                            const Eigen::MatrixBase<Derived>& x, Link link) {
  if (x.size() != ball.center.size()) throw DimensionError("predict_interval: dimension mismatch");
  const Scalar center = ball.center.dot(x.derived().template cast<Scalar>());
  const Scalar spread = x.norm() * ball.radius;
  return make_prediction_interval(center - spread, center + spread, link);
}

template <class Scalar, class Derived>
Label classify_interval(const UncertaintyBall<Scalar>& ball, const Eigen::MatrixBase<Derived>& x) {
  const auto pi = predict_interval(ball, x, Link::identity);
  return classify_linear(pi.linear_lo, pi.linear_hi);
}

/// Delta and ball for an already trained solution.
template <class Scalar>
UncertaintyBall<Scalar> bound_ball(const ModelSpec<Scalar>& spec,
                                   const PrimalDualSolution<Scalar>& sol,
                                   const TrainingSet<Scalar>& ts,
                                   DeltaBreakdown<Scalar>* breakdown = nullptr) {
  DeltaBreakdown<Scalar> delta = compute_delta(spec, sol, ts);
  UncertaintyBall<Scalar> ball = uncertainty_ball(delta, spec.lambda(), sol.w);
  if (breakdown) *breakdown = std::move(delta);
  return ball;
}

}  // namespace ipub
