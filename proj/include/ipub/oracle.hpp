#pragma once

#include <ipub/bound.hpp>
#include <ipub/rng.hpp>
#include <ipub/solver.hpp>

#include <cstdint>
#include <limits>
#include <vector>

namespace ipub {

struct OracleBudget {
  /// All 2^M corners are enumerated iff M <= max_corner_bits.
  int max_corner_bits = 10;
  /// Random corners drawn when M exceeds max_corner_bits.
  int corner_samples = 64;
  int interior_samples = 50;
  std::uint64_t seed = 0;

  void check() const {
    if (max_corner_bits < 0 || max_corner_bits > 20)
      throw Error("OracleBudget: max_corner_bits must lie in [0, 20]");
    if (corner_samples < 0 || interior_samples < 0) throw Error("OracleBudget: negative sample count");
  }
};

enum class ImputationKind { observed, corner, interior };

/// Calls visit(k, kind, X'') for each imputation the budget selects, in a
/// fixed order: corners first (binary-counter order when exhaustive), then
/// interior draws. Deterministic under budget.seed. With M = 0 the observed
/// matrix is the only imputation.
template <class Scalar, class Visitor>
void for_each_imputation(const IntervalMatrix<Scalar>& X, const MissingIndex& index,
                         const OracleBudget& budget, Visitor&& visit, bool corners_only = false) {
  budget.check();
  const auto entries = index.entries();
  const std::size_t M = entries.size();
  Matrix<Scalar> work = X.lower();
  if (M == 0) {
    visit(std::size_t{0}, ImputationKind::observed, static_cast<const Matrix<Scalar>&>(work));
    return;
  }
  Rng rng(budget.seed);
  std::size_t k = 0;
  if (M <= static_cast<std::size_t>(budget.max_corner_bits)) {
    const std::uint64_t total = std::uint64_t{1} << M;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      for (std::size_t e = 0; e < M; ++e) {
        const auto [i, j] = entries[e];
        work(i, j) = (mask >> e) & 1u ? X.upper(i, j) : X.lower(i, j);
      }
      visit(k++, ImputationKind::corner, static_cast<const Matrix<Scalar>&>(work));
    }
  } else {
    for (int s = 0; s < budget.corner_samples; ++s) {
      for (std::size_t e = 0; e < M; ++e) {
        const auto [i, j] = entries[e];
        work(i, j) = rng.coin() ? X.upper(i, j) : X.lower(i, j);
      }
      visit(k++, ImputationKind::corner, static_cast<const Matrix<Scalar>&>(work));
    }
  }
  if (corners_only) return;
  for (int s = 0; s < budget.interior_samples; ++s) {
    for (std::size_t e = 0; e < M; ++e) {
      const auto [i, j] = entries[e];
      work(i, j) = static_cast<Scalar>(rng.uniform(static_cast<double>(X.lower(i, j)),
                                                   static_cast<double>(X.upper(i, j))));
    }
    visit(k++, ImputationKind::interior, static_cast<const Matrix<Scalar>&>(work));
  }
}

template <class Scalar>
std::vector<Matrix<Scalar>> enumerate_imputations(const IntervalMatrix<Scalar>& X,
                                                  const MissingIndex& index,
                                                  const OracleBudget& budget) {
  std::vector<Matrix<Scalar>> out;
  for_each_imputation(X, index, budget,
                      [&out](std::size_t, ImputationKind, const Matrix<Scalar>& m) { out.push_back(m); });
  return out;
}

template <class Scalar>
struct OracleRecord {
  std::size_t index = 0;
  ImputationKind kind = ImputationKind::observed;
  bool converged = false;
  Vector<Scalar> w;
  Scalar residual_gap = Scalar(0);
};

/// Empirical range of g(w''.x) over the retrained models, one entry per test
/// row. An inner approximation of the true range.
template <class Scalar>
struct OracleRange {
  Vector<Scalar> min;
  Vector<Scalar> max;
  std::vector<OracleRecord<Scalar>> records;

  bool all_converged() const {
    for (const auto& r : records)
      if (!r.converged) return false;
    return true;
  }
};

template <class Scalar>
OracleRange<Scalar> oracle_prediction_range(const ModelSpec<Scalar>& spec, const TrainingSet<Scalar>& ts,
                                            const Matrix<Scalar>& x_test, const OracleBudget& budget,
                                            const SolverConfig& cfg = {}) {
  if (x_test.cols() != ts.d()) throw DimensionError("oracle_prediction_range: test width mismatch");
  OracleRange<Scalar> out;
  out.min = Vector<Scalar>::Constant(x_test.rows(), std::numeric_limits<Scalar>::infinity());
  out.max = Vector<Scalar>::Constant(x_test.rows(), -std::numeric_limits<Scalar>::infinity());
  for_each_imputation(ts.X, ts.index, budget,
                      [&](std::size_t k, ImputationKind kind, const Matrix<Scalar>& Xk) {
                        PrimalDualSolution<Scalar> sol = train(spec, Xk, ts.y, cfg);
                        const Vector<Scalar> scores = x_test * sol.w;
                        for (Index t = 0; t < x_test.rows(); ++t) {
                          const Scalar v = apply_link(spec.link, scores(t));
                          out.min(t) = std::min(out.min(t), v);
                          out.max(t) = std::max(out.max(t), v);
                        }
                        out.records.push_back({k, kind, sol.converged, sol.w, sol.residual_gap});
                      });
  return out;
}

template <class Scalar>
struct OracleDelta {
  Scalar max_P_minus_P = Scalar(0);  // max over corners of P_X''(w') - P_X'(w')
  Scalar D_minus_min_D = Scalar(0);  // D_X'(alpha') - min over corners of D_X''(alpha')
  bool exhaustive = true;
  std::size_t corners = 0;
};

/// Brute-force counterpart of compute_delta's loss and penalty terms: full
/// primal and dual objectives evaluated on every corner imputation.
template <class Scalar>
OracleDelta<Scalar> oracle_delta(const ModelSpec<Scalar>& spec, const PrimalDualSolution<Scalar>& sol,
                                 const IntervalMatrix<Scalar>& X, const MissingIndex& index,
                                 const Vector<Scalar>& y, const OracleBudget& budget) {
  const Scalar P0 = primal_objective(spec, sol.imputed, y, sol.w);
  const Scalar D0 = dual_objective(spec, sol.imputed, y, sol.alpha);
  OracleDelta<Scalar> out;
  out.exhaustive = index.size() <= budget.max_corner_bits;
  if (index.empty()) return out;
  Scalar max_p = -std::numeric_limits<Scalar>::infinity();
  Scalar min_d = std::numeric_limits<Scalar>::infinity();
  for_each_imputation(
      X, index, budget,
      [&](std::size_t, ImputationKind, const Matrix<Scalar>& Xk) {
        max_p = std::max(max_p, primal_objective(spec, Xk, y, sol.w));
        min_d = std::min(min_d, dual_objective(spec, Xk, y, sol.alpha));
        ++out.corners;
      },
      /*corners_only=*/true);
  out.max_P_minus_P = max_p - P0;
  out.D_minus_min_D = D0 - min_d;
  return out;
}

}  // namespace ipub
