#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ipub {

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Label outside the loss's output domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DualInfeasibleError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Raised when an internal consistency check fails (weak duality violated,
/// caches out of sync with the data). Always a bug, never bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

enum class Loss { squared, hinge, logistic };
enum class PenaltyKind { l2, elastic_net };
enum class Link { identity, sign, sigmoid };

inline std::string_view to_string(Loss loss) {
  switch (loss) {
    case Loss::squared: return "squared";
    case Loss::hinge: return "hinge";
    case Loss::logistic: return "logistic";
  }
  return "?";
}

inline std::string_view to_string(PenaltyKind kind) {
  return kind == PenaltyKind::l2 ? "l2" : "elastic_net";
}

inline std::string_view to_string(Link link) {
  switch (link) {
    case Link::identity: return "identity";
    case Link::sign: return "sign";
    case Link::sigmoid: return "sigmoid";
  }
  return "?";
}

inline std::optional<Loss> parse_loss(std::string_view s) {
  if (s == "squared") return Loss::squared;
  if (s == "hinge") return Loss::hinge;
  if (s == "logistic") return Loss::logistic;
  return std::nullopt;
}

inline std::optional<PenaltyKind> parse_penalty(std::string_view s) {
  if (s == "l2") return PenaltyKind::l2;
  if (s == "elastic_net" || s == "elastic-net") return PenaltyKind::elastic_net;
  return std::nullopt;
}

inline Link default_link(Loss loss) {
  switch (loss) {
    case Loss::squared: return Link::identity;
    case Loss::hinge: return Link::sign;
    case Loss::logistic: return Link::sigmoid;
  }
  return Link::identity;
}

template <class Scalar>
struct Penalty {
  PenaltyKind kind = PenaltyKind::l2;
  Scalar lambda = Scalar(1);
  Scalar kappa = Scalar(0);

  static Penalty l2(Scalar lambda) { return {PenaltyKind::l2, lambda, Scalar(0)}; }
  static Penalty elastic_net(Scalar lambda, Scalar kappa) {
    return {PenaltyKind::elastic_net, lambda, kappa};
  }

  /// L1 weight actually in effect (zero for the pure L2 penalty).
  Scalar l1() const { return kind == PenaltyKind::elastic_net ? kappa : Scalar(0); }
};

template <class Scalar>
struct ModelSpec {
  Loss loss = Loss::squared;
  Penalty<Scalar> penalty;
  Link link = Link::identity;
  bool link_override = false;

  static ModelSpec make(Loss loss, Penalty<Scalar> penalty) {
    return {loss, penalty, default_link(loss), false};
  }
  static ModelSpec make(Loss loss, Penalty<Scalar> penalty, Link link) {
    return {loss, penalty, link, link != default_link(loss)};
  }

  Scalar lambda() const { return penalty.lambda; }
};

/// Elementwise box [lower, upper] around the training inputs. An entry is
/// missing iff lower < upper; observed entries carry lower == upper.
template <class Scalar>
class IntervalMatrix {
 public:
  IntervalMatrix() = default;

  IntervalMatrix(Matrix<Scalar> lower, Matrix<Scalar> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.rows() != upper_.rows() || lower_.cols() != upper_.cols())
      throw DimensionError("IntervalMatrix: lower and upper differ in shape");
  }

  static IntervalMatrix observed(const Matrix<Scalar>& x) { return IntervalMatrix(x, x); }

  const Matrix<Scalar>& lower() const { return lower_; }
  const Matrix<Scalar>& upper() const { return upper_; }
  Index rows() const { return lower_.rows(); }
  Index cols() const { return lower_.cols(); }

  Scalar lower(Index i, Index j) const { return lower_(i, j); }
  Scalar upper(Index i, Index j) const { return upper_(i, j); }
  bool is_missing(Index i, Index j) const { return lower_(i, j) < upper_(i, j); }

  /// Same box with every half-width multiplied by `t` around the midpoint.
  IntervalMatrix scaled(Scalar t) const {
    const Matrix<Scalar> mid = (lower_ + upper_) / Scalar(2);
    const Matrix<Scalar> half = (upper_ - lower_) / Scalar(2) * t;
    return IntervalMatrix(mid - half, mid + half);
  }

 private:
  Matrix<Scalar> lower_;
  Matrix<Scalar> upper_;
};

/// Positions of the missing entries, stored in compressed row and column
/// form so that every per-row / per-column list is a contiguous span.
/// Storage is linear in n + d + M.
class MissingIndex {
 public:
  struct Entry {
    Index row;
    Index col;
    bool operator==(const Entry&) const = default;
  };

  MissingIndex() = default;

  template <class Scalar>
  static MissingIndex build(const IntervalMatrix<Scalar>& x) {
    MissingIndex idx;
    idx.n_ = x.rows();
    idx.d_ = x.cols();
    std::vector<Index> col_count(static_cast<std::size_t>(idx.d_), 0);
    for (Index i = 0; i < idx.n_; ++i) {
      const std::size_t before = idx.entries_.size();
      for (Index j = 0; j < idx.d_; ++j) {
        if (x.is_missing(i, j)) {
          idx.entries_.push_back({i, j});
          idx.row_cols_.push_back(j);
          ++col_count[static_cast<std::size_t>(j)];
        }
      }
      if (idx.entries_.size() != before) {
        idx.rows_.push_back(i);
        idx.row_offsets_.push_back(static_cast<Index>(idx.entries_.size()));
      }
    }
    // Counting sort into column-major order; rows stay sorted within a column.
    std::vector<Index> slot(static_cast<std::size_t>(idx.d_), 0);
    for (Index j = 0; j < idx.d_; ++j) {
      if (col_count[static_cast<std::size_t>(j)] == 0) continue;
      slot[static_cast<std::size_t>(j)] = idx.col_offsets_.back();
      idx.cols_.push_back(j);
      idx.col_offsets_.push_back(idx.col_offsets_.back() + col_count[static_cast<std::size_t>(j)]);
    }
    idx.col_rows_.resize(idx.entries_.size());
    for (const Entry& e : idx.entries_)
      idx.col_rows_[static_cast<std::size_t>(slot[static_cast<std::size_t>(e.col)]++)] = e.row;
    return idx;
  }

  Index n() const { return n_; }
  Index d() const { return d_; }
  Index size() const { return static_cast<Index>(entries_.size()); }
  bool empty() const { return entries_.empty(); }

  /// Missing set in row-major order.
  std::span<const Entry> entries() const { return entries_; }
  /// Sorted rows that hold at least one missing entry.
  std::span<const Index> rows() const { return rows_; }
  /// Sorted columns that hold at least one missing entry.
  std::span<const Index> cols() const { return cols_; }

  /// Missing columns of the k-th row listed in rows().
  std::span<const Index> cols_in_row_at(std::size_t k) const {
    return std::span<const Index>(row_cols_).subspan(
        static_cast<std::size_t>(row_offsets_[k]),
        static_cast<std::size_t>(row_offsets_[k + 1] - row_offsets_[k]));
  }
  /// Missing rows of the k-th column listed in cols().
  std::span<const Index> rows_in_col_at(std::size_t k) const {
    return std::span<const Index>(col_rows_).subspan(
        static_cast<std::size_t>(col_offsets_[k]),
        static_cast<std::size_t>(col_offsets_[k + 1] - col_offsets_[k]));
  }

  std::span<const Index> cols_of_row(Index i) const {
    auto it = std::lower_bound(rows_.begin(), rows_.end(), i);
    if (it == rows_.end() || *it != i) return {};
    return cols_in_row_at(static_cast<std::size_t>(it - rows_.begin()));
  }
  std::span<const Index> rows_of_col(Index j) const {
    auto it = std::lower_bound(cols_.begin(), cols_.end(), j);
    if (it == cols_.end() || *it != j) return {};
    return rows_in_col_at(static_cast<std::size_t>(it - cols_.begin()));
  }

  /// Number of stored index values across all containers.
  std::size_t storage_size() const {
    return 2 * entries_.size() + rows_.size() + row_offsets_.size() + row_cols_.size() +
           cols_.size() + col_offsets_.size() + col_rows_.size();
  }

 private:
  Index n_ = 0;
  Index d_ = 0;
  std::vector<Entry> entries_;
  std::vector<Index> rows_;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> row_cols_;
  std::vector<Index> cols_;
  std::vector<Index> col_offsets_{0};
  std::vector<Index> col_rows_;
};

template <class Scalar>
MissingIndex build_missing_index(const IntervalMatrix<Scalar>& x) {
  return MissingIndex::build(x);
}

template <class Scalar>
struct TrainingSet {
  IntervalMatrix<Scalar> X;
  MissingIndex index;
  Vector<Scalar> y;

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
};

template <class Scalar>
TrainingSet<Scalar> make_training_set(IntervalMatrix<Scalar> x, Vector<Scalar> y) {
  if (x.rows() != y.size()) throw DimensionError("training set: X rows differ from y length");
  MissingIndex index = build_missing_index(x);
  return {std::move(x), std::move(index), std::move(y)};
}

enum class SolverKind { newton, proximal_newton, dual_coordinate_descent };

/// Trained primal/dual pair for one concrete imputation X', together with
/// the inner products the bound needs.
template <class Scalar>
struct PrimalDualSolution {
  Vector<Scalar> w;
  Vector<Scalar> alpha;
  Vector<Scalar> row_scores;  // w' . x'_i
  Vector<Scalar> col_scores;  // alpha' . x'_j
  Scalar residual_gap = Scalar(0);
  Matrix<Scalar> imputed;
  bool converged = false;
  int iterations = 0;
  SolverKind solver = SolverKind::newton;
  /// Primal objective per accepted iteration (Newton-type solvers) or dual
  /// objective per epoch (coordinate descent).
  std::vector<Scalar> objective_history;
};

template <class Scalar>
struct UncertaintyBall {
  Vector<Scalar> center;
  Scalar delta = Scalar(0);
  Scalar lambda = Scalar(1);
  Scalar radius = Scalar(0);
};

enum class Label { positive, negative, unknown };

inline std::string_view to_string(Label l) {
  switch (l) {
    case Label::positive: return "+1";
    case Label::negative: return "-1";
    case Label::unknown: return "unknown";
  }
  return "?";
}

template <class Scalar>
struct PredictionInterval {
  Scalar linear_lo = Scalar(0);
  Scalar linear_hi = Scalar(0);
  Scalar value_lo = Scalar(0);
  Scalar value_hi = Scalar(0);
  std::optional<Label> label;

  Scalar length() const { return value_hi - value_lo; }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

template <class Scalar>
bool label_in_domain(Loss loss, Scalar y) {
  if (!std::isfinite(y)) return false;
  if (loss == Loss::squared) return true;
  return y == Scalar(1) || y == Scalar(-1);
}

template <class Scalar>
ValidationReport validate(const TrainingSet<Scalar>& ts, const ModelSpec<Scalar>& spec) {
  ValidationReport r;
  auto add = [&r](std::string s) { r.violations.push_back(std::move(s)); };
  const auto& X = ts.X;
  if (X.rows() != ts.y.size()) add("dimension mismatch: X has " + std::to_string(X.rows()) +
                                   " rows, y has " + std::to_string(ts.y.size()));
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      const Scalar lo = X.lower(i, j), hi = X.upper(i, j);
      const std::string at = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      if (!std::isfinite(lo) || !std::isfinite(hi)) add("non-finite value at " + at);
      else if (lo > hi) add("interval ordering at " + at);
    }
  }
  for (Index i = 0; i < ts.y.size(); ++i)
    if (!label_in_domain(spec.loss, ts.y(i)))
      add("label domain at " + std::to_string(i) + " for " + std::string(to_string(spec.loss)) + " loss");
  if (!(spec.penalty.lambda > Scalar(0))) add("lambda must be positive");
  if (!(spec.penalty.kappa >= Scalar(0))) add("kappa must be nonnegative");
  if (!spec.link_override && spec.link != default_link(spec.loss))
    add("link " + std::string(to_string(spec.link)) + " inconsistent with " +
        std::string(to_string(spec.loss)) + " loss");
  return r;
}

}  // namespace ipub
