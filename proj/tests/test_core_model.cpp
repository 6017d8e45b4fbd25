#include <doctest.h>

#include <ipub/rng.hpp>
#include <ipub/types.hpp>

#include <algorithm>
#include <limits>
#include <set>
#include <vector>

using namespace ipub;
using Mat = Matrix<double>;
using Vec = Vector<double>;

namespace {

bool has_violation(const ValidationReport& r, const std::string& needle) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

std::vector<Index> to_vec(std::span<const Index> s) { return {s.begin(), s.end()}; }

IntervalMatrix<double> with_missing(Index n, Index d, const std::vector<std::pair<Index, Index>>& cells) {
  Mat lo = Mat::Zero(n, d), hi = Mat::Zero(n, d);
  for (auto [i, j] : cells) hi(i, j) = 1.0;
  return {lo, hi};
}

}  // namespace

TEST_SUITE("core-model") {

TEST_CASE("fully observed hinge set validates") {
  Mat x(2, 2);
  x << 1, 2, 3, 4;
  Vec y(2);
  y << 1, -1;
  auto ts = make_training_set(IntervalMatrix<double>::observed(x), y);
  CHECK(validate(ts, ModelSpec<double>::make(Loss::hinge, Penalty<double>::l2(1.0))).ok());
}

TEST_CASE("reversed interval is reported with its position") {
  Mat lo = Mat::Zero(2, 2), hi = Mat::Zero(2, 2);
  lo(1, 0) = 1.0;
  Vec y = Vec::Ones(2);
  auto ts = make_training_set(IntervalMatrix<double>(lo, hi), y);
  const auto r = validate(ts, ModelSpec<double>::make(Loss::squared, Penalty<double>::l2(1.0)));
  CHECK(has_violation(r, "interval ordering at (1,0)"));
}

TEST_CASE("fractional label is outside the logistic domain") {
  Mat x = Mat::Ones(2, 1);
  Vec y(2);
  y << 1, 0.5;
  auto ts = make_training_set(IntervalMatrix<double>::observed(x), y);
  CHECK(has_violation(validate(ts, ModelSpec<double>::make(Loss::logistic, Penalty<double>::l2(1.0))),
                      "label domain"));
  // Any real label is fine for the squared loss.
  CHECK(validate(ts, ModelSpec<double>::make(Loss::squared, Penalty<double>::l2(1.0))).ok());
}

TEST_CASE("validation reports non-finite values, bad lambda and a mismatched link") {
  Mat x = Mat::Ones(2, 1);
  x(0, 0) = std::numeric_limits<double>::infinity();
  Vec y = Vec::Ones(2);
  auto ts = make_training_set(IntervalMatrix<double>::observed(x), y);
  CHECK(has_violation(validate(ts, ModelSpec<double>::make(Loss::squared, Penalty<double>::l2(1.0))),
                      "non-finite"));
  Mat ok = Mat::Ones(2, 1);
  auto ts2 = make_training_set(IntervalMatrix<double>::observed(ok), y);
  CHECK(has_violation(validate(ts2, ModelSpec<double>::make(Loss::squared, Penalty<double>::l2(0.0))), "lambda"));
  ModelSpec<double> bad = ModelSpec<double>::make(Loss::squared, Penalty<double>::l2(1.0));
  bad.link = Link::sigmoid;
  CHECK(has_violation(validate(ts2, bad), "link"));
  // The same link is accepted when the override is explicit.
  CHECK(validate(ts2, ModelSpec<double>::make(Loss::squared, Penalty<double>::l2(1.0), Link::sigmoid)).ok());
}

TEST_CASE("default links follow the loss") {
  CHECK(default_link(Loss::squared) == Link::identity);
  CHECK(default_link(Loss::hinge) == Link::sign);
  CHECK(default_link(Loss::logistic) == Link::sigmoid);
  CHECK(parse_loss("hinge") == Loss::hinge);
  CHECK_FALSE(parse_loss("huber").has_value());
  CHECK(parse_penalty("elastic_net") == PenaltyKind::elastic_net);
}

TEST_CASE("interval matrix rejects shape mismatch") {
  CHECK_THROWS_AS(IntervalMatrix<double>(Mat::Zero(2, 2), Mat::Zero(2, 3)), DimensionError);
  CHECK_THROWS_AS(make_training_set(IntervalMatrix<double>::observed(Mat::Zero(2, 2)), Vec(Vec::Zero(3))),
                  DimensionError);
}

TEST_CASE("zero-width entry counts as observed") {
  Mat lo = Mat::Zero(2, 2), hi = Mat::Zero(2, 2);
  lo(0, 1) = hi(0, 1) = 0.3;
  IntervalMatrix<double> X(lo, hi);
  CHECK_FALSE(X.is_missing(0, 1));
  CHECK(build_missing_index(X).empty());
}

TEST_CASE("scaled box keeps the midpoint") {
  Mat lo(1, 2), hi(1, 2);
  lo << 0, 2;
  hi << 4, 2;
  const auto s = IntervalMatrix<double>(lo, hi).scaled(0.5);
  CHECK(s.lower(0, 0) == doctest::Approx(1.0));
  CHECK(s.upper(0, 0) == doctest::Approx(3.0));
  CHECK(s.lower(0, 1) == 2.0);
  CHECK(s.upper(0, 1) == 2.0);
}

TEST_CASE("index of a fully observed matrix is empty") {
  const auto idx = build_missing_index(with_missing(3, 4, {}));
  CHECK(idx.size() == 0);
  CHECK(idx.rows().empty());
  CHECK(idx.cols().empty());
  CHECK(idx.entries().empty());
}

TEST_CASE("single missing entry") {
  const auto idx = build_missing_index(with_missing(4, 5, {{2, 3}}));
  CHECK(idx.size() == 1);
  CHECK(to_vec(idx.rows()) == std::vector<Index>{2});
  CHECK(to_vec(idx.cols()) == std::vector<Index>{3});
  CHECK(to_vec(idx.rows_of_col(3)) == std::vector<Index>{2});
  CHECK(to_vec(idx.cols_of_row(2)) == std::vector<Index>{3});
}

TEST_CASE("three by three example") {
  // Expected lists enumerated by hand from the definition.
  const auto idx = build_missing_index(with_missing(3, 3, {{0, 0}, {0, 2}, {1, 0}}));
  CHECK(idx.size() == 3);
  CHECK(to_vec(idx.rows()) == std::vector<Index>{0, 1});
  CHECK(to_vec(idx.cols()) == std::vector<Index>{0, 2});
  CHECK(to_vec(idx.rows_of_col(0)) == std::vector<Index>{0, 1});
  CHECK(to_vec(idx.rows_of_col(2)) == std::vector<Index>{0});
  CHECK(to_vec(idx.cols_of_row(0)) == std::vector<Index>{0, 2});
  CHECK(to_vec(idx.cols_of_row(1)) == std::vector<Index>{0});
  CHECK(idx.cols_of_row(2).empty());
  CHECK(idx.rows_of_col(1).empty());
}

TEST_CASE("index round-trips the mask and stays linear in n + d + M") {
  Rng rng(42);
  for (int rep = 0; rep < 1000; ++rep) {
    const Index n = 1 + static_cast<Index>(rng.below(12));
    const Index d = 1 + static_cast<Index>(rng.below(12));
    const double p = rng.uniform();
    Mat lo = Mat::Zero(n, d), hi = Mat::Zero(n, d);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) {
        mask(i, j) = rng.uniform() < p;
        lo(i, j) = rng.normal();
        hi(i, j) = mask(i, j) ? lo(i, j) + 0.1 + rng.uniform() : lo(i, j);
      }
    const auto idx = build_missing_index(IntervalMatrix<double>(lo, hi));

    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> from_rows = decltype(mask)::Constant(n, d, false);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> from_cols = from_rows;
    for (std::size_t k = 0; k < idx.rows().size(); ++k)
      for (Index j : idx.cols_in_row_at(k)) from_rows(idx.rows()[k], j) = true;
    for (std::size_t k = 0; k < idx.cols().size(); ++k)
      for (Index i : idx.rows_in_col_at(k)) from_cols(i, idx.cols()[k]) = true;
    REQUIRE(from_rows == mask);
    REQUIRE(from_cols == mask);
    REQUIRE(idx.size() == mask.count());
    REQUIRE(std::is_sorted(idx.rows().begin(), idx.rows().end()));
    REQUIRE(std::is_sorted(idx.cols().begin(), idx.cols().end()));
    // The per-row lists partition the missing set: sizes add up to M.
    std::size_t total = 0;
    for (std::size_t k = 0; k < idx.rows().size(); ++k) total += idx.cols_in_row_at(k).size();
    REQUIRE(total == static_cast<std::size_t>(idx.size()));
    REQUIRE(idx.storage_size() <= static_cast<std::size_t>(4 * (n + d + idx.size()) + 2));
  }
}

}  // TEST_SUITE
