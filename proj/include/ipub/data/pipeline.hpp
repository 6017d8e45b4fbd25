#pragma once

#include <ipub/types.hpp>

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ipub::data {

class DataError : public Error {
 public:
  using Error::Error;
};

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Numeric feature table. Missing cells hold NaN in `values` and true in
/// `missing`.
struct Table {
  Matrix<double> values;
  Mask missing;
  Vector<double> y;
  std::vector<std::string> names;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  Index missing_count() const { return static_cast<Index>(missing.count()); }
};

struct CsvOptions {
  bool header = false;
  /// Column holding the label; negative counts from the end (-1 = last).
  int label_col = -1;
  std::vector<std::string> missing_markers{"NA", "", "?"};
};

Table parse_csv(std::string_view text, const CsvOptions& opts = {});
Table load_csv(const std::string& path, const CsvOptions& opts = {});

struct PipelineConfig {
  double test_fraction = 0.1;
  double clip_lo_pct = 0.5;
  double clip_hi_pct = 99.5;
  double missing_rate = 0.0;
  double coverage_alpha = 0.5;
  std::uint64_t seed = 0;
  /// Only features with more than this many distinct training values are
  /// clipped.
  int distinct_threshold = 10;

  void check() const;
};

/// Linear interpolation between order statistics ("type 7"). `sorted` must
/// be ascending and nonempty; p in [0, 1].
double quantile(const std::vector<double>& sorted, double p);

struct Split {
  Table train;
  Table test;
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
};

Split split(const Table& table, const PipelineConfig& cfg);

struct ClipBounds {
  Vector<double> lo;
  Vector<double> hi;
  std::vector<bool> applied;
};

/// Percentile bounds from the training table, applied to both tables in place.
ClipBounds clip_outliers(Table& train, Table& test, const PipelineConfig& cfg);

struct AffineMap {
  Vector<double> min;
  Vector<double> range;  // zero marks a constant feature, mapped to 0
};

AffineMap normalize(Table& train, Table& test);

struct Injection {
  struct Cell {
    Index row;
    Index col;
  };
  std::vector<Cell> cells;
  Vector<double> truth;  // original value of each injected cell
};

/// Marks exactly round(n d b) observed cells of `train` missing.
Injection inject_missing(Table& train, const PipelineConfig& cfg);

struct FeatureInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool used = false;
};

/// Missing cells of feature j get [Q_j((1-a)/2), Q_j((1+a)/2)] over the
/// observed values of j; observed cells get zero-width intervals.
IntervalMatrix<double> assign_intervals(const Table& train, double alpha,
                                        std::vector<FeatureInterval>* per_feature = nullptr);

/// Maps {0, 1} labels to {-1, +1} for classification losses; labels already
/// in {-1, +1} pass through.
void map_labels(Table& table, Loss loss);

struct PipelineResult {
  PipelineConfig config;
  TrainingSet<double> train;
  Matrix<double> x_test;
  Vector<double> y_test;
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
  ClipBounds clip;
  AffineMap affine;
  Injection injection;
  std::vector<FeatureInterval> intervals;
  Index native_missing = 0;
  /// Fraction of injected cells whose ground truth lies in its interval;
  /// NaN without injection. Quantile intervals need not cover the truth.
  double coverage = 0.0;
};

/// split -> clip -> normalize -> inject -> assign.
PipelineResult run_pipeline(const Table& raw, const PipelineConfig& cfg, Loss loss);

/// The same stages on an existing train/test pair (no split).
PipelineResult run_pipeline(Table train, Table test, const PipelineConfig& cfg, Loss loss);

nlohmann::json manifest(const PipelineResult& r);

/// Seeded logistic ground truth: features uniform on [0, 1], labels in
/// {-1, +1} drawn from sigma(w* . (x - 1/2)) with w* standard normal.
Table make_synthetic_logistic(Index n = 2000, Index d = 20, std::uint64_t seed = 0);

std::string to_csv(const Table& table);

}  // namespace ipub::data
