#pragma once

#include <ipub/data/pipeline.hpp>
#include <ipub/oracle.hpp>
#include <ipub/solver.hpp>

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ipub::harness {

enum ExitCode : int { kOk = 0, kValidation = 1, kViolation = 2 };

struct ModelOptions {
  Loss loss = Loss::logistic;
  PenaltyKind penalty = PenaltyKind::l2;
  double lambda = 1.0;
  double kappa = 0.0;
  double tol = 1e-8;

  ModelSpec<double> spec() const;
  SolverConfig solver() const;
};

/// Trains on the midpoint imputation of the pipeline output and bounds every
/// test row. Output fields are fixed; see README for the schema.
nlohmann::json run_bound(const data::PipelineResult& data, const ModelOptions& model);

struct ExperimentOptions {
  std::vector<double> b{0.01, 0.001};
  std::vector<double> alpha{0.5, 0.9};
  std::vector<double> lambda{0.1, 1.0};
  double bin_width = 0.02;
  int repeats = 5;
  int inewton_max_iter = 20;
  double tol = 1e-8;
  /// Test rows (evenly spaced) checked against the retraining oracle; 0 skips it.
  int oracle_points = 0;
  OracleBudget budget{};
  data::PipelineConfig pipeline{};
};

struct PointRecord {
  Index id = 0;
  double point_prediction = 0.0;
  double ipub_lo = 0.0, ipub_hi = 0.0;
  double inewton_lo = 0.0, inewton_hi = 0.0;
  std::optional<double> oracle_min, oracle_max;
};

struct Timing {
  double train_seconds = 0.0;
  double ipub_seconds = 0.0;     // train + delta + all test intervals
  double inewton_seconds = 0.0;  // enclosure + all test intervals
  double ratio = 0.0;            // inewton / ipub
};

struct Histogram {
  std::vector<double> edges;  // bins [edges[k], edges[k+1]); the last bin is closed
  std::vector<double> ipub;
  std::vector<double> inewton;
};

struct CellResult {
  double b = 0.0, alpha = 0.0, lambda = 0.0;
  std::string error;  // nonempty when the cell failed
  Index missing = 0;
  double delta = 0.0, radius = 0.0;
  bool inewton_verified = false, inewton_contracted = false;
  int inewton_doublings = 0, inewton_iterations = 0;
  std::vector<PointRecord> records;
  Timing timing;
  double ipub_median = 0.0, inewton_median = 0.0;
  Histogram hist;
  int oracle_checked = 0, oracle_ipub_misses = 0, oracle_inewton_misses = 0;

  bool ok() const { return error.empty(); }
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  nlohmann::json manifest;  // from the first grid cell's pipeline run
};

CellResult run_cell(const data::Table& raw, double b, double alpha, double lambda,
                    const ExperimentOptions& opts);
ExperimentResult run_experiment(const data::Table& raw, const ExperimentOptions& opts);

Histogram make_histogram(const std::vector<double>& ipub, const std::vector<double>& inewton, double width);
double median(std::vector<double> v);

nlohmann::json to_json(const ExperimentResult& r, const ExperimentOptions& opts);
/// Columns: b, alpha, lambda, method, bin_lo, bin_hi, mass.
std::string histogram_csv(const ExperimentResult& r);

struct SmallInstance {
  std::uint64_t seed = 0;
  ModelSpec<double> spec;
  TrainingSet<double> train;
  Matrix<double> x_test;
};

/// Loss/penalty combination `combo` in [0, 6): loss = combo / 2, penalty =
/// combo % 2 (l2, elastic net). n <= 30, d <= 5, M <= 8, lambda in [0.1, 2].
SmallInstance make_small_instance(std::uint64_t seed, int combo);

struct OracleCheckOptions {
  int instances = 200;
  std::uint64_t seed = 1;
  /// Debug hook: multiplies the IPUB radius before checking containment.
  double radius_scale = 1.0;
  double slack = 1e-7;
  double delta_tol = 1e-10;
  int test_points = 5;
  OracleBudget budget{};
  double tol = 1e-8;
};

struct OracleCheckReport {
  int instances = 0;
  long imputations = 0;
  int nonconverged = 0;
  int containment_violations = 0;
  int delta_violations = 0;
  int shrink_violations = 0;
  double max_delta_error = 0.0;
  /// Largest ratio of the oracle's prediction spread to the IPUB interval length.
  double max_tightness = 0.0;
  std::vector<std::string> messages;  // first violations, each naming its seed

  bool ok() const { return containment_violations == 0 && delta_violations == 0 && shrink_violations == 0; }
};

OracleCheckReport run_oracle_check(const OracleCheckOptions& opts);
nlohmann::json to_json(const OracleCheckReport& r);

}  // namespace ipub::harness
