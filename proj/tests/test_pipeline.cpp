#include <doctest.h>

#include "oracles.hpp"

#include <ipub/data/pipeline.hpp>
#include <ipub/rng.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

using namespace ipub;
using namespace ipub::data;

namespace {

Table column_table(const std::vector<double>& col) {
  Table t;
  const auto n = static_cast<Index>(col.size());
  t.values.resize(n, 1);
  t.missing.setConstant(n, 1, false);
  t.y.setOnes(n);
  for (Index i = 0; i < n; ++i) t.values(i, 0) = col[static_cast<std::size_t>(i)];
  return t;
}

Table empty_like(const Table& t) {
  Table e;
  e.values.resize(0, t.cols());
  e.missing.resize(0, t.cols());
  e.y.resize(0);
  return e;
}

}  // namespace

TEST_SUITE("data-pipeline") {

TEST_CASE("csv parsing") {
  const auto t = parse_csv("1.0,2.0,+1\n");
  CHECK(t.rows() == 1);
  CHECK(t.cols() == 2);
  CHECK(t.y(0) == 1.0);
  CHECK(t.values(0, 1) == 2.0);

  const auto m = parse_csv("NA,2,0\n?,,1\n3,4,1\n");
  CHECK(m.missing(0, 0));
  CHECK(m.missing(1, 0));
  CHECK(m.missing(1, 1));
  CHECK_FALSE(m.missing(2, 0));
  CHECK(std::isnan(m.values(0, 0)));
  CHECK(m.missing_count() == 3);

  CsvOptions h;
  h.header = true;
  const auto named = parse_csv("a,b,label\n1,2,0\n", h);
  CHECK(named.rows() == 1);
  CHECK(named.names == std::vector<std::string>{"a", "b"});

  CsvOptions first;
  first.label_col = 0;
  const auto lf = parse_csv("-1,5,6\n", first);
  CHECK(lf.y(0) == -1.0);
  CHECK(lf.values(0, 0) == 5.0);
}

TEST_CASE("csv errors") {
  CHECK_THROWS_AS(parse_csv("1,2,3\n4,5\n"), DataError);
  CHECK_THROWS_AS(parse_csv("1,abc,1\n"), DataError);
  CHECK_THROWS_AS(parse_csv(""), DataError);
  CHECK_THROWS_AS(parse_csv("1,2,NA\n"), DataError);  // label must be numeric
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DataError);
  const std::string path = "ipub_empty_test.csv";
  { std::ofstream(path) << "\n\n"; }
  CHECK_THROWS_AS(load_csv(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("csv round trip") {
  const Table t = make_synthetic_logistic(20, 3, 5);
  CsvOptions h;
  h.header = true;
  const Table u = parse_csv(to_csv(t), h);
  CHECK(u.values == t.values);
  CHECK(u.names == t.names);
  CHECK(u.y == t.y);
}

TEST_CASE("config invariants") {
  PipelineConfig c;
  CHECK_NOTHROW(c.check());
  c.test_fraction = 1.0;
  CHECK_THROWS_AS(c.check(), DataError);
  c = {};
  c.missing_rate = 1.5;
  CHECK_THROWS_AS(c.check(), DataError);
  c = {};
  c.clip_lo_pct = 99.5;
  c.clip_hi_pct = 0.5;
  CHECK_THROWS_AS(c.check(), DataError);
}

TEST_CASE("quantile matches the order-statistic definition") {
  Rng rng(51);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v(1 + rng.below(30));
    for (auto& x : v) x = rng.normal();
    const double p = rng.uniform();
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    REQUIRE(quantile(s, p) == doctest::Approx(oracle::type7(v, p)).epsilon(1e-14));
  }
}

TEST_CASE("split") {
  std::vector<double> col(10);
  std::iota(col.begin(), col.end(), 0.0);
  const Table t = column_table(col);
  PipelineConfig cfg;
  const auto s = split(t, cfg);
  CHECK(s.test.rows() == 1);
  CHECK(s.train.rows() == 9);
  std::set<Index> all(s.train_rows.begin(), s.train_rows.end());
  all.insert(s.test_rows.begin(), s.test_rows.end());
  CHECK(all.size() == 10);
  const auto s2 = split(t, cfg);
  CHECK(s2.test_rows == s.test_rows);
  // Row contents follow their indices.
  CHECK(s.test.values(0, 0) == static_cast<double>(s.test_rows[0]));
  CHECK_THROWS_AS(split(column_table({1.0}), cfg), DataError);
}

TEST_CASE("clipping") {
  std::vector<double> col(200);
  std::iota(col.begin(), col.end(), 0.0);
  Table train = column_table(col);
  Table test = column_table({-50.0, 100.0, 1000.0});
  PipelineConfig cfg;
  const double lo = oracle::type7(col, 0.005), hi = oracle::type7(col, 0.995);
  CHECK(lo == doctest::Approx(0.995));
  CHECK(hi == doctest::Approx(198.005));
  const auto b = clip_outliers(train, test, cfg);
  CHECK(b.applied[0]);
  CHECK(b.lo(0) == doctest::Approx(lo));
  CHECK(b.hi(0) == doctest::Approx(hi));
  CHECK(train.values(0, 0) == doctest::Approx(lo));
  CHECK(train.values(199, 0) == doctest::Approx(hi));
  CHECK(train.values(100, 0) == 100.0);
  CHECK(test.values(0, 0) == doctest::Approx(lo));
  CHECK(test.values(2, 0) == doctest::Approx(hi));

  Table same = column_table(std::vector<double>(50, 3.0));
  Table none = empty_like(same);
  const auto b2 = clip_outliers(same, none, cfg);
  CHECK_FALSE(b2.applied[0]);
  CHECK((same.values.array() == 3.0).all());

  Table gone = column_table({1.0, 2.0});
  gone.missing.setConstant(true);
  Table g2 = empty_like(gone);
  CHECK_THROWS_AS(clip_outliers(gone, g2, cfg), DataError);
}

TEST_CASE("few distinct values are not clipped") {
  std::vector<double> col;
  for (int k = 0; k < 100; ++k) col.push_back(k % 10);
  col.push_back(1000.0);  // 11 distinct: clipped
  Table a = column_table(col), ae = empty_like(a);
  CHECK(clip_outliers(a, ae, PipelineConfig{}).applied[0]);
  col.back() = 9.0;  // 10 distinct: kept
  Table b = column_table(col), be = empty_like(b);
  CHECK_FALSE(clip_outliers(b, be, PipelineConfig{}).applied[0]);
}

TEST_CASE("normalization") {
  Table train = column_table({2.0, 4.0});
  Table test = column_table({3.0, 6.0});
  const auto m = normalize(train, test);
  CHECK(m.min(0) == 2.0);
  CHECK(m.range(0) == 2.0);
  CHECK(train.values(0, 0) == 0.0);
  CHECK(train.values(1, 0) == 1.0);
  CHECK(test.values(0, 0) == 0.5);
  CHECK(test.values(1, 0) == 2.0);  // the affine map, not a clip, can leave [0, 1]

  Table c = column_table({7.0, 7.0, 7.0}), ct = column_table({9.0});
  normalize(c, ct);
  CHECK((c.values.array() == 0.0).all());
  CHECK(ct.values(0, 0) == 0.0);

  Table unit = column_table({0.0, 0.25, 1.0}), ut = empty_like(unit);
  normalize(unit, ut);
  CHECK(unit.values(1, 0) == doctest::Approx(0.25));
}

TEST_CASE("missing-entry injection") {
  Table t;
  t.values = Matrix<double>::Random(100, 10);
  t.missing.setConstant(100, 10, false);
  t.y.setOnes(100);
  PipelineConfig cfg;
  Table none = t;
  CHECK(inject_missing(none, cfg).cells.empty());
  CHECK(none.missing_count() == 0);

  cfg.missing_rate = 0.01;
  cfg.seed = 7;
  Table a = t, b = t;
  const auto ia = inject_missing(a, cfg);
  const auto ib = inject_missing(b, cfg);
  CHECK(ia.cells.size() == 10);
  CHECK(a.missing_count() == 10);
  CHECK(a.missing == b.missing);
  for (std::size_t k = 0; k < ia.cells.size(); ++k)
    CHECK(ia.truth(static_cast<Index>(k)) == t.values(ia.cells[k].row, ia.cells[k].col));

  cfg.seed = 8;
  Table c = t;
  inject_missing(c, cfg);
  CHECK(c.missing != a.missing);

  Table small = column_table({1.0, 2.0});
  small.missing(0, 0) = true;
  cfg.missing_rate = 1.0;
  CHECK_THROWS_AS(inject_missing(small, cfg), DataError);
}

TEST_CASE("quantile intervals") {
  std::vector<double> col;
  for (int k = 0; k <= 9; ++k) col.push_back(k / 9.0);
  Table t = column_table(col);
  t.values.conservativeResize(11, 1);
  t.missing.conservativeResize(11, 1);
  t.y.conservativeResize(11);
  t.values(10, 0) = std::nan("");
  t.missing(10, 0) = true;
  t.y(10) = 1.0;

  std::vector<FeatureInterval> f;
  const auto X = assign_intervals(t, 0.5, &f);
  const double qlo = oracle::type7(col, 0.25), qhi = oracle::type7(col, 0.75);
  CHECK(qlo == doctest::Approx(0.25));
  CHECK(qhi == doctest::Approx(0.75));
  CHECK(X.lower(10, 0) == doctest::Approx(qlo));
  CHECK(X.upper(10, 0) == doctest::Approx(qhi));
  CHECK(f[0].used);
  CHECK(X.lower(3, 0) == X.upper(3, 0));
  CHECK(X.lower(3, 0) == col[3]);

  const auto wide = assign_intervals(t, 1.0 - 1e-12);
  CHECK(wide.lower(10, 0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(wide.upper(10, 0) == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(assign_intervals(t, 1.0), DataError);
  Table lone = column_table({1.0, 2.0});
  lone.missing(0, 0) = true;
  CHECK_THROWS_AS(assign_intervals(lone, 0.5), DataError);
}

TEST_CASE("label mapping") {
  Table t = column_table({1, 2, 3});
  t.y << 0, 1, 0;
  map_labels(t, Loss::logistic);
  CHECK(t.y == Vector<double>((Vector<double>(3) << -1, 1, -1).finished()));
  Table s = column_table({1, 2});
  s.y << -1, 1;
  map_labels(s, Loss::hinge);
  CHECK(s.y(0) == -1.0);
  Table bad = column_table({1, 2});
  bad.y << 2, 1;
  CHECK_THROWS_AS(map_labels(bad, Loss::hinge), DataError);
  CHECK_NOTHROW(map_labels(bad, Loss::squared));
}

TEST_CASE("full pipeline") {
  const Table raw = make_synthetic_logistic(300, 6, 3);
  PipelineConfig cfg;
  cfg.missing_rate = 0.05;
  cfg.seed = 11;
  const auto r = run_pipeline(raw, cfg, Loss::logistic);
  CHECK(r.train.n() + r.x_test.rows() == 300);
  CHECK(r.x_test.rows() == 30);
  CHECK(r.train.index.size() <= static_cast<Index>(std::llround(270 * 6 * 0.05)));
  CHECK(r.injection.cells.size() == static_cast<std::size_t>(std::llround(270 * 6 * 0.05)));
  CHECK(r.train.X.lower().minCoeff() >= 0.0);
  CHECK(r.train.X.upper().maxCoeff() <= 1.0);
  CHECK(r.coverage >= 0.0);
  CHECK(r.coverage <= 1.0);
  CHECK(((r.train.y.array() == 1.0) || (r.train.y.array() == -1.0)).all());

  const auto again = run_pipeline(raw, cfg, Loss::logistic);
  CHECK(manifest(again).dump() == manifest(r).dump());
  CHECK(again.train.X.lower() == r.train.X.lower());
  CHECK(again.train.X.upper() == r.train.X.upper());

  cfg.missing_rate = 0.0;
  CHECK(std::isnan(run_pipeline(raw, cfg, Loss::logistic).coverage));
}

TEST_CASE("manifest contents") {
  PipelineConfig cfg;
  cfg.missing_rate = 0.02;
  cfg.seed = 4;
  const auto r = run_pipeline(make_synthetic_logistic(100, 3, 1), cfg, Loss::logistic);
  const auto m = manifest(r);
  for (const char* key : {"seed", "config", "quantile", "split", "clip", "normalize", "missing", "shape"})
    CHECK(m.contains(key));
  CHECK(m["seed"] == 4);
  CHECK(m["missing"]["injected"].size() == r.injection.cells.size());
}

TEST_CASE("test rows must be complete") {
  Table train = make_synthetic_logistic(20, 2, 1), test = make_synthetic_logistic(5, 2, 2);
  test.missing(1, 0) = true;
  test.values(1, 0) = std::nan("");
  CHECK_THROWS_AS(run_pipeline(train, test, PipelineConfig{}, Loss::logistic), DataError);
}

}  // TEST_SUITE
