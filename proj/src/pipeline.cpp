#include <ipub/data/pipeline.hpp>
#include <ipub/rng.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ipub::data {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<double> observed_column(const Table& t, Index j) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(t.rows()));
  for (Index i = 0; i < t.rows(); ++i)
    if (!t.missing(i, j)) v.push_back(t.values(i, j));
  return v;
}

Table take_rows(const Table& t, const std::vector<Index>& rows) {
  Table out;
  const Index m = static_cast<Index>(rows.size());
  out.values.resize(m, t.cols());
  out.missing.resize(m, t.cols());
  out.y.resize(m);
  out.names = t.names;
  for (Index k = 0; k < m; ++k) {
    const Index i = rows[static_cast<std::size_t>(k)];
    out.values.row(k) = t.values.row(i);
    out.missing.row(k) = t.missing.row(i);
    out.y(k) = t.y(i);
  }
  return out;
}

std::string feature_label(const Table& t, Index j) {
  if (static_cast<std::size_t>(j) < t.names.size() && !t.names[static_cast<std::size_t>(j)].empty())
    return "'" + t.names[static_cast<std::size_t>(j)] + "'";
  return std::to_string(j);
}

}  // namespace

Table parse_csv(std::string_view text, const CsvOptions& opts) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      auto nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      lines.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
    // Trailing blank lines are not records.
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  }
  std::vector<std::string> header;
  std::size_t first = 0;
  if (opts.header && !lines.empty()) {
    for (auto f : split_fields(lines[0])) header.emplace_back(f);
    first = 1;
  }
  if (lines.size() <= first) throw DataError("csv: no data rows");

  const std::size_t width = split_fields(lines[first]).size();
  if (width < 2) throw DataError("csv: need at least one feature and a label column");
  const int lc = opts.label_col < 0 ? static_cast<int>(width) + opts.label_col : opts.label_col;
  if (lc < 0 || lc >= static_cast<int>(width)) throw DataError("csv: label column out of range");
  if (!header.empty() && header.size() != width) throw DataError("csv: header width differs from rows");

  const Index n = static_cast<Index>(lines.size() - first), d = static_cast<Index>(width) - 1;
  Table t;
  t.values.resize(n, d);
  t.missing.setConstant(n, d, false);
  t.y.resize(n);
  auto is_marker = [&](std::string_view s) {
    return std::find(opts.missing_markers.begin(), opts.missing_markers.end(), s) != opts.missing_markers.end();
  };
  for (Index i = 0; i < n; ++i) {
    const std::size_t lineno = first + static_cast<std::size_t>(i) + 1;
    const auto fields = split_fields(lines[first + static_cast<std::size_t>(i)]);
    if (fields.size() != width)
      throw DataError("csv: line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(width));
    Index j = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const auto v = parse_number(fields[c]);
      if (static_cast<int>(c) == lc) {
        if (!v) throw DataError("csv: line " + std::to_string(lineno) + ": label is not numeric");
        t.y(i) = *v;
        continue;
      }
      if (v) {
        t.values(i, j) = *v;
      } else if (is_marker(fields[c])) {
        t.values(i, j) = kNaN;
        t.missing(i, j) = true;
      } else {
        throw DataError("csv: line " + std::to_string(lineno) + ": non-numeric cell '" +
                        std::string(fields[c]) + "'");
      }
      ++j;
    }
  }
  for (std::size_t c = 0; c < header.size(); ++c)
    if (static_cast<int>(c) != lc) t.names.push_back(header[c]);
  return t;
}

Table load_csv(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (trim(text).empty()) throw DataError("csv: empty file " + path);
  return parse_csv(text, opts);
}

void PipelineConfig::check() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DataError("test_fraction must lie in (0, 1)");
  if (!(missing_rate >= 0.0 && missing_rate <= 1.0)) throw DataError("missing rate b must lie in [0, 1]");
  if (!(clip_lo_pct < clip_hi_pct) || clip_lo_pct < 0.0 || clip_hi_pct > 100.0)
    throw DataError("clip percentiles must satisfy 0 <= lo < hi <= 100");
  if (!(coverage_alpha > 0.0 && coverage_alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  if (distinct_threshold < 0) throw DataError("distinct threshold must be nonnegative");
}

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("quantile level outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Split split(const Table& table, const PipelineConfig& cfg) {
  cfg.check();
  const Index n = table.rows();
  if (n < 2) throw DataError("split needs at least two rows");
  const auto want = static_cast<Index>(std::llround(static_cast<double>(n) * cfg.test_fraction));
  const Index n_test = std::clamp<Index>(want, 1, n - 1);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  Rng rng(cfg.seed);
  for (std::size_t k = perm.size() - 1; k > 0; --k) std::swap(perm[k], perm[rng.below(k + 1)]);
  Split out;
  out.test_rows.assign(perm.begin(), perm.begin() + n_test);
  out.train_rows.assign(perm.begin() + n_test, perm.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());
  out.train = take_rows(table, out.train_rows);
  out.test = take_rows(table, out.test_rows);
  return out;
}

ClipBounds clip_outliers(Table& train, Table& test, const PipelineConfig& cfg) {
  if (train.cols() != test.cols()) throw DimensionError("clip_outliers: feature count differs");
  const Index d = train.cols();
  ClipBounds b{Vector<double>(d), Vector<double>(d), std::vector<bool>(static_cast<std::size_t>(d), false)};
  for (Index j = 0; j < d; ++j) {
    std::vector<double> v = observed_column(train, j);
    if (v.empty()) throw DataError("feature " + feature_label(train, j) + " is entirely missing");
    std::sort(v.begin(), v.end());
    const auto distinct = static_cast<int>(std::set<double>(v.begin(), v.end()).size());
    b.lo(j) = v.front();
    b.hi(j) = v.back();
    if (distinct <= cfg.distinct_threshold) continue;
    b.applied[static_cast<std::size_t>(j)] = true;
    b.lo(j) = quantile(v, cfg.clip_lo_pct / 100.0);
    b.hi(j) = quantile(v, cfg.clip_hi_pct / 100.0);
    for (Table* t : {&train, &test})
      for (Index i = 0; i < t->rows(); ++i)
        if (!t->missing(i, j)) t->values(i, j) = std::clamp(t->values(i, j), b.lo(j), b.hi(j));
  }
  return b;
}

AffineMap normalize(Table& train, Table& test) {
  if (train.cols() != test.cols()) throw DimensionError("normalize: feature count differs");
  const Index d = train.cols();
  AffineMap m{Vector<double>::Zero(d), Vector<double>::Zero(d)};
  for (Index j = 0; j < d; ++j) {
    const std::vector<double> v = observed_column(train, j);
    if (v.empty()) throw DataError("feature " + feature_label(train, j) + " is entirely missing");
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    m.min(j) = *lo;
    m.range(j) = *hi - *lo;
    for (Table* t : {&train, &test})
      for (Index i = 0; i < t->rows(); ++i) {
        if (t->missing(i, j)) continue;
        double& x = t->values(i, j);
        x = m.range(j) > 0.0 ? (x - m.min(j)) / m.range(j) : 0.0;
      }
  }
  return m;
}

Injection inject_missing(Table& train, const PipelineConfig& cfg) {
  cfg.check();
  const double total = static_cast<double>(train.rows()) * static_cast<double>(train.cols());
  const auto k = static_cast<std::size_t>(std::llround(total * cfg.missing_rate));
  std::vector<Injection::Cell> pool;
  for (Index i = 0; i < train.rows(); ++i)
    for (Index j = 0; j < train.cols(); ++j)
      if (!train.missing(i, j)) pool.push_back({i, j});
  if (k > pool.size())
    throw DataError("cannot inject " + std::to_string(k) + " missing cells: only " +
                    std::to_string(pool.size()) + " observed");
  // Partial Fisher-Yates with its own stream so the split draws stay untouched.
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t s = 0; s < k; ++s) std::swap(pool[s], pool[s + rng.below(pool.size() - s)]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end(),
            [](const auto& a, const auto& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  Injection out;
  out.cells = pool;
  out.truth.resize(static_cast<Index>(k));
  for (std::size_t s = 0; s < k; ++s) {
    const auto [i, j] = pool[s];
    out.truth(static_cast<Index>(s)) = train.values(i, j);
    train.values(i, j) = kNaN;
    train.missing(i, j) = true;
  }
  return out;
}

IntervalMatrix<double> assign_intervals(const Table& train, double alpha,
                                        std::vector<FeatureInterval>* per_feature) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  const Index n = train.rows(), d = train.cols();
  Matrix<double> lo = train.values, hi = train.values;
  std::vector<FeatureInterval> feats(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    if (!train.missing.col(j).any()) continue;
    std::vector<double> v = observed_column(train, j);
    if (v.size() < 2)
      throw DataError("feature " + feature_label(train, j) +
                      " has missing cells but fewer than two observed values");
    std::sort(v.begin(), v.end());
    FeatureInterval& f = feats[static_cast<std::size_t>(j)];
    f = {quantile(v, (1.0 - alpha) / 2.0), quantile(v, (1.0 + alpha) / 2.0), true};
    for (Index i = 0; i < n; ++i)
      if (train.missing(i, j)) {
        lo(i, j) = f.lo;
        hi(i, j) = f.hi;
      }
  }
  if (per_feature) *per_feature = std::move(feats);
  return IntervalMatrix<double>(std::move(lo), std::move(hi));
}

void map_labels(Table& table, Loss loss) {
  if (loss == Loss::squared) return;
  const bool zero_one = (table.y.array() == 0.0 || table.y.array() == 1.0).all();
  const bool signs = (table.y.array() == -1.0 || table.y.array() == 1.0).all();
  if (signs) return;
  if (!zero_one) throw DataError("classification labels must be in {-1, +1} or {0, 1}");
  table.y = (table.y.array() == 0.0).select(-1.0, table.y);
}

PipelineResult run_pipeline(const Table& raw, const PipelineConfig& cfg, Loss loss) {
  cfg.check();
  Split s = split(raw, cfg);
  PipelineResult r = run_pipeline(std::move(s.train), std::move(s.test), cfg, loss);
  r.train_rows = std::move(s.train_rows);
  r.test_rows = std::move(s.test_rows);
  return r;
}

PipelineResult run_pipeline(Table train, Table test, const PipelineConfig& cfg, Loss loss) {
  cfg.check();
  if (train.cols() != test.cols()) throw DataError("train and test have different feature counts");
  for (Index i = 0; i < test.rows(); ++i)
    if (test.missing.row(i).any())
      throw DataError("test row " + std::to_string(i) + " has a missing value; predictions need a complete x");
  map_labels(train, loss);
  map_labels(test, loss);
  PipelineResult r;
  r.config = cfg;
  r.native_missing = train.missing_count();
  r.clip = clip_outliers(train, test, cfg);
  r.affine = normalize(train, test);
  r.injection = inject_missing(train, cfg);
  IntervalMatrix<double> X = assign_intervals(train, cfg.coverage_alpha, &r.intervals);
  r.coverage = kNaN;
  if (!r.injection.cells.empty()) {
    std::size_t hit = 0;
    for (std::size_t k = 0; k < r.injection.cells.size(); ++k) {
      const auto [i, j] = r.injection.cells[k];
      const double t = r.injection.truth(static_cast<Index>(k));
      if (X.lower(i, j) <= t && t <= X.upper(i, j)) ++hit;
    }
    r.coverage = static_cast<double>(hit) / static_cast<double>(r.injection.cells.size());
  }
  r.train = make_training_set(std::move(X), train.y);
  r.x_test = test.values;
  r.y_test = test.y;
  return r;
}

nlohmann::json manifest(const PipelineResult& r) {
  using nlohmann::json;
  auto vec = [](const Vector<double>& v) {
    json a = json::array();
    for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
    return a;
  };
  json j;
  const auto& c = r.config;
  j["seed"] = c.seed;
  j["config"] = {{"test_fraction", c.test_fraction},
                 {"clip_lo_pct", c.clip_lo_pct},
                 {"clip_hi_pct", c.clip_hi_pct},
                 {"missing_rate", c.missing_rate},
                 {"coverage_alpha", c.coverage_alpha},
                 {"distinct_threshold", c.distinct_threshold}};
  j["quantile"] = "linear interpolation between order statistics (type 7)";
  j["split"] = {{"train_rows", r.train_rows}, {"test_rows", r.test_rows}};
  j["clip"] = {{"lo", vec(r.clip.lo)},
               {"hi", vec(r.clip.hi)},
               {"applied", r.clip.applied},
               {"rule", "only features with more than " + std::to_string(c.distinct_threshold) +
                            " distinct training values are clipped"}};
  j["normalize"] = {{"min", vec(r.affine.min)}, {"range", vec(r.affine.range)}};
  json injected = json::array();
  for (const auto& cell : r.injection.cells) injected.push_back({cell.row, cell.col});
  json mask = json::array();
  for (const auto& e : r.train.index.entries()) mask.push_back({e.row, e.col});
  json feats = json::array();
  for (const auto& f : r.intervals)
    feats.push_back(f.used ? json{f.lo, f.hi} : json(nullptr));
  j["missing"] = {{"native", r.native_missing},
                  {"injected", injected},
                  {"mask", mask},
                  {"feature_intervals", feats},
                  {"truth_coverage", std::isnan(r.coverage) ? nlohmann::json(nullptr) : nlohmann::json(r.coverage)}};
  j["shape"] = {{"n_train", r.train.n()}, {"n_test", r.x_test.rows()}, {"d", r.train.d()}};
  return j;
}

Table make_synthetic_logistic(Index n, Index d, std::uint64_t seed) {
  if (n < 2 || d < 1) throw DataError("synthetic data needs n >= 2 and d >= 1");
  Rng rng(seed);
  Vector<double> w(d);
  for (Index j = 0; j < d; ++j) w(j) = rng.normal();
  Table t;
  t.values.resize(n, d);
  t.missing.setConstant(n, d, false);
  t.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    double v = 0.0;
    for (Index j = 0; j < d; ++j) {
      t.values(i, j) = rng.uniform();
      v += w(j) * (t.values(i, j) - 0.5);
    }
    t.y(i) = rng.uniform() < 1.0 / (1.0 + std::exp(-v)) ? 1.0 : -1.0;
  }
  for (Index j = 0; j < d; ++j) t.names.push_back("x" + std::to_string(j + 1));
  return t;
}

std::string to_csv(const Table& t) {
  std::ostringstream os;
  os.precision(17);
  for (Index j = 0; j < t.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    os << (k < t.names.size() ? t.names[k] : "x" + std::to_string(j + 1)) << ',';
  }
  os << "y\n";
  for (Index i = 0; i < t.rows(); ++i) {
    for (Index j = 0; j < t.cols(); ++j) {
      if (t.missing(i, j)) os << "NA";
      else os << t.values(i, j);
      os << ',';
    }
    os << t.y(i) << '\n';
  }
  return os.str();
}

}  // namespace ipub::data
