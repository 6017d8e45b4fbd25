#include <ipub/data/harness.hpp>
#include <ipub/inewton.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace ipub::harness {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::json array_of(const Vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

std::string_view solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::newton: return "newton";
    case SolverKind::proximal_newton: return "proximal_newton";
    case SolverKind::dual_coordinate_descent: return "dual_coordinate_descent";
  }
  return "?";
}

}  // namespace

ModelSpec<double> ModelOptions::spec() const {
  const Penalty<double> pen =
      penalty == PenaltyKind::l2 ? Penalty<double>::l2(lambda) : Penalty<double>::elastic_net(lambda, kappa);
  return ModelSpec<double>::make(loss, pen);
}

SolverConfig ModelOptions::solver() const {
  SolverConfig cfg;
  cfg.grad_tol = tol;
  return cfg;
}

nlohmann::json run_bound(const data::PipelineResult& data, const ModelOptions& model) {
  const ModelSpec<double> spec = model.spec();
  const SolverConfig cfg = model.solver();
  cfg.check();
  const ValidationReport rep = validate(data.train, spec);
  if (!rep.ok()) throw data::DataError("invalid training set: " + rep.violations.front());

  const PrimalDualSolution<double> sol = train(spec, impute_midpoint(data.train.X), data.train.y, cfg);
  DeltaBreakdown<double> br;
  const UncertaintyBall<double> ball = bound_ball(spec, sol, data.train, &br);

  nlohmann::json out;
  out["config"] = {{"loss", to_string(spec.loss)},
                   {"penalty", to_string(spec.penalty.kind)},
                   {"lambda", spec.penalty.lambda},
                   {"kappa", spec.penalty.kappa},
                   {"link", to_string(spec.link)},
                   {"tol", model.tol},
                   {"alpha", data.config.coverage_alpha},
                   {"b", data.config.missing_rate},
                   {"seed", data.config.seed}};
  out["solver"] = {{"kind", solver_name(sol.solver)},
                   {"converged", sol.converged},
                   {"iterations", sol.iterations}};
  out["ball"] = {{"loss_term", br.loss_term},
                 {"penalty_term", br.penalty_term},
                 {"residual_gap", br.residual_gap},
                 {"delta_total", br.delta_total},
                 {"lambda", ball.lambda},
                 {"radius", ball.radius},
                 {"center", array_of(ball.center)}};
  out["missing"] = data.train.index.size();
  nlohmann::json rows = nlohmann::json::array();
  for (Index t = 0; t < data.x_test.rows(); ++t) {
    const auto x = data.x_test.row(t).transpose();
    const PredictionInterval<double> pi = predict_interval(ball, x, spec.link);
    nlohmann::json r = {{"id", t},
                        {"point_prediction", apply_link(spec.link, ball.center.dot(x))},
                        {"linear_lo", pi.linear_lo},
                        {"linear_hi", pi.linear_hi},
                        {"value_lo", pi.value_lo},
                        {"value_hi", pi.value_hi}};
    if (pi.label) r["label"] = to_string(*pi.label);
    rows.push_back(std::move(r));
  }
  out["intervals"] = std::move(rows);
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  if (v.size() % 2) return v[m];
  const double hi = v[m];
  return (*std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m)) + hi) / 2.0;
}

Histogram make_histogram(const std::vector<double>& ipub, const std::vector<double>& inewton, double width) {
  if (!(width > 0.0 && width <= 1.0)) throw Error("bin width must lie in (0, 1]");
  const auto bins = static_cast<std::size_t>(std::ceil(1.0 / width - 1e-9));
  Histogram h;
  for (std::size_t k = 0; k <= bins; ++k) h.edges.push_back(std::min(1.0, static_cast<double>(k) * width));
  auto fill = [&](const std::vector<double>& lengths) {
    std::vector<double> mass(bins, 0.0);
    for (double len : lengths) {
      auto k = static_cast<std::size_t>(std::max(0.0, len) / width);
      mass[std::min(k, bins - 1)] += 1.0;
    }
    if (!lengths.empty())
      for (double& m : mass) m /= static_cast<double>(lengths.size());
    return mass;
  };
  h.ipub = fill(ipub);
  h.inewton = fill(inewton);
  return h;
}

CellResult run_cell(const data::Table& raw, double b, double alpha, double lambda,
                    const ExperimentOptions& opts) {
  CellResult cell;
  cell.b = b;
  cell.alpha = alpha;
  cell.lambda = lambda;
  try {
    data::PipelineConfig pc = opts.pipeline;
    pc.missing_rate = b;
    pc.coverage_alpha = alpha;
    const data::PipelineResult d = data::run_pipeline(raw, pc, Loss::logistic);
    const ModelSpec<double> spec = ModelSpec<double>::make(Loss::logistic, Penalty<double>::l2(lambda));
    SolverConfig cfg;
    cfg.grad_tol = opts.tol;
    const Matrix<double> mid = impute_midpoint(d.train.X);
    const Index m = d.x_test.rows();
    cell.missing = d.train.index.size();
    cell.records.resize(static_cast<std::size_t>(m));

    std::vector<double> t_train, t_ipub, t_inewton;
    const int reps = std::max(1, opts.repeats);
    for (int rep = 0; rep < reps; ++rep) {
      const auto t0 = Clock::now();
      const PrimalDualSolution<double> sol = train(spec, mid, d.train.y, cfg);
      t_train.push_back(seconds_since(t0));
      const UncertaintyBall<double> ball = bound_ball(spec, sol, d.train);
      std::vector<PredictionInterval<double>> ipub(static_cast<std::size_t>(m));
      for (Index t = 0; t < m; ++t)
        ipub[static_cast<std::size_t>(t)] = predict_interval(ball, d.x_test.row(t).transpose(), spec.link);
      t_ipub.push_back(seconds_since(t0));

      // The starting box depends on the IPUB radius; building it is not timed.
      const InitialBox<double> init = inewton_initial_box(d.train, lambda, sol.w, ball.radius);
      const auto t1 = Clock::now();
      const InewtonResult<double> enc = inewton_enclose(d.train, lambda, opts.inewton_max_iter, init.box);
      std::vector<PredictionInterval<double>> inew(static_cast<std::size_t>(m));
      for (Index t = 0; t < m; ++t)
        inew[static_cast<std::size_t>(t)] =
            inewton_predict_interval(enc.box, d.x_test.row(t).transpose(), spec.link);
      t_inewton.push_back(seconds_since(t1));

      if (rep == 0) {
        cell.delta = ball.delta;
        cell.radius = ball.radius;
        cell.inewton_verified = init.verified;
        cell.inewton_doublings = init.doublings;
        cell.inewton_contracted = enc.contracted;
        cell.inewton_iterations = enc.iterations;
        for (Index t = 0; t < m; ++t) {
          const auto k = static_cast<std::size_t>(t);
          PointRecord& r = cell.records[k];
          r.id = t;
          r.point_prediction = apply_link(spec.link, sol.w.dot(d.x_test.row(t).transpose()));
          r.ipub_lo = ipub[k].value_lo;
          r.ipub_hi = ipub[k].value_hi;
          r.inewton_lo = inew[k].value_lo;
          r.inewton_hi = inew[k].value_hi;
        }
      }
    }
    cell.timing.train_seconds = median(t_train);
    cell.timing.ipub_seconds = median(t_ipub);
    cell.timing.inewton_seconds = median(t_inewton);
    cell.timing.ratio = cell.timing.ipub_seconds > 0.0 ? cell.timing.inewton_seconds / cell.timing.ipub_seconds : 0.0;

    std::vector<double> li, ln;
    for (const auto& r : cell.records) {
      li.push_back(r.ipub_hi - r.ipub_lo);
      ln.push_back(r.inewton_hi - r.inewton_lo);
    }
    cell.ipub_median = median(li);
    cell.inewton_median = median(ln);
    cell.hist = make_histogram(li, ln, opts.bin_width);

    if (opts.oracle_points > 0 && m > 0) {
      const Index k = std::min<Index>(opts.oracle_points, m);
      Matrix<double> xs(k, d.x_test.cols());
      std::vector<Index> ids;
      for (Index s = 0; s < k; ++s) {
        ids.push_back(s * m / k);
        xs.row(s) = d.x_test.row(ids.back());
      }
      const OracleRange<double> range = oracle_prediction_range(spec, d.train, xs, opts.budget, cfg);
      constexpr double slack = 1e-7;
      for (Index s = 0; s < k; ++s) {
        PointRecord& r = cell.records[static_cast<std::size_t>(ids[static_cast<std::size_t>(s)])];
        r.oracle_min = range.min(s);
        r.oracle_max = range.max(s);
        ++cell.oracle_checked;
        if (range.min(s) < r.ipub_lo - slack || range.max(s) > r.ipub_hi + slack) ++cell.oracle_ipub_misses;
        if (range.min(s) < r.inewton_lo - slack || range.max(s) > r.inewton_hi + slack)
          ++cell.oracle_inewton_misses;
      }
    }
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

ExperimentResult run_experiment(const data::Table& raw, const ExperimentOptions& opts) {
  ExperimentResult out;
  for (double b : opts.b)
    for (double a : opts.alpha)
      for (double l : opts.lambda) out.cells.push_back(run_cell(raw, b, a, l, opts));
  data::PipelineConfig pc = opts.pipeline;
  if (!opts.b.empty()) pc.missing_rate = opts.b.front();
  if (!opts.alpha.empty()) pc.coverage_alpha = opts.alpha.front();
  try {
    out.manifest = data::manifest(data::run_pipeline(raw, pc, Loss::logistic));
  } catch (const std::exception& e) {
    out.manifest = {{"error", e.what()}};
  }
  return out;
}

nlohmann::json to_json(const ExperimentResult& r, const ExperimentOptions& opts) {
  using nlohmann::json;
  json cells = json::array();
  for (const auto& c : r.cells) {
    json j = {{"b", c.b}, {"alpha", c.alpha}, {"lambda", c.lambda}, {"ok", c.ok()}};
    if (!c.ok()) {
      j["error"] = c.error;
      cells.push_back(std::move(j));
      continue;
    }
    j["missing"] = c.missing;
    j["delta"] = c.delta;
    j["radius"] = c.radius;
    j["inewton"] = {{"verified", c.inewton_verified},
                    {"doublings", c.inewton_doublings},
                    {"contracted", c.inewton_contracted},
                    {"iterations", c.inewton_iterations}};
    j["median_length"] = {{"ipub", c.ipub_median}, {"inewton", c.inewton_median}};
    j["timing"] = {{"train_seconds", c.timing.train_seconds},
                   {"ipub_seconds", c.timing.ipub_seconds},
                   {"inewton_seconds", c.timing.inewton_seconds},
                   {"time_ratio", c.timing.ratio}};
    j["oracle"] = {{"checked", c.oracle_checked},
                   {"ipub_misses", c.oracle_ipub_misses},
                   {"inewton_misses", c.oracle_inewton_misses}};
    json recs = json::array();
    for (const auto& p : c.records) {
      json rj = {{"id", p.id},
                 {"point_prediction", p.point_prediction},
                 {"ipub_lo", p.ipub_lo},
                 {"ipub_hi", p.ipub_hi},
                 {"inewton_lo", p.inewton_lo},
                 {"inewton_hi", p.inewton_hi},
                 {"oracle_min", p.oracle_min ? json(*p.oracle_min) : json(nullptr)},
                 {"oracle_max", p.oracle_max ? json(*p.oracle_max) : json(nullptr)}};
      recs.push_back(std::move(rj));
    }
    j["records"] = std::move(recs);
    cells.push_back(std::move(j));
  }
  return {{"config",
           {{"loss", "logistic"},
            {"penalty", "l2"},
            {"b", opts.b},
            {"alpha", opts.alpha},
            {"lambda", opts.lambda},
            {"bin_width", opts.bin_width},
            {"repeats", opts.repeats},
            {"inewton_max_iter", opts.inewton_max_iter},
            {"tol", opts.tol},
            {"seed", opts.pipeline.seed},
            {"oracle_points", opts.oracle_points}}},
          {"timing_method",
           "median wall-clock of the repeats; ipub = train + delta + all test intervals; "
           "inewton = enclosure iterations + all test intervals (starting box excluded)"},
          {"cells", std::move(cells)},
          {"manifest", r.manifest}};
}

std::string histogram_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "b,alpha,lambda,method,bin_lo,bin_hi,mass\n";
  for (const auto& c : r.cells) {
    if (!c.ok()) continue;
    for (const auto& [name, mass] : {std::pair{"ipub", &c.hist.ipub}, std::pair{"inewton", &c.hist.inewton}})
      for (std::size_t k = 0; k < mass->size(); ++k)
        os << c.b << ',' << c.alpha << ',' << c.lambda << ',' << name << ',' << c.hist.edges[k] << ','
           << c.hist.edges[k + 1] << ',' << (*mass)[k] << '\n';
  }
  return os.str();
}

SmallInstance make_small_instance(std::uint64_t seed, int combo) {
  if (combo < 0 || combo >= 6) throw Error("combo must lie in [0, 6)");
  Rng rng(seed);
  const Loss loss = static_cast<Loss>(combo / 2);
  const Index n = 4 + static_cast<Index>(rng.below(27));
  const Index d = 1 + static_cast<Index>(rng.below(5));
  const double lambda = 0.1 * std::pow(20.0, rng.uniform());
  const Penalty<double> pen =
      combo % 2 == 0 ? Penalty<double>::l2(lambda) : Penalty<double>::elastic_net(lambda, 0.5 * rng.uniform());

  Matrix<double> x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  Vector<double> truth(d);
  for (Index j = 0; j < d; ++j) truth(j) = rng.normal();
  Vector<double> y(n);
  for (Index i = 0; i < n; ++i) {
    const double v = x.row(i).dot(truth) + 0.5 * rng.normal();
    y(i) = loss == Loss::squared ? v : (v >= 0.0 ? 1.0 : -1.0);
  }

  const auto cells = static_cast<std::uint64_t>(n * d);
  const auto m = static_cast<std::size_t>(rng.below(std::min<std::uint64_t>(8, cells) + 1));
  std::vector<std::uint64_t> pool(cells);
  for (std::uint64_t k = 0; k < cells; ++k) pool[k] = k;
  for (std::size_t k = 0; k < m; ++k) std::swap(pool[k], pool[k + rng.below(cells - k)]);
  Matrix<double> lo = x, hi = x;
  for (std::size_t k = 0; k < m; ++k) {
    const auto i = static_cast<Index>(pool[k] / static_cast<std::uint64_t>(d));
    const auto j = static_cast<Index>(pool[k] % static_cast<std::uint64_t>(d));
    lo(i, j) = x(i, j) - (0.05 + rng.uniform());
    hi(i, j) = x(i, j) + (0.05 + rng.uniform());
  }

  SmallInstance out;
  out.seed = seed;
  out.spec = ModelSpec<double>::make(loss, pen);
  out.train = make_training_set(IntervalMatrix<double>(lo, hi), y);
  out.x_test.resize(5, d);
  for (Index t = 0; t < 5; ++t)
    for (Index j = 0; j < d; ++j) out.x_test(t, j) = rng.normal();
  return out;
}

OracleCheckReport run_oracle_check(const OracleCheckOptions& opts) {
  OracleCheckReport rep;
  SolverConfig cfg;
  cfg.grad_tol = opts.tol;
  cfg.check();
  auto note = [&rep](std::string msg) {
    if (rep.messages.size() < 50) rep.messages.push_back(std::move(msg));
  };
  Rng seeds(opts.seed);
  for (int k = 0; k < opts.instances; ++k) {
    const std::uint64_t seed = seeds.bits();
    const int combo = k % 6;
    SmallInstance inst = make_small_instance(seed, combo);
    const std::string tag = "instance " + std::to_string(k) + " (seed " + std::to_string(seed) + ", " +
                            std::string(to_string(inst.spec.loss)) + "/" +
                            std::string(to_string(inst.spec.penalty.kind)) + ")";
    const Index tp = std::min<Index>(opts.test_points, inst.x_test.rows());
    const Matrix<double> xs = inst.x_test.topRows(tp);
    ++rep.instances;

    const PrimalDualSolution<double> sol = train(inst.spec, impute_midpoint(inst.train.X), inst.train.y, cfg);
    DeltaBreakdown<double> br;
    const UncertaintyBall<double> base = bound_ball(inst.spec, sol, inst.train, &br);
    UncertaintyBall<double> ball = base;
    ball.radius *= opts.radius_scale;

    // Containment of every retrained model and its predictions.
    std::vector<PredictionInterval<double>> pis;
    for (Index t = 0; t < tp; ++t) pis.push_back(predict_interval(ball, xs.row(t).transpose(), inst.spec.link));
    OracleBudget budget = opts.budget;
    budget.seed = seed;
    const OracleRange<double> range = oracle_prediction_range(inst.spec, inst.train, xs, budget, cfg);
    rep.imputations += static_cast<long>(range.records.size());
    for (const auto& rec : range.records) {
      if (!rec.converged) ++rep.nonconverged;
      const double dist = (rec.w - ball.center).norm();
      if (dist > ball.radius + opts.slack) {
        ++rep.containment_violations;
        note(tag + ": imputation " + std::to_string(rec.index) + " has ||w'' - w'|| = " +
             std::to_string(dist) + " > radius " + std::to_string(ball.radius));
      }
    }
    for (Index t = 0; t < tp; ++t) {
      const auto& pi = pis[static_cast<std::size_t>(t)];
      if (range.min(t) < pi.value_lo - opts.slack || range.max(t) > pi.value_hi + opts.slack) {
        ++rep.containment_violations;
        note(tag + ": test point " + std::to_string(t) + " prediction range [" + std::to_string(range.min(t)) +
             ", " + std::to_string(range.max(t)) + "] escapes [" + std::to_string(pi.value_lo) + ", " +
             std::to_string(pi.value_hi) + "]");
      }
      if (inst.spec.link != Link::sign && pi.length() > 0.0)
        rep.max_tightness = std::max(rep.max_tightness, (range.max(t) - range.min(t)) / pi.length());
    }

    // Delta terms against full objectives on every corner.
    const OracleDelta<double> od =
        oracle_delta(inst.spec, sol, inst.train.X, inst.train.index, inst.train.y, budget);
    const double err = std::max(std::abs(br.loss_term - od.max_P_minus_P), std::abs(br.penalty_term - od.D_minus_min_D));
    rep.max_delta_error = std::max(rep.max_delta_error, err);
    if (err > opts.delta_tol) {
      ++rep.delta_violations;
      note(tag + ": delta terms differ from corner enumeration by " + std::to_string(err));
    }

    // Shrinking every interval about its midpoint keeps (w', alpha') valid and
    // must not increase delta or any interval length.
    double prev_delta = br.delta_total;
    std::vector<double> prev_len;
    for (Index q = 0; q < tp; ++q)
      prev_len.push_back(predict_interval(base, xs.row(q).transpose(), inst.spec.link).length());
    for (double t : {0.5, 0.25}) {
      TrainingSet<double> shrunk = make_training_set(inst.train.X.scaled(t), inst.train.y);
      const DeltaBreakdown<double> bt = compute_delta(inst.spec, sol, shrunk);
      const UncertaintyBall<double> ballt = uncertainty_ball(bt, inst.spec.lambda(), sol.w);
      bool bad = bt.delta_total > prev_delta + 1e-12;
      for (Index q = 0; q < tp; ++q) {
        const double len = predict_interval(ballt, xs.row(q).transpose(), inst.spec.link).length();
        if (len > prev_len[static_cast<std::size_t>(q)] + 1e-12) bad = true;
        prev_len[static_cast<std::size_t>(q)] = len;
      }
      if (bad) {
        ++rep.shrink_violations;
        note(tag + ": shrinking intervals by " + std::to_string(t) + " increased delta or an interval length");
      }
      prev_delta = bt.delta_total;
    }
  }
  return rep;
}

nlohmann::json to_json(const OracleCheckReport& r) {
  return {{"ok", r.ok()},
          {"instances", r.instances},
          {"imputations", r.imputations},
          {"nonconverged", r.nonconverged},
          {"containment_violations", r.containment_violations},
          {"delta_violations", r.delta_violations},
          {"shrink_violations", r.shrink_violations},
          {"max_delta_error", r.max_delta_error},
          {"max_tightness", r.max_tightness},
          {"messages", r.messages}};
}

}  // namespace ipub::harness
