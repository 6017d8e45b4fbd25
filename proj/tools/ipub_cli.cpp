#include <ipub/data/harness.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace ipub;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data::DataError("cannot write " + path);
  out << text;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction uncertainty bounds for linear models trained on interval-valued missing data"};
  app.require_subcommand(1);

  // Shared data options.
  data::CsvOptions csv;
  data::PipelineConfig pc;
  std::string manifest_path;

  // bound
  auto* bound = app.add_subcommand("bound", "Train on the midpoint imputation and bound every test prediction");
  std::string train_csv, test_csv, out_path;
  harness::ModelOptions model;
  bound->add_option("--train", train_csv, "Training CSV")->required()->check(CLI::ExistingFile);
  bound->add_option("--test", test_csv, "Test CSV (complete rows)")->required()->check(CLI::ExistingFile);
  std::string loss_name = "logistic", penalty_name = "l2";
  bound->add_option("--loss", loss_name, "squared | hinge | logistic")
      ->check(CLI::IsMember({"squared", "hinge", "logistic"}));
  bound->add_option("--penalty", penalty_name, "l2 | elastic_net")->check(CLI::IsMember({"l2", "elastic_net"}));
  bound->add_option("--lambda", model.lambda, "L2 weight")->check(CLI::PositiveNumber);
  bound->add_option("--kappa", model.kappa, "L1 weight of the elastic net")->check(CLI::NonNegativeNumber);
  bound->add_option("--alpha", pc.coverage_alpha, "Quantile coverage of each missing-value interval");
  bound->add_option("--b", pc.missing_rate, "Fraction of training cells made missing");
  bound->add_option("--seed", pc.seed, "Random seed");
  bound->add_option("--tol", model.tol, "Solver gradient tolerance");
  bound->add_option("--out", out_path, "Output JSON (stdout if omitted)");
  bound->add_option("--manifest", manifest_path, "Write the preprocessing manifest JSON here");
  bound->add_flag("--header", csv.header, "CSV files start with a header row");
  bound->add_option("--label-col", csv.label_col, "Label column index; negative counts from the end");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Grid of IPUB vs interval Newton on a logistic dataset");
  harness::ExperimentOptions eo;
  std::string data_csv, hist_path;
  Index synth_n = 2000, synth_d = 20;
  exp->add_option("--data", data_csv, "Dataset CSV (synthetic logistic data if omitted)")->check(CLI::ExistingFile);
  exp->add_option("--n", synth_n, "Synthetic rows")->check(CLI::PositiveNumber);
  exp->add_option("--d", synth_d, "Synthetic features")->check(CLI::PositiveNumber);
  exp->add_option("--b", eo.b, "Missing rates")->expected(1, -1);
  exp->add_option("--alpha", eo.alpha, "Interval coverages")->expected(1, -1);
  exp->add_option("--lambda", eo.lambda, "Penalty weights")->expected(1, -1);
  exp->add_option("--bin-width", eo.bin_width, "Histogram bin width on the probability scale");
  exp->add_option("--repeats", eo.repeats, "Timing repetitions (median reported)")->check(CLI::PositiveNumber);
  exp->add_option("--max-iter", eo.inewton_max_iter, "Interval Newton iterations")->check(CLI::PositiveNumber);
  exp->add_option("--oracle-points", eo.oracle_points, "Test rows checked against retraining");
  exp->add_option("--seed", pc.seed, "Random seed (data generation and pipeline)");
  exp->add_option("--tol", eo.tol, "Solver gradient tolerance");
  exp->add_option("--out", out_path, "Summary JSON (stdout if omitted)");
  exp->add_option("--hist", hist_path, "Histogram CSV");
  exp->add_option("--manifest", manifest_path, "Write the preprocessing manifest JSON here");
  exp->add_flag("--header", csv.header, "CSV starts with a header row");
  exp->add_option("--label-col", csv.label_col, "Label column index; negative counts from the end");

  // oracle-check
  auto* oc = app.add_subcommand("oracle-check", "Containment, shrinkage and delta checks on small random instances");
  harness::OracleCheckOptions oo;
  oc->add_option("--instances", oo.instances, "Number of instances")->check(CLI::PositiveNumber);
  oc->add_option("--seed", oo.seed, "Random seed");
  oc->add_option("--radius-scale", oo.radius_scale, "Debug: multiply every radius before checking");
  oc->add_option("--tol", oo.tol, "Solver gradient tolerance");
  oc->add_option("--out", out_path, "Report JSON (stdout if omitted)");

  // synth
  auto* sy = app.add_subcommand("synth", "Write the seeded synthetic logistic dataset as CSV");
  sy->add_option("--n", synth_n, "Rows")->check(CLI::PositiveNumber);
  sy->add_option("--d", synth_d, "Features")->check(CLI::PositiveNumber);
  sy->add_option("--seed", pc.seed, "Random seed");
  sy->add_option("--out", out_path, "Output CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? harness::kOk : harness::kValidation;
  }

  try {
    if (*bound) {
      model.loss = *parse_loss(loss_name);
      model.penalty = *parse_penalty(penalty_name);
      const data::PipelineResult d =
          data::run_pipeline(data::load_csv(train_csv, csv), data::load_csv(test_csv, csv), pc, model.loss);
      write_text(out_path, dump(harness::run_bound(d, model)));
      if (!manifest_path.empty()) write_text(manifest_path, dump(data::manifest(d)));
      return harness::kOk;
    }
    if (*exp) {
      const data::Table raw =
          data_csv.empty() ? data::make_synthetic_logistic(synth_n, synth_d, pc.seed) : data::load_csv(data_csv, csv);
      eo.pipeline = pc;
      const harness::ExperimentResult r = harness::run_experiment(raw, eo);
      write_text(out_path, dump(harness::to_json(r, eo)));
      if (!hist_path.empty()) write_text(hist_path, harness::histogram_csv(r));
      if (!manifest_path.empty()) write_text(manifest_path, dump(r.manifest));
      for (const auto& c : r.cells)
        if (!c.ok())
          std::cerr << "cell b=" << c.b << " alpha=" << c.alpha << " lambda=" << c.lambda << " failed: " << c.error
                    << "\n";
      return harness::kOk;
    }
    if (*oc) {
      const harness::OracleCheckReport rep = harness::run_oracle_check(oo);
      write_text(out_path, dump(harness::to_json(rep)));
      if (!rep.ok()) {
        for (const auto& m : rep.messages) std::cerr << m << "\n";
        return harness::kViolation;
      }
      return harness::kOk;
    }
    if (*sy) {
      write_text(out_path, data::to_csv(data::make_synthetic_logistic(synth_n, synth_d, pc.seed)));
      return harness::kOk;
    }
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return harness::kViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return harness::kValidation;
  }
  return harness::kOk;
}
