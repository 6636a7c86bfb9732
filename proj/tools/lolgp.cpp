// Command-line front end: dataset generation, model fitting, prediction,
// metric evaluation, benchmark experiments and external-data ingestion.
//
// Exit codes: 0 success, 2 input/schema error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "lolgp/dataset_io.hpp"
#include "lolgp/design.hpp"
#include "lolgp/experiment.hpp"
#include "lolgp/metrics.hpp"

namespace fs = std::filesystem;
using namespace lolgp;

namespace {

struct CliOptions {
  std::string dataset_path;
  std::string config_path;
  std::string bundle_path;
  std::string test_path;
  std::string truth_path;
  std::string pred_path;
  std::string out = "out";
  std::string model = "lolgp";
  std::string name;
  std::string mode = "multi-source";
  std::vector<std::string> csvs;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::uint64_t seed = 1;
  int chain_length = 10000;
  int burn_in = 1000;
  int restarts = 5;
  bool nested = false;
  std::string activation = "relu";
};

ModelBundle fit_model(const DatasetFile& ds, const CliOptions& opt) {
  ModelBundle b;
  b.model = opt.model;
  b.dataset = ds;
  b.seed = opt.seed;
  b.chain_length = opt.chain_length;
  b.burn_in = opt.burn_in;
  b.restarts = opt.restarts;

  if (opt.model == "gp") {
    const auto& tgt = ds.systems.back();
    GpSurrogate m = GpSurrogate::fit(tgt.inputs, tgt.outputs, {opt.restarts, opt.seed});
    b.gp_kernel = m.kernel();
    b.standardizer = m.standardizer();
    return b;
  }
  if (opt.model == "ko") {
    KoSurrogate m = ds.is_multi_fidelity()
                        ? KoSurrogate::fit(ds.to_multi_fidelity(), {opt.restarts, opt.seed})
                        : KoSurrogate::fit(ds.to_multi_source(), {opt.restarts, opt.seed});
    b.ko_hyper = m.hyper();
    b.ko_rho = m.transfer_scalars();
    b.standardizer = m.standardizer();
    return b;
  }
  if (opt.model == "bko" || opt.model == "lolgp") {
    TrainConfig tc;
    tc.gibbs.iterations = opt.chain_length;
    tc.gibbs.burn_in = opt.burn_in;
    tc.gibbs.seed = opt.seed;
    tc.gibbs.activation =
        (opt.model == "bko" || opt.activation == "identity") ? Activation::Identity
                                                             : Activation::Relu;
    tc.optimize.restarts = opt.restarts;
    if (ds.is_multi_fidelity()) {
      MultiFidelitySurrogate m = train_full_mf(ds.to_multi_fidelity(), tc);
      b.hyper = m.hyper;
      b.mf_chain = m.chain;
      b.standardizer = m.standardizer;
    } else {
      MultiSourceSurrogate m = train_full_ms(ds.to_multi_source(), tc);
      b.hyper = m.hyper;
      b.ms_chain = m.chain;
      b.standardizer = m.standardizer;
    }
    return b;
  }
  throw input_error("unknown model '" + opt.model + "' (expected gp, ko, bko or lolgp)");
}

int cmd_gen(const CliOptions& opt) {
  const ExperimentInstance inst = make_experiment_instance(opt.name, opt.seed);
  save_dataset(inst.dataset, opt.out);

  // Companion files so a generated benchmark can be scored end to end.
  const fs::path base(opt.out);
  const fs::path test_path = base.parent_path() / (base.stem().string() + "_test.csv");
  const fs::path truth_path = base.parent_path() / (base.stem().string() + "_truth.csv");
  std::vector<std::string> xh;
  for (int j = 0; j < inst.test_box.cols(); ++j) xh.push_back("x" + std::to_string(j + 1));
  write_csv_matrix(test_path.string(), inst.test_box, xh);
  write_csv_matrix(truth_path.string(), inst.test_truth, {"truth"});
  std::cout << "wrote " << opt.out << ", " << test_path.string() << ", " << truth_path.string()
            << "\n";
  return 0;
}

int cmd_fit(const CliOptions& opt) {
  const DatasetFile ds = load_dataset(opt.dataset_path);
  CliOptions eff = opt;
  if (!opt.config_path.empty()) {
    const DatasetFile dummy [[maybe_unused]] = ds;  // config read below
    std::ifstream in(opt.config_path);
    if (!in) throw input_error("cannot open config: " + opt.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw input_error("malformed JSON in " + opt.config_path + ": " + e.what());
    }
    eff.model = j.value("model", eff.model);
    eff.chain_length = j.value("chain_length", eff.chain_length);
    eff.burn_in = j.value("burn_in", eff.burn_in);
    eff.restarts = j.value("restarts", eff.restarts);
    eff.seed = j.value("seed", eff.seed);
    eff.activation = j.value("activation", eff.activation);
  }
  const ModelBundle b = fit_model(ds, eff);
  save_bundle(b, eff.out);
  std::cout << "wrote " << eff.out << "\n";
  return 0;
}

int cmd_predict(const CliOptions& opt) {
  const ModelBundle b = load_bundle(opt.bundle_path);
  std::vector<std::string> header;
  const Matrix test = read_csv_matrix(opt.test_path, true, &header);
  const int d = b.dataset.dim;
  if (test.rows() > 0 && test.cols() != d) {
    throw input_error("test inputs have " + std::to_string(test.cols()) + " columns, expected " +
                      std::to_string(d));
  }

  std::vector<std::string> out_header;
  for (int j = 0; j < d; ++j) out_header.push_back("x" + std::to_string(j + 1));
  out_header.insert(out_header.end(), {"mean", "sd", "q2.5", "q97.5"});

  if (test.rows() == 0) {
    write_csv_matrix(opt.out, Matrix(0, d + 4), out_header);
    std::cout << "wrote " << opt.out << " (empty)\n";
    return 0;
  }

  const Design unit = rescale_to_unit(test, b.dataset.lo, b.dataset.hi);
  const Matrix table = b.predict_table(unit, RngStream(b.seed).child(streams::kTestPoints).raw());
  Matrix full(test.rows(), d + 4);
  full.leftCols(d) = test;
  full.rightCols(4) = table;
  write_csv_matrix(opt.out, full, out_header);
  std::cout << "wrote " << opt.out << "\n";
  return 0;
}

int cmd_metrics(const CliOptions& opt) {
  std::vector<std::string> ph, th;
  const Matrix pred = read_csv_matrix(opt.pred_path, true, &ph);
  const Matrix truth = read_csv_matrix(opt.truth_path, true, &th);
  if (pred.rows() != truth.rows()) throw input_error("prediction/truth row count mismatch");
  if (pred.cols() < 4) throw input_error("prediction file lacks mean/sd/q columns");
  const int d = static_cast<int>(pred.cols()) - 4;
  const Vector means = pred.col(d);
  const Vector sds = pred.col(d + 1);
  const Vector q lo = pred.col(d + 2);
  const Vector truths = truth.col(truth.cols() - 1);

  const MetricReport rep = evaluate_gaussian(means, sds, truths);
  int covered = 0;
  for (int i = 0; i < pred.rows(); ++i) {
    if (truths[i] >= pred(i, d + 2) && truths[i] <= pred(i, d + 3)) ++covered;
  }
  nlohmann::json j{{"n_test", rep.n_test},
                   {"rmse", rep.rmse},
                   {"crps_gaussian", rep.crps},
                   {"coverage95", static_cast<double>(covered) / pred.rows()}};
  if (!opt.out.empty() && opt.out != "-") {
    std::ofstream out(opt.out, std::ios::binary);
    out << j.dump(1) << "\n";
  }
  std::cout << j.dump(1) << "\n";
  return 0;
}

int cmd_experiment(const CliOptions& opt) {
  fs::create_directories(opt.out);
  const fs::path dir(opt.out);

  ExperimentRunConfig cfg;
  cfg.chain_length = opt.chain_length;
  cfg.burn_in = opt.burn_in;
  cfg.restarts = opt.restarts;

  std::vector<ExperimentRow> rows;
  const std::string partial = (dir / "results_partial.csv").string();
  auto on_row = [&](const ExperimentRow& row) {
    rows.push_back(row);
    write_results_csv(partial, rows);
    std::cout << row.experiment << " model=" << row.model << " seed=" << row.seed
              << " rmse=" << row.rmse << " crps=" << row.crps << "\n";
  };

  const ExperimentResult res = run_experiment(opt.name, opt.seeds, cfg, on_row);
  write_results_csv((dir / "results.csv").string(), res.rows);
  write_results_json((dir / "results.json").string(), res.rows);
  for (const auto& [model, curves] : res.curves) {
    write_csv_matrix((dir / ("curves_" + model + ".csv")).string(), curves.table, curves.header);
  }
  std::error_code ec;
  fs::remove(partial, ec);
  std::cout << "wrote " << (dir / "results.csv").string() << "\n";
  return 0;
}

int cmd_ingest(const CliOptions& opt) {
  const DatasetFile ds = ingest_external(opt.csvs, opt.mode, opt.nested, std::nullopt, std::nullopt);
  save_dataset(ds, opt.out);
  std::cout << "wrote " << opt.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local transfer-learning Gaussian process surrogates"};
  app.require_subcommand(1);
  CliOptions opt;

  auto* gen = app.add_subcommand("gen", "emit a benchmark dataset (plus test grid and truths)");
  gen->add_option("name", opt.name, "experiment name")->required();
  gen->add_option("--seed", opt.seed, "design seed");
  gen->add_option("--out", opt.out, "output dataset JSON path")->required();

  auto* fit = app.add_subcommand("fit", "fit a model to a dataset and persist the bundle");
  fit->add_option("dataset", opt.dataset_path, "dataset JSON")->required();
  fit->add_option("--config", opt.config_path, "run-config JSON (overrides flags)");
  fit->add_option("--model", opt.model, "gp | ko | bko | lolgp");
  fit->add_option("--seed", opt.seed, "fit seed");
  fit->add_option("--chain-length", opt.chain_length, "MCMC iterations");
  fit->add_option("--burn-in", opt.burn_in, "discarded iterations");
  fit->add_option("--restarts", opt.restarts, "optimizer restarts");
  fit->add_option("--activation", opt.activation, "relu | identity");
  fit->add_option("--out", opt.out, "output bundle path")->required();

  auto* pred = app.add_subcommand("predict", "predict at test inputs from a fitted bundle");
  pred->add_option("bundle", opt.bundle_path, "model bundle JSON")->required();
  pred->add_option("--test", opt.test_path, "test-inputs CSV (original units, header row)")
      ->required();
  pred->add_option("--out", opt.out, "output predictions CSV")->required();

  auto* met = app.add_subcommand("metrics", "score a predictions file against truths");
  met->add_option("--pred", opt.pred_path, "predictions CSV from `predict`")->required();
  met->add_option("--truth", opt.truth_path, "truth CSV (last column used)")->required();
  met->add_option("--out", opt.out, "output metrics JSON ('-' for stdout only)");

  auto* exp = app.add_subcommand("experiment", "run a benchmark experiment over seeds");
  exp->add_option("name", opt.name, "experiment name")->required();
  exp->add_option("--seeds", opt.seeds, "seed list");
  exp->add_option("--chain-length", opt.chain_length, "MCMC iterations");
  exp->add_option("--burn-in", opt.burn_in, "discarded iterations");
  exp->add_option("--restarts", opt.restarts, "optimizer restarts");
  exp->add_option("--out", opt.out, "output directory")->required();

  auto* ing = app.add_subcommand("ingest", "build a dataset from per-system CSV files");
  ing->add_option("csvs", opt.csvs, "per-system CSVs, target last (last column = output)")
      ->required();
  ing->add_option("--mode", opt.mode, "multi-source | multi-fidelity");
  ing->add_flag("--nested", opt.nested, "mark fidelity designs as nested");
  ing->add_option("--out", opt.out, "output dataset JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(opt);
    if (fit->parsed()) return cmd_fit(opt);
    if (pred->parsed()) return cmd_predict(opt);
    if (met->parsed()) return cmd_metrics(opt);
    if (exp->parsed()) return cmd_experiment(opt);
    if (ing->parsed()) return cmd_ingest(opt);
  } catch (const input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
