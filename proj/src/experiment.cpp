#include "lolgp/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "lolgp/design.hpp"
#include "lolgp/testfunctions.hpp"

namespace lolgp {

namespace {

Vector truths_at(const TestFunction& fn, int system, const Design& X_box) {
  Vector out(X_box.rows());
  for (int i = 0; i < X_box.rows(); ++i) out[i] = fn.eval(system, X_box.row(i).transpose());
  return out;
}

SystemData eval_system(const TestFunction& fn, int system, const Design& unit) {
  SystemData s;
  s.inputs = unit;
  const Design box = rescale_to_box(unit, fn.lo, fn.hi);
  s.outputs = truths_at(fn, system, box);
  return s;
}

Design grid_2d(int per_axis) {
  Design X(per_axis * per_axis, 2);
  int r = 0;
  for (int i = 0; i < per_axis; ++i) {
    for (int j = 0; j < per_axis; ++j) {
      X(r, 0) = static_cast<double>(i) / (per_axis - 1);
      X(r, 1) = static_cast<double>(j) / (per_axis - 1);
      ++r;
    }
  }
  return X;
}

Design uniform_points(int n, int dim, RngStream& rng) {
  Design X(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) X(i, j) = rng.uniform();
  }
  return X;
}

DatasetFile dataset_from_systems(const TestFunction& fn, std::vector<SystemData> systems,
                                 bool nested) {
  DatasetFile ds;
  ds.mode = fn.multi_fidelity ? "multi-fidelity" : "multi-source";
  ds.nested = nested;
  ds.dim = fn.dim;
  ds.lo = fn.lo;
  ds.hi = fn.hi;
  ds.systems = std::move(systems);
  for (size_t i = 0; i < ds.systems.size(); ++i) {
    const bool target = (i + 1 == ds.systems.size());
    if (target) {
      ds.names.push_back("target");
    } else if (fn.multi_fidelity) {
      ds.names.push_back("level-" + std::to_string(i + 1));
    } else {
      ds.names.push_back("source-" + std::to_string(i + 1));
    }
  }
  ds.provenance.push_back("generated: " + fn.name);
  return ds;
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"forrester-motivating", "forrester-ms", "friedman-ms",
          "forrester-mf",         "branin-mf",    "forrester-mf-no-local"};
}

ExperimentInstance make_experiment_instance(const std::string& name, std::uint64_t seed) {
  const TestFunction& fn = test_function(name);
  RngStream rng = RngStream(seed).child(streams::kDesign);
  ExperimentInstance inst;

  if (name == "forrester-motivating") {
    // Source on a stratum-midpoint grid so no point coincides with the
    // endpoint-included target grid (shared points are rejected in
    // multi-source mode).
    std::vector<SystemData> sys = {eval_system(fn, 0, midpoint_design(24)),
                                   eval_system(fn, 1, equispaced_design(8))};
    inst.dataset = dataset_from_systems(fn, std::move(sys), false);
    inst.test_unit = equispaced_design(100);
  } else if (name == "forrester-ms") {
    std::vector<SystemData> sys = {eval_system(fn, 0, midpoint_design(32)),
                                   eval_system(fn, 1, midpoint_design(32)),
                                   eval_system(fn, 2, equispaced_design(7))};
    inst.dataset = dataset_from_systems(fn, std::move(sys), false);
    inst.test_unit = equispaced_design(100);
  } else if (name == "friedman-ms") {
    RngStream r1 = rng.child(1), r2 = rng.child(2), r3 = rng.child(3), r4 = rng.child(4);
    std::vector<SystemData> sys = {eval_system(fn, 0, latin_hypercube(60, 5, r1)),
                                   eval_system(fn, 1, latin_hypercube(60, 5, r2)),
                                   eval_system(fn, 2, latin_hypercube(15, 5, r3))};
    inst.dataset = dataset_from_systems(fn, std::move(sys), false);
    inst.test_unit = uniform_points(500, 5, r4);
  } else if (name == "forrester-mf" || name == "forrester-mf-no-local") {
    const auto designs = nested_equispaced({21, 7});
    std::vector<SystemData> sys = {eval_system(fn, 0, designs[0]), eval_system(fn, 1, designs[1])};
    inst.dataset = dataset_from_systems(fn, std::move(sys), true);
    inst.test_unit = equispaced_design(100);
  } else if (name == "branin-mf") {
    RngStream r1 = rng.child(1);
    const auto designs = nested_latin_hypercube({48, 24, 12}, 2, r1);
    std::vector<SystemData> sys = {eval_system(fn, 0, designs[0]), eval_system(fn, 1, designs[1]),
                                   eval_system(fn, 2, designs[2])};
    inst.dataset = dataset_from_systems(fn, std::move(sys), true);
    inst.test_unit = grid_2d(20);
  } else {
    std::string msg = "unknown experiment '" + name + "'; available:";
    for (const auto& n : experiment_names()) msg += " " + n;
    throw input_error(msg);
  }

  inst.test_box = rescale_to_box(inst.test_unit, fn.lo, fn.hi);
  inst.test_truth = truths_at(fn, fn.n_systems - 1, inst.test_box);
  return inst;
}

namespace {

double ess_min_of_chain(const MultiSourceChain& c) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& block : {&c.weights, &c.source_values}) {
    for (const auto& mat : *block) {
      const int n = static_cast<int>(mat.cols());
      for (int i : {0, n / 2, n - 1}) {
        const EssResult r = ess(mat.col(i));
        if (!r.degenerate) m = std::min(m, r.ess);
      }
    }
  }
  return std::isfinite(m) ? m : std::numeric_limits<double>::quiet_NaN();
}

double ess_min_of_chain(const MultiFidelityChain& c) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& block : {&c.weights, &c.values_latent}) {
    for (const auto& mat : *block) {
      if (mat.cols() == 0) continue;
      const int n = static_cast<int>(mat.cols());
      for (int i : {0, n / 2, n - 1}) {
        const EssResult r = ess(mat.col(i));
        if (!r.degenerate) m = std::min(m, r.ess);
      }
    }
  }
  return std::isfinite(m) ? m : std::numeric_limits<double>::quiet_NaN();
}

ExperimentCurves make_curves(const ExperimentInstance& inst, const Matrix& pred_table,
                             const Matrix* rho) {
  ExperimentCurves c;
  const int d = static_cast<int>(inst.test_box.cols());
  for (int j = 0; j < d; ++j) c.header.push_back("x" + std::to_string(j + 1));
  c.header.insert(c.header.end(), {"truth", "mean", "sd", "q2.5", "q97.5"});
  int extra = 0;
  if (rho) {
    extra = static_cast<int>(rho->cols());
    for (int l = 0; l < extra; ++l) c.header.push_back("rho_" + std::to_string(l + 1));
  }
  c.table.resize(inst.test_box.rows(), d + 5 + extra);
  c.table.leftCols(d) = inst.test_box;
  c.table.col(d) = inst.test_truth;
  c.table.middleCols(d + 1, 4) = pred_table;
  if (rho) c.table.rightCols(extra) = *rho;
  return c;
}

}  // namespace

ExperimentResult run_experiment(const std::string& name, const std::vector<std::uint64_t>& seeds,
                                const ExperimentRunConfig& config, const RowCallback& on_row) {
  ExperimentResult result;

  for (size_t si = 0; si < seeds.size(); ++si) {
    const std::uint64_t seed = seeds[si];
    const ExperimentInstance inst = make_experiment_instance(name, seed);
    const bool mf = inst.dataset.is_multi_fidelity();
    const std::uint64_t pred_seed = RngStream(seed).child(streams::kTestPoints).raw();

    for (const auto& model : config.models) {
      ExperimentRow row;
      row.experiment = name;
      row.model = model;
      row.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();

      MetricReport rep;
      Matrix pred_table(inst.test_unit.rows(), 4);
      std::unique_ptr<Matrix> rho_means;

      if (model == "gp") {
        const auto& tgt = inst.dataset.systems.back();
        GpSurrogate m = GpSurrogate::fit(tgt.inputs, tgt.outputs, {config.restarts, seed});
        Vector means(inst.test_unit.rows()), sds(inst.test_unit.rows());
        for (int i = 0; i < inst.test_unit.rows(); ++i) {
          const auto [mu, v] = m.predict(inst.test_unit.row(i).transpose());
          means[i] = mu;
          sds[i] = std::sqrt(std::max(0.0, v));
        }
        row.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep = evaluate_gaussian(means, sds, inst.test_truth);
        pred_table.col(0) = means;
        pred_table.col(1) = sds;
        pred_table.col(2) = means - 1.959963984540054 * sds;
        pred_table.col(3) = means + 1.959963984540054 * sds;
      } else if (model == "ko") {
        KoSurrogate m = mf ? KoSurrogate::fit(inst.dataset.to_multi_fidelity(),
                                              {config.restarts, seed})
                           : KoSurrogate::fit(inst.dataset.to_multi_source(),
                                              {config.restarts, seed});
        Vector means(inst.test_unit.rows()), sds(inst.test_unit.rows());
        for (int i = 0; i < inst.test_unit.rows(); ++i) {
          const auto [mu, v] = m.predict(inst.test_unit.row(i).transpose());
          means[i] = mu;
          sds[i] = std::sqrt(std::max(0.0, v));
        }
        row.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep = evaluate_gaussian(means, sds, inst.test_truth);
        pred_table.col(0) = means;
        pred_table.col(1) = sds;
        pred_table.col(2) = means - 1.959963984540054 * sds;
        pred_table.col(3) = means + 1.959963984540054 * sds;
      } else if (model == "bko" || model == "lolgp") {
        TrainConfig tc;
        tc.gibbs.iterations = config.chain_length;
        tc.gibbs.burn_in = config.burn_in;
        tc.gibbs.seed = seed;
        tc.gibbs.activation = (model == "bko") ? Activation::Identity : Activation::Relu;
        tc.optimize.restarts = config.restarts;
        tc.optimize.gradient = config.analytic_gradients ? GradientMode::Analytic
                                                         : GradientMode::FiniteDifference;
        PredictiveSamples s;
        if (mf) {
          MultiFidelitySurrogate m = train_full_mf(inst.dataset.to_multi_fidelity(), tc);
          row.fit_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          row.ess_min = ess_min_of_chain(m.chain);
          s = m.predict(inst.test_unit, pred_seed);
          if (model == "lolgp" && si == 0) {
            MultiFidelityPrecompute pre(m.data, m.hyper);
            rho_means = std::make_unique<Matrix>(
                posterior_mean_transfer_weights_mf(pre, m.chain, inst.test_unit, pred_seed));
          }
        } else {
          MultiSourceSurrogate m = train_full_ms(inst.dataset.to_multi_source(), tc);
          row.fit_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          row.ess_min = ess_min_of_chain(m.chain);
          s = m.predict(inst.test_unit, pred_seed);
          if (model == "lolgp" && si == 0) {
            MultiSourcePrecompute pre(m.data, m.hyper);
            rho_means = std::make_unique<Matrix>(
                posterior_mean_transfer_weights(pre, m.chain, inst.test_unit, pred_seed));
          }
        }
        rep = evaluate_draws(s.draws, inst.test_truth);
        pred_table.col(0) = s.mean;
        pred_table.col(1) = s.variance.array().sqrt();
        pred_table.col(2) = s.q025;
        pred_table.col(3) = s.q975;
      } else {
        throw input_error("unknown model '" + model + "' (expected gp, ko, bko or lolgp)");
      }

      row.rmse = rep.rmse;
      row.crps = rep.crps;
      result.rows.push_back(row);
      if (on_row) on_row(row);
      if (si == 0) {
        result.curves[model] = make_curves(inst, pred_table, rho_means.get());
      }
    }
  }
  return result;
}

double seed_mean_rmse(const std::vector<ExperimentRow>& rows, const std::string& model) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.model == model) {
      s += r.rmse;
      ++n;
    }
  }
  if (n == 0) throw input_error("no rows for model " + model);
  return s / n;
}

double seed_mean_crps(const std::vector<ExperimentRow>& rows, const std::string& model) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.model == model) {
      s += r.crps;
      ++n;
    }
  }
  if (n == 0) throw input_error("no rows for model " + model);
  return s / n;
}

void write_results_csv(const std::string& path, const std::vector<ExperimentRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write file: " + path);
  out << "experiment,model,seed,rmse,crps,ess_min,fit_seconds\n";
  for (const auto& r : rows) {
    out << r.experiment << "," << r.model << "," << r.seed << "," << format_double(r.rmse) << ","
        << format_double(r.crps) << ","
        << (std::isnan(r.ess_min) ? std::string("") : format_double(r.ess_min)) << ","
        << format_double(r.fit_seconds) << "\n";
  }
}

void write_results_json(const std::string& path, const std::vector<ExperimentRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"experiment", r.experiment}, {"model", r.model},
                     {"seed", r.seed},            {"rmse", r.rmse},
                     {"crps", r.crps},            {"fit_seconds", r.fit_seconds}};
    if (std::isnan(r.ess_min)) {
      j["ess_min"] = nullptr;
    } else {
      j["ess_min"] = r.ess_min;
    }
    arr.push_back(j);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write file: " + path);
  out << arr.dump(1) << "\n";
}

}  // namespace lolgp
