#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lolgp/dataset_io.hpp"
#include "lolgp/metrics.hpp"

namespace lolgp {

/// A benchmark instance: dataset (unit-box inputs), its domain bounds, and
/// the test grid with ground-truth target values.
struct ExperimentInstance {
  DatasetFile dataset;
  Design test_unit;   // unit-box test inputs
  Design test_box;    // the same points in original units
  Vector test_truth;  // target function values
};

/// The named experiments with the benchmark design sizes; `seed` drives the
/// random designs (Latin hypercubes, random test points) — the 1-d
/// equispaced designs are seed-independent.
ExperimentInstance make_experiment_instance(const std::string& name, std::uint64_t seed);
std::vector<std::string> experiment_names();

struct ExperimentRunConfig {
  int chain_length = 10000;
  int burn_in = 1000;
  int restarts = 5;
  std::vector<std::string> models = {"gp", "ko", "bko", "lolgp"};
  bool analytic_gradients = false;
};

struct ExperimentRow {
  std::string experiment;
  std::string model;
  std::uint64_t seed = 0;
  double rmse = 0.0;
  double crps = 0.0;
  double ess_min = std::numeric_limits<double>::quiet_NaN();  // NaN: model has no chain
  double fit_seconds = 0.0;
};

/// Per-model prediction curves at the test points for plot-data export:
/// columns x1..xd, truth, mean, sd, q2.5, q97.5 [, rho_1..rho_L].
struct ExperimentCurves {
  std::vector<std::string> header;
  Matrix table;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::map<std::string, ExperimentCurves> curves;  // first seed only, keyed by model
};

using RowCallback = std::function<void(const ExperimentRow&)>;

/// Fit every requested model for every seed, score on the test grid, and
/// collect timing + chain diagnostics. `on_row` (may be null) fires as each
/// row completes so partial results can be persisted by the caller.
ExperimentResult run_experiment(const std::string& name, const std::vector<std::uint64_t>& seeds,
                                const ExperimentRunConfig& config, const RowCallback& on_row);

/// Seed-averaged metric for one model over a result table.
double seed_mean_rmse(const std::vector<ExperimentRow>& rows, const std::string& model);
double seed_mean_crps(const std::vector<ExperimentRow>& rows, const std::string& model);

void write_results_csv(const std::string& path, const std::vector<ExperimentRow>& rows);
void write_results_json(const std::string& path, const std::vector<ExperimentRow>& rows);

}  // namespace lolgp
