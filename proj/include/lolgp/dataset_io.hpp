#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lolgp/baselines.hpp"
#include "lolgp/data.hpp"
#include "lolgp/hyperopt.hpp"

namespace lolgp {

/// On-disk dataset (JSON, schema v1). Inputs are stored on the unit box with
/// the original bounds kept alongside, so files are independent of the
/// simulators that produced them.
struct DatasetFile {
  int schema_version = 1;
  std::string mode;  // "multi-source" | "multi-fidelity"
  bool nested = false;
  int dim = 1;
  Vector lo, hi;                    // original box bounds
  std::vector<std::string> names;   // per system, target last
  std::vector<SystemData> systems;  // unit-box inputs, raw outputs
  std::vector<std::string> provenance;

  bool is_multi_fidelity() const { return mode == "multi-fidelity"; }
  MultiSourceData to_multi_source() const;
  MultiFidelityData to_multi_fidelity() const;

  void validate() const;
};

DatasetFile load_dataset(const std::string& path);
void save_dataset(const DatasetFile& ds, const std::string& path);

/// Build a dataset from per-system CSV files (one row per run, inputs then
/// the output in the last column). Inputs are rescaled to the unit box with
/// supplied or inferred (column min/max over all systems) bounds.
DatasetFile ingest_external(const std::vector<std::string>& csv_paths, const std::string& mode,
                            bool nested, const std::optional<Vector>& lo,
                            const std::optional<Vector>& hi);

/// Persisted fitted model (JSON). For sampler-based models the kept chain is
/// stored, so prediction never reruns MCMC.
struct ModelBundle {
  int schema_version = 1;
  std::string model;  // "gp" | "ko" | "bko" | "lolgp"
  DatasetFile dataset;
  std::uint64_t seed = 0;
  int chain_length = 0;
  int burn_in = 0;
  int restarts = 5;

  // gp
  std::optional<KernelSpec> gp_kernel;
  // ko
  std::optional<HyperParams> ko_hyper;
  std::optional<Vector> ko_rho;
  // bko / lolgp
  std::optional<HyperParams> hyper;
  std::optional<MultiSourceChain> ms_chain;
  std::optional<MultiFidelityChain> mf_chain;
  Standardizer standardizer;

  /// Predictive summaries at unit-box test points, on the original output
  /// scale: mean, sd, q2.5, q97.5 per row.
  Matrix predict_table(const Design& X_unit, std::uint64_t seed) const;
};

void save_bundle(const ModelBundle& b, const std::string& path);
ModelBundle load_bundle(const std::string& path);

// Flat numeric CSV helpers (deterministic formatting, 17 significant digits).
Matrix read_csv_matrix(const std::string& path, bool expect_header, std::vector<std::string>* header);
void write_csv_matrix(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& header);

std::string format_double(double v);

}  // namespace lolgp
