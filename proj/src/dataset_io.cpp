#include "lolgp/dataset_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "lolgp/design.hpp"
#include "lolgp/multifidelity.hpp"
#include "lolgp/multisource.hpp"

namespace lolgp {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const json& a, const std::string& field) {
  if (!a.is_array()) throw input_error("field '" + field + "' must be an array");
  Vector v(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw input_error("field '" + field + "' must hold numbers");
    v[i] = a[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from_json(const json& rows, const std::string& field) {
  if (!rows.is_array()) throw input_error("field '" + field + "' must be an array of rows");
  if (rows.empty()) return Matrix(0, 0);
  const size_t cols = rows[0].is_array() ? rows[0].size() : 0;
  Matrix m(rows.size(), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols) {
      throw input_error("field '" + field + "' rows must be rectangular");
    }
    for (size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

json kernel_to_json(const KernelSpec& k) {
  return json{{"variance", k.variance},
              {"lengthscales", vector_to_json(k.lengthscales)},
              {"nugget", k.nugget}};
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec k;
  k.variance = j.at("variance").get<double>();
  k.lengthscales = vector_from_json(j.at("lengthscales"), "lengthscales");
  k.nugget = j.at("nugget").get<double>();
  k.validate();
  return k;
}

json hyper_to_json(const HyperParams& hp) {
  json j;
  for (const auto& k : hp.f_kernels) j["f"].push_back(kernel_to_json(k));
  for (const auto& k : hp.w_kernels) j["w"].push_back(kernel_to_json(k));
  for (const auto& k : hp.d_kernels) j["d"].push_back(kernel_to_json(k));
  if (!j.contains("f")) j["f"] = json::array();
  if (!j.contains("w")) j["w"] = json::array();
  if (!j.contains("d")) j["d"] = json::array();
  return j;
}

HyperParams hyper_from_json(const json& j) {
  HyperParams hp;
  for (const auto& k : j.at("f")) hp.f_kernels.push_back(kernel_from_json(k));
  for (const auto& k : j.at("w")) hp.w_kernels.push_back(kernel_from_json(k));
  for (const auto& k : j.at("d")) hp.d_kernels.push_back(kernel_from_json(k));
  return hp;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw input_error("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write file: " + path);
  out << text;
}

}  // namespace

void DatasetFile::validate() const {
  if (schema_version != 1) {
    throw input_error("unrecognized dataset schema_version " + std::to_string(schema_version));
  }
  if (mode != "multi-source" && mode != "multi-fidelity") {
    throw input_error("field 'mode' must be 'multi-source' or 'multi-fidelity'");
  }
  if (systems.size() < 2) throw input_error("dataset needs at least two systems");
  if (names.size() != systems.size()) throw input_error("field 'names' has wrong length");
  if (lo.size() != dim || hi.size() != dim) throw input_error("bounds do not match dimension");
  for (const auto& s : systems) {
    if (s.inputs.cols() != dim) throw input_error("system input dimension mismatch");
    if (s.inputs.rows() != s.outputs.size()) {
      throw input_error("system input/output counts differ");
    }
  }
  if (is_multi_fidelity()) {
    to_multi_fidelity().validate();
  } else {
    to_multi_source().validate();
  }
}

MultiSourceData DatasetFile::to_multi_source() const {
  if (is_multi_fidelity()) throw input_error("dataset is multi-fidelity, expected multi-source");
  MultiSourceData d;
  for (size_t i = 0; i + 1 < systems.size(); ++i) d.sources.push_back(systems[i]);
  d.target = systems.back();
  return d;
}

MultiFidelityData DatasetFile::to_multi_fidelity() const {
  if (!is_multi_fidelity()) throw input_error("dataset is multi-source, expected multi-fidelity");
  MultiFidelityData d;
  d.levels = systems;
  d.nested = nested;
  return d;
}

DatasetFile load_dataset(const std::string& path) {
  const json j = load_json_file(path);
  DatasetFile ds;
  try {
    ds.schema_version = j.at("schema_version").get<int>();
    if (ds.schema_version != 1) {
      throw input_error("unrecognized dataset schema_version " +
                        std::to_string(ds.schema_version));
    }
    ds.mode = j.at("mode").get<std::string>();
    ds.nested = j.value("nested", false);
    ds.dim = j.at("dimension").get<int>();
    ds.lo = vector_from_json(j.at("bounds").at("lower"), "bounds.lower");
    ds.hi = vector_from_json(j.at("bounds").at("upper"), "bounds.upper");
    for (const auto& sys : j.at("systems")) {
      ds.names.push_back(sys.at("name").get<std::string>());
      SystemData s;
      s.inputs = matrix_from_json(sys.at("inputs"), "inputs");
      s.outputs = vector_from_json(sys.at("outputs"), "outputs");
      ds.systems.push_back(std::move(s));
    }
    if (j.contains("provenance")) {
      for (const auto& p : j.at("provenance")) ds.provenance.push_back(p.get<std::string>());
    }
  } catch (const json::exception& e) {
    throw input_error(std::string("dataset schema error: ") + e.what());
  }
  ds.validate();
  return ds;
}

void save_dataset(const DatasetFile& ds, const std::string& path) {
  ds.validate();
  json j;
  j["schema_version"] = ds.schema_version;
  j["mode"] = ds.mode;
  j["nested"] = ds.nested;
  j["dimension"] = ds.dim;
  j["bounds"] = {{"lower", vector_to_json(ds.lo)}, {"upper", vector_to_json(ds.hi)}};
  j["systems"] = json::array();
  for (size_t i = 0; i < ds.systems.size(); ++i) {
    j["systems"].push_back(json{{"name", ds.names[i]},
                                {"inputs", matrix_to_json(ds.systems[i].inputs)},
                                {"outputs", vector_to_json(ds.systems[i].outputs)}});
  }
  j["provenance"] = ds.provenance;
  write_text_file(path, j.dump(1) + "\n");
}

DatasetFile ingest_external(const std::vector<std::string>& csv_paths, const std::string& mode,
                            bool nested, const std::optional<Vector>& lo,
                            const std::optional<Vector>& hi) {
  if (csv_paths.size() < 2) throw input_error("ingest needs at least two system CSVs");
  std::vector<Matrix> tables;
  int dim = -1;
  for (const auto& p : csv_paths) {
    Matrix t = read_csv_matrix(p, false, nullptr);
    if (t.cols() < 2) throw input_error(p + ": need at least one input column plus the output");
    if (dim < 0) {
      dim = static_cast<int>(t.cols()) - 1;
    } else if (static_cast<int>(t.cols()) - 1 != dim) {
      throw input_error(p + ": inconsistent column count across systems");
    }
    tables.push_back(std::move(t));
  }

  Vector blo, bhi;
  if (lo && hi) {
    blo = *lo;
    bhi = *hi;
    if (blo.size() != dim || bhi.size() != dim) throw input_error("bounds dimension mismatch");
  } else {
    blo = Vector::Constant(dim, std::numeric_limits<double>::infinity());
    bhi = Vector::Constant(dim, -std::numeric_limits<double>::infinity());
    for (const auto& t : tables) {
      for (int j = 0; j < dim; ++j) {
        blo[j] = std::min(blo[j], t.col(j).minCoeff());
        bhi[j] = std::max(bhi[j], t.col(j).maxCoeff());
      }
    }
    for (int j = 0; j < dim; ++j) {
      if (!(bhi[j] > blo[j])) bhi[j] = blo[j] + 1.0;  // constant column
    }
  }

  DatasetFile ds;
  ds.mode = mode;
  ds.nested = nested;
  ds.dim = dim;
  ds.lo = blo;
  ds.hi = bhi;
  for (size_t k = 0; k < tables.size(); ++k) {
    SystemData s;
    s.inputs = rescale_to_unit(tables[k].leftCols(dim), blo, bhi);
    s.outputs = tables[k].col(dim);
    ds.systems.push_back(std::move(s));
    const bool is_target = (k + 1 == tables.size());
    std::string base = mode == "multi-fidelity" ? "level-" + std::to_string(k + 1)
                                                : "source-" + std::to_string(k + 1);
    ds.names.push_back(is_target ? "target" : base);
    ds.provenance.push_back(csv_paths[k]);
  }
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// Model bundles

namespace {

json ms_chain_to_json(const MultiSourceChain& c) {
  json j;
  j["activation"] = (c.activation == Activation::Relu) ? "relu" : "identity";
  j["weights"] = json::array();
  j["source_values"] = json::array();
  for (const auto& m : c.weights) j["weights"].push_back(matrix_to_json(m));
  for (const auto& m : c.source_values) j["source_values"].push_back(matrix_to_json(m));
  return j;
}

MultiSourceChain ms_chain_from_json(const json& j) {
  MultiSourceChain c;
  c.activation = (j.at("activation").get<std::string>() == "relu") ? Activation::Relu
                                                                   : Activation::Identity;
  for (const auto& m : j.at("weights")) c.weights.push_back(matrix_from_json(m, "weights"));
  for (const auto& m : j.at("source_values")) {
    c.source_values.push_back(matrix_from_json(m, "source_values"));
  }
  return c;
}

json mf_chain_to_json(const MultiFidelityChain& c) {
  json j;
  j["activation"] = (c.activation == Activation::Relu) ? "relu" : "identity";
  j["n_kept"] = c.n_kept;
  j["weights"] = json::array();
  j["values_latent"] = json::array();
  for (const auto& m : c.weights) j["weights"].push_back(matrix_to_json(m));
  for (const auto& m : c.values_latent) j["values_latent"].push_back(matrix_to_json(m));
  return j;
}

MultiFidelityChain mf_chain_from_json(const json& j) {
  MultiFidelityChain c;
  c.activation = (j.at("activation").get<std::string>() == "relu") ? Activation::Relu
                                                                   : Activation::Identity;
  c.n_kept = j.at("n_kept").get<int>();
  for (const auto& m : j.at("weights")) c.weights.push_back(matrix_from_json(m, "weights"));
  for (const auto& m : j.at("values_latent")) {
    c.values_latent.push_back(matrix_from_json(m, "values_latent"));
  }
  return c;
}

json dataset_to_json_obj(const DatasetFile& ds) {
  json j;
  j["schema_version"] = ds.schema_version;
  j["mode"] = ds.mode;
  j["nested"] = ds.nested;
  j["dimension"] = ds.dim;
  j["bounds"] = {{"lower", vector_to_json(ds.lo)}, {"upper", vector_to_json(ds.hi)}};
  j["systems"] = json::array();
  for (size_t i = 0; i < ds.systems.size(); ++i) {
    j["systems"].push_back(json{{"name", ds.names[i]},
                                {"inputs", matrix_to_json(ds.systems[i].inputs)},
                                {"outputs", vector_to_json(ds.systems[i].outputs)}});
  }
  j["provenance"] = ds.provenance;
  return j;
}

DatasetFile dataset_from_json_obj(const json& j) {
  DatasetFile ds;
  ds.schema_version = j.at("schema_version").get<int>();
  ds.mode = j.at("mode").get<std::string>();
  ds.nested = j.value("nested", false);
  ds.dim = j.at("dimension").get<int>();
  ds.lo = vector_from_json(j.at("bounds").at("lower"), "bounds.lower");
  ds.hi = vector_from_json(j.at("bounds").at("upper"), "bounds.upper");
  for (const auto& sys : j.at("systems")) {
    ds.names.push_back(sys.at("name").get<std::string>());
    SystemData s;
    s.inputs = matrix_from_json(sys.at("inputs"), "inputs");
    s.outputs = vector_from_json(sys.at("outputs"), "outputs");
    ds.systems.push_back(std::move(s));
  }
  if (j.contains("provenance")) {
    for (const auto& p : j.at("provenance")) ds.provenance.push_back(p.get<std::string>());
  }
  return ds;
}

}  // namespace

void save_bundle(const ModelBundle& b, const std::string& path) {
  json j;
  j["schema_version"] = b.schema_version;
  j["model"] = b.model;
  j["seed"] = b.seed;
  j["chain_length"] = b.chain_length;
  j["burn_in"] = b.burn_in;
  j["restarts"] = b.restarts;
  j["dataset"] = dataset_to_json_obj(b.dataset);
  j["standardization"] = {{"mean", b.standardizer.mean}, {"sd", b.standardizer.sd}};
  if (b.gp_kernel) j["gp_kernel"] = kernel_to_json(*b.gp_kernel);
  if (b.ko_hyper) j["ko_hyper"] = hyper_to_json(*b.ko_hyper);
  if (b.ko_rho) j["ko_rho"] = vector_to_json(*b.ko_rho);
  if (b.hyper) j["hyper"] = hyper_to_json(*b.hyper);
  if (b.ms_chain) j["ms_chain"] = ms_chain_to_json(*b.ms_chain);
  if (b.mf_chain) j["mf_chain"] = mf_chain_to_json(*b.mf_chain);
  write_text_file(path, j.dump() + "\n");
}

ModelBundle load_bundle(const std::string& path) {
  const json j = load_json_file(path);
  ModelBundle b;
  try {
    b.schema_version = j.at("schema_version").get<int>();
    if (b.schema_version != 1) {
      throw input_error("unrecognized bundle schema_version " + std::to_string(b.schema_version));
    }
    b.model = j.at("model").get<std::string>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.chain_length = j.at("chain_length").get<int>();
    b.burn_in = j.at("burn_in").get<int>();
    b.restarts = j.at("restarts").get<int>();
    b.dataset = dataset_from_json_obj(j.at("dataset"));
    b.standardizer.mean = j.at("standardization").at("mean").get<double>();
    b.standardizer.sd = j.at("standardization").at("sd").get<double>();
    if (j.contains("gp_kernel")) b.gp_kernel = kernel_from_json(j.at("gp_kernel"));
    if (j.contains("ko_hyper")) b.ko_hyper = hyper_from_json(j.at("ko_hyper"));
    if (j.contains("ko_rho")) b.ko_rho = vector_from_json(j.at("ko_rho"), "ko_rho");
    if (j.contains("hyper")) b.hyper = hyper_from_json(j.at("hyper"));
    if (j.contains("ms_chain")) b.ms_chain = ms_chain_from_json(j.at("ms_chain"));
    if (j.contains("mf_chain")) b.mf_chain = mf_chain_from_json(j.at("mf_chain"));
  } catch (const json::exception& e) {
    throw input_error(std::string("bundle schema error: ") + e.what());
  }
  return b;
}

Matrix ModelBundle::predict_table(const Design& X_unit, std::uint64_t pred_seed) const {
  const int n = static_cast<int>(X_unit.rows());
  Matrix out(n, 4);  // mean, sd, q2.5, q97.5

  if (model == "gp") {
    const GpPosterior post = gp_fit(
        dataset.systems.back().inputs,
        Standardizer{standardizer.mean, standardizer.sd}.forward(dataset.systems.back().outputs),
        *gp_kernel);
    for (int i = 0; i < n; ++i) {
      const auto [m, v] = post.predict(X_unit.row(i).transpose());
      const double mean = standardizer.inverse(m);
      const double sd = std::sqrt(std::max(0.0, v)) * standardizer.sd;
      out(i, 0) = mean;
      out(i, 1) = sd;
      out(i, 2) = mean - 1.959963984540054 * sd;
      out(i, 3) = mean + 1.959963984540054 * sd;
    }
    return out;
  }
  if (model == "ko") {
    // Rebuild on the standardized scale the hyperparameters were fitted on.
    DatasetFile std_ds = dataset;
    for (auto& s : std_ds.systems) s.outputs = standardizer.forward(s.outputs);
    KoSurrogate ko = std_ds.is_multi_fidelity()
                         ? KoSurrogate::assemble(std_ds.to_multi_fidelity(), *ko_hyper, *ko_rho)
                         : KoSurrogate::assemble(std_ds.to_multi_source(), *ko_hyper, *ko_rho);
    for (int i = 0; i < n; ++i) {
      const auto [m, v] = ko.predict(X_unit.row(i).transpose());
      const double mean = standardizer.inverse(m);
      const double sd = std::sqrt(std::max(0.0, v)) * standardizer.sd;
      out(i, 0) = mean;
      out(i, 1) = sd;
      out(i, 2) = mean - 1.959963984540054 * sd;
      out(i, 3) = mean + 1.959963984540054 * sd;
    }
    return out;
  }
  if (model == "bko" || model == "lolgp") {
    PredictiveSamples s;
    if (dataset.is_multi_fidelity()) {
      MultiFidelitySurrogate m;
      m.data = dataset.to_multi_fidelity();
      for (auto& lv : m.data.levels) lv.outputs = standardizer.forward(lv.outputs);
      m.standardizer = standardizer;
      m.hyper = *hyper;
      m.chain = *mf_chain;
      m.use_nested_path = dataset.nested;
      s = m.predict(X_unit, pred_seed);
    } else {
      MultiSourceSurrogate m;
      m.data = dataset.to_multi_source();
      for (auto& src : m.data.sources) src.outputs = standardizer.forward(src.outputs);
      m.data.target.outputs = standardizer.forward(m.data.target.outputs);
      m.standardizer = standardizer;
      m.hyper = *hyper;
      m.chain = *ms_chain;
      s = m.predict(X_unit, pred_seed);
    }
    for (int i = 0; i < n; ++i) {
      out(i, 0) = s.mean[i];
      out(i, 1) = std::sqrt(std::max(0.0, s.variance[i]));
      out(i, 2) = s.q025[i];
      out(i, 3) = s.q975[i];
    }
    return out;
  }
  throw input_error("unknown model in bundle: " + model);
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Matrix read_csv_matrix(const std::string& path, bool expect_header,
                       std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  size_t cols = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && expect_header) {
      if (header) {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) header->push_back(tok);
      }
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        row.push_back(std::stod(tok));
      } catch (...) {
        throw input_error(path + ":" + std::to_string(line_no) + ": non-numeric value '" + tok +
                          "'");
      }
    }
    if (cols == 0) {
      cols = row.size();
    } else if (row.size() != cols) {
      throw input_error(path + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_csv_matrix(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write file: " + path);
  for (size_t j = 0; j < header.size(); ++j) {
    out << header[j] << (j + 1 < header.size() ? "," : "\n");
  }
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      out << format_double(m(i, j)) << (j + 1 < m.cols() ? "," : "\n");
    }
  }
}

}  // namespace lolgp
