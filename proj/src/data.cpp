#include "lolgp/data.hpp"

#include <cmath>

namespace lolgp {

bool points_equal(const Vector& a, const Vector& b, double tol) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (std::fabs(a[j] - b[j]) > tol) return false;
  }
  return true;
}

int find_point(const Design& X, const Vector& x, double tol) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (points_equal(X.row(i), x, tol)) return static_cast<int>(i);
  }
  return -1;
}

namespace {
void check_system(const SystemData& s, Eigen::Index dim, const std::string& name) {
  if (s.inputs.rows() != s.outputs.size()) {
    throw input_error(name + ": input and output counts differ");
  }
  if (s.inputs.rows() < 1) throw input_error(name + ": needs at least one observation");
  if (s.inputs.cols() != dim) throw input_error(name + ": inconsistent input dimension");
  if (!s.inputs.allFinite() || !s.outputs.allFinite()) {
    throw input_error(name + ": non-finite values");
  }
}
}  // namespace

void MultiSourceData::validate() const {
  if (sources.empty()) throw input_error("multi-source data needs at least one source");
  const Eigen::Index d = target.inputs.cols();
  if (d < 1) throw input_error("input dimension must be >= 1");
  check_system(target, d, "target");
  for (size_t l = 0; l < sources.size(); ++l) {
    check_system(sources[l], d, "source " + std::to_string(l + 1));
  }
  // The conditionals place latent source values on the target design; a point
  // present in both designs would make the same quantity both observed and
  // latent, so shared points are rejected outright.
  for (size_t l = 0; l < sources.size(); ++l) {
    for (Eigen::Index i = 0; i < target.inputs.rows(); ++i) {
      if (find_point(sources[l].inputs, target.inputs.row(i)) >= 0) {
        throw input_error(
            "target design point " + std::to_string(i) + " also appears in source " +
            std::to_string(l + 1) +
            "; shared source/target design points are not supported in multi-source mode");
      }
    }
  }
}

bool MultiFidelityData::detect_nested(const std::vector<SystemData>& levels, double tol) {
  for (size_t l = 0; l + 1 < levels.size(); ++l) {
    const Design& lower = levels[l].inputs;
    const Design& higher = levels[l + 1].inputs;
    for (Eigen::Index i = 0; i < higher.rows(); ++i) {
      if (find_point(lower, higher.row(i), tol) < 0) return false;
    }
  }
  return true;
}

void MultiFidelityData::validate() const {
  if (levels.empty()) throw input_error("multi-fidelity data needs at least one level");
  const Eigen::Index d = levels.front().inputs.cols();
  if (d < 1) throw input_error("input dimension must be >= 1");
  for (size_t l = 0; l < levels.size(); ++l) {
    check_system(levels[l], d, "level " + std::to_string(l + 1));
  }
  if (nested && !detect_nested(levels)) {
    throw input_error("data marked nested but level designs are not a subset chain");
  }
}

}  // namespace lolgp
