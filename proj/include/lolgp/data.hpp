#pragma once

#include <string>
#include <vector>

#include "lolgp/common.hpp"

namespace lolgp {

/// Transfer-weight activation: `Relu` clamps the latent weight at zero
/// (transfer is switched off wherever the weight is non-positive);
/// `Identity` leaves it unconstrained, recovering the GP-weight transfer
/// model used as the `bko` baseline.
enum class Activation { Relu, Identity };

inline double apply_activation(Activation a, double w) {
  return (a == Activation::Relu) ? (w > 0.0 ? w : 0.0) : w;
}

struct SystemData {
  Design inputs;    // n x d, canonical unit-hypercube coordinates
  Vector outputs;   // n
};

/// Data for L source systems plus the target system. All designs share one
/// input dimension; no input point may appear in both a source design and
/// the target design (the samplers' conditionals assume disjoint designs).
struct MultiSourceData {
  std::vector<SystemData> sources;
  SystemData target;

  int dim() const { return static_cast<int>(target.inputs.cols()); }
  int n_sources() const { return static_cast<int>(sources.size()); }

  void validate() const;
};

/// Data for L+1 fidelity levels ordered by increasing fidelity; the last
/// level is the target. `nested` asserts X_{l+1} subset of X_l for all l
/// (checked by exact coordinate equality up to 1e-12).
struct MultiFidelityData {
  std::vector<SystemData> levels;
  bool nested = false;

  int dim() const { return static_cast<int>(levels.front().inputs.cols()); }
  int n_levels() const { return static_cast<int>(levels.size()); }
  const SystemData& target() const { return levels.back(); }

  void validate() const;

  /// True if every level's design is contained in the next-lower level's.
  static bool detect_nested(const std::vector<SystemData>& levels, double tol = 1e-12);
};

bool points_equal(const Vector& a, const Vector& b, double tol = 1e-12);

/// Index of `x` in design `X`, or -1 (exact match up to tol).
int find_point(const Design& X, const Vector& x, double tol = 1e-12);

}  // namespace lolgp
