#pragma once

#include <vector>

#include "lolgp/common.hpp"

namespace lolgp {

/// Anisotropic squared-exponential kernel
///   k(x, x') = variance * exp(-sum_j (x_j - x'_j)^2 / l_j^2),
/// plus `nugget` on the diagonal (x == x' exactly). The nugget is purely
/// numerical jitter for deterministic simulators.
struct KernelSpec {
  double variance = 1.0;
  Vector lengthscales;  // one per input dimension, all > 0
  double nugget = 1e-8;

  KernelSpec() = default;
  KernelSpec(double var, Vector ls, double nug = 1e-8)
      : variance(var), lengthscales(std::move(ls)), nugget(nug) {
    validate();
  }

  static KernelSpec isotropic(double var, double ls, int dim, double nug = 1e-8) {
    return KernelSpec(var, Vector::Constant(dim, ls), nug);
  }

  int dim() const { return static_cast<int>(lengthscales.size()); }
  void validate() const;
};

/// Evaluate the kernel at a pair of points. Adds the nugget only when the
/// points are bitwise identical.
double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y);

/// Covariance matrix K(X, X) including the nugget on the diagonal.
Matrix kernel_matrix(const KernelSpec& spec, const Design& X);

/// Cross-covariance K(X, Y); no nugget is added even for coincident rows.
Matrix kernel_cross(const KernelSpec& spec, const Design& X, const Design& Y);

/// Covariance vector k(X, x) against a single point; no nugget.
Vector kernel_vector(const KernelSpec& spec, const Design& X, const Vector& x);

/// Derivatives of K(X, X) with respect to log(variance) and each
/// log(lengthscale); used by the analytic-gradient path of the MAP objective.
/// Entry 0 is d/dlog(variance), entries 1..d are d/dlog(l_j).
std::vector<Matrix> kernel_matrix_log_grads(const KernelSpec& spec, const Design& X);

}  // namespace lolgp
