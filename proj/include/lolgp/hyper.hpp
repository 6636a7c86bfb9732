#pragma once

#include <vector>

#include "lolgp/kernel.hpp"

namespace lolgp {

/// Full set of kernel hyperparameters for a transfer model.
/// Multi-source: f_kernels holds one spec per source (k_l), d_kernels holds
/// the single discrepancy kernel. Multi-fidelity: f_kernels holds the single
/// level-1 kernel, d_kernels one discrepancy kernel per fidelity step.
/// w_kernels always holds one latent-weight kernel per source / step.
struct HyperParams {
  std::vector<KernelSpec> f_kernels;
  std::vector<KernelSpec> w_kernels;
  std::vector<KernelSpec> d_kernels;

  void validate() const {
    for (const auto& k : f_kernels) k.validate();
    for (const auto& k : w_kernels) k.validate();
    for (const auto& k : d_kernels) k.validate();
  }

  /// Default initialization on unit-scaled data: every variance 1, every
  /// lengthscale 0.5.
  static HyperParams initial(int n_f, int n_w, int n_d, int dim, double nugget = 1e-8) {
    HyperParams h;
    for (int i = 0; i < n_f; ++i) h.f_kernels.push_back(KernelSpec::isotropic(1.0, 0.5, dim, nugget));
    for (int i = 0; i < n_w; ++i) h.w_kernels.push_back(KernelSpec::isotropic(1.0, 0.5, dim, nugget));
    for (int i = 0; i < n_d; ++i) h.d_kernels.push_back(KernelSpec::isotropic(1.0, 0.5, dim, nugget));
    return h;
  }

  static HyperParams initial_multisource(int n_sources, int dim, double nugget = 1e-8) {
    return initial(n_sources, n_sources, 1, dim, nugget);
  }
  static HyperParams initial_multifidelity(int n_levels, int dim, double nugget = 1e-8) {
    return initial(1, n_levels - 1, n_levels - 1, dim, nugget);
  }

  /// Pack all (variance, lengthscales) into one log-parameter vector; nuggets
  /// are fixed, not optimized. Order: f kernels, then w, then d; within a
  /// kernel, variance first.
  Vector pack_log() const;
  void unpack_log(const Vector& theta);
  int n_params() const;
};

}  // namespace lolgp
