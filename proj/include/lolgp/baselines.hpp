#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lolgp/data.hpp"
#include "lolgp/gp.hpp"
#include "lolgp/hyper.hpp"

namespace lolgp {

struct MlFitOptions {
  int restarts = 5;
  std::uint64_t seed = 0;
  double nugget = 1e-8;
};

/// Target-only GP with maximum-likelihood kernel hyperparameters.
/// Outputs are standardized internally; predictions are back-transformed.
class GpSurrogate {
 public:
  static GpSurrogate fit(const Design& X, const Vector& f, const MlFitOptions& opts = {});

  /// Predictive mean and variance on the original output scale.
  std::pair<double, double> predict(const Vector& x) const;

  const KernelSpec& kernel() const { return kernel_; }
  const Standardizer& standardizer() const { return std_; }

 private:
  GpPosterior post_;
  KernelSpec kernel_;
  Standardizer std_;
};

/// Constant-weight transfer model (autoregressive co-kriging): the target is
/// a scalar-weighted sum of sources plus a GP discrepancy in multi-source
/// form, or a per-step scalar autoregression over fidelity levels. Transfer
/// scalars and all kernel hyperparameters are fitted jointly by maximum
/// likelihood of the joint Gaussian; prediction is exact conditioning, no
/// sampling involved.
class KoSurrogate {
 public:
  static KoSurrogate fit(const MultiSourceData& data, const MlFitOptions& opts = {});
  static KoSurrogate fit(const MultiFidelityData& data, const MlFitOptions& opts = {});

  /// Fit with the transfer scalars pinned (diagnostic mode; hyperparameters
  /// are still optimized).
  static KoSurrogate fit_fixed_rho(const MultiSourceData& data, const Vector& rho,
                                   const MlFitOptions& opts = {});

  /// Closed-form predictive of a fixed model (no maximum likelihood); used by
  /// oracle tests and the sampler cross-checks.
  static KoSurrogate assemble(const MultiSourceData& data, const HyperParams& hp,
                              const Vector& rho);
  static KoSurrogate assemble(const MultiFidelityData& data, const HyperParams& hp,
                              const Vector& rho);

  std::pair<double, double> predict(const Vector& x) const;

  const Vector& transfer_scalars() const { return rho_; }
  const HyperParams& hyper() const { return hp_; }
  const Standardizer& standardizer() const { return std_; }

 private:
  void build(bool standardize_outputs);

  bool multi_fidelity_ = false;
  MultiSourceData ms_;
  MultiFidelityData mf_;
  HyperParams hp_;
  Vector rho_;
  Standardizer std_;

  // Stacked joint-Gaussian machinery.
  std::vector<Design> designs_;   // per system, target last
  Vector stacked_;                // standardized outputs, target last
  SpdFactor factor_;
  Vector alpha_;                  // C^{-1} y
};

}  // namespace lolgp
