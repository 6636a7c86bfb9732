#pragma once

#include <cstdint>
#include <optional>

#include "lolgp/hyper.hpp"
#include "lolgp/multifidelity.hpp"
#include "lolgp/multisource.hpp"

namespace lolgp {

/// Independent normal prior on each log-transformed kernel hyperparameter
/// (weakly informative on unit-scaled data).
struct PriorSpec {
  double log_mean = 0.0;
  double log_sd = 1.0;

  double log_density(const Vector& log_params) const;
  Vector log_density_grad(const Vector& log_params) const;
};

enum class GradientMode { FiniteDifference, Analytic };

/// Log-posterior of the kernel hyperparameters given the data and a point
/// estimate of the latent state: the joint Gaussian log-density of
/// (data, latent state) under the transfer model, plus the log prior.
/// Returns -inf when a covariance is numerically non-PD.
double map_objective_ms(const MultiSourceData& data, const MultiSourceState& theta_hat,
                        const HyperParams& hp, const PriorSpec& prior,
                        Activation activation = Activation::Relu);

/// Multi-fidelity variant. On nested data the data likelihood factorizes
/// over levels (per-level residual Gaussians); otherwise the augmented-design
/// joint density is used.
double map_objective_mf(const MultiFidelityData& data, const MultiFidelityState& theta_hat,
                        const HyperParams& hp, const PriorSpec& prior,
                        Activation activation = Activation::Relu);

/// Analytic gradient with respect to the packed log hyperparameters.
Vector map_objective_ms_grad(const MultiSourceData& data, const MultiSourceState& theta_hat,
                             const HyperParams& hp, const PriorSpec& prior,
                             Activation activation = Activation::Relu);
Vector map_objective_mf_grad(const MultiFidelityData& data, const MultiFidelityState& theta_hat,
                             const HyperParams& hp, const PriorSpec& prior,
                             Activation activation = Activation::Relu);

struct OptimizeOptions {
  int restarts = 5;
  std::uint64_t seed = 0;
  GradientMode gradient = GradientMode::FiniteDifference;
  double fd_step = 1e-5;  // central-difference step in log space
};

/// Best-of-restarts maximization of the MAP objective, starting from `hp0`.
/// Restart k > 0 perturbs the packed log parameters. If no restart improves
/// on the objective at hp0, hp0 is returned with a warning on stderr.
HyperParams map_optimize_ms(const MultiSourceData& data, const MultiSourceState& theta_hat,
                            const HyperParams& hp0, const PriorSpec& prior,
                            const OptimizeOptions& opts, Activation activation = Activation::Relu);
HyperParams map_optimize_mf(const MultiFidelityData& data, const MultiFidelityState& theta_hat,
                            const HyperParams& hp0, const PriorSpec& prior,
                            const OptimizeOptions& opts, Activation activation = Activation::Relu);

/// Training pipeline configuration for the transfer surrogates.
struct TrainConfig {
  GibbsConfig gibbs;
  OptimizeOptions optimize;
  PriorSpec prior;
  double nugget = 1e-8;
  bool skip_optimization = false;  // keep the initial hyperparameters
};

/// A fitted transfer surrogate: standardization, optimized hyperparameters
/// and the kept sample chain. Prediction replays the chain, never the
/// sampler.
struct MultiSourceSurrogate {
  MultiSourceData data;  // standardized outputs, unit-box inputs
  Standardizer standardizer;
  HyperParams hyper;
  MultiSourceChain chain;

  PredictiveSamples predict(const Design& X_test, std::uint64_t seed) const;
};

struct MultiFidelitySurrogate {
  MultiFidelityData data;
  Standardizer standardizer;
  HyperParams hyper;
  MultiFidelityChain chain;
  bool use_nested_path = false;

  PredictiveSamples predict(const Design& X_test, std::uint64_t seed) const;
};

/// Full training pipeline: pilot chain at the initial hyperparameters
/// (quarter length), latent point estimate from its posterior mean,
/// approximate-MAP optimization, then the full chain at the optimum.
MultiSourceSurrogate train_full_ms(const MultiSourceData& raw, const TrainConfig& config);
MultiFidelitySurrogate train_full_mf(const MultiFidelityData& raw, const TrainConfig& config);

}  // namespace lolgp
