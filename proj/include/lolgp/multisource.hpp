#pragma once

#include <cstdint>
#include <vector>

#include "lolgp/data.hpp"
#include "lolgp/gp.hpp"
#include "lolgp/hyper.hpp"
#include "lolgp/rng.hpp"
#include "lolgp/truncnorm.hpp"

namespace lolgp {

/// Gibbs sampler configuration shared by both transfer settings.
struct GibbsConfig {
  int iterations = 10000;
  int burn_in = 1000;
  Activation activation = Activation::Relu;
  std::uint64_t seed = 0;
  bool freeze_weights = false;  // keep latent weights at their initial values

  void validate() const {
    if (iterations <= burn_in || burn_in < 0) {
      throw input_error("chain length must exceed burn-in and burn-in must be >= 0");
    }
  }
};

/// Latent state for the multi-source model: per source, the latent weight
/// field and the latent source values, both on the target design.
struct MultiSourceState {
  std::vector<Vector> weights;        // omega_l(X_T), length n_T each
  std::vector<Vector> source_values;  // f_l(X_T), length n_T each
};

/// Post-burn-in sample chain. Draw b of source l lives in row b of each
/// matrix (kept x n_T).
struct MultiSourceChain {
  std::vector<Matrix> weights;
  std::vector<Matrix> source_values;
  Activation activation = Activation::Relu;
  int kept() const { return weights.empty() ? 0 : static_cast<int>(weights.front().rows()); }

  MultiSourceState state_at(int b) const;
  MultiSourceState posterior_mean() const;
};

/// Pre-computed covariance inverses for one (data, hyperparameters) pair.
/// Everything here is read-only during sampling and prediction.
class MultiSourcePrecompute {
 public:
  MultiSourcePrecompute(const MultiSourceData& data, const HyperParams& hp);

  const MultiSourceData& data() const { return *data_; }
  const HyperParams& hyper() const { return *hp_; }

  // Inverses: weight kernel on X_T per source, discrepancy kernel on X_T,
  // and the source kernel on the stacked design [X_l; X_T] per source.
  const Matrix& weight_inv(int l) const { return weight_inv_[l]; }
  const Matrix& disc_inv() const { return disc_inv_; }
  const Matrix& source_inv(int l) const { return source_inv_[l]; }

  const SpdFactor& weight_factor(int l) const { return weight_factor_[l]; }
  const SpdFactor& disc_factor() const { return disc_factor_; }
  const SpdFactor& source_factor(int l) const { return source_factor_[l]; }

  int n_target() const { return n_target_; }
  int n_source(int l) const { return static_cast<int>(data_->sources[l].inputs.rows()); }

 private:
  const MultiSourceData* data_;
  const HyperParams* hp_;
  std::vector<Matrix> weight_inv_;
  Matrix disc_inv_;
  std::vector<Matrix> source_inv_;
  std::vector<SpdFactor> weight_factor_;
  SpdFactor disc_factor_;
  std::vector<SpdFactor> source_factor_;
  int n_target_ = 0;
};

/// Full conditional of the latent weight at target point `i` for source `l`:
/// a two-part truncated-normal mixture under the clamped activation, whose
/// negative part is the GP leave-one-out conditional of the weight field and
/// whose positive part folds in the discrepancy likelihood.
MixtureTruncNormal full_conditional_weight(const MultiSourcePrecompute& pre,
                                           const MultiSourceState& state, int i, int l);

/// Full conditional of the latent source value at target point `i` for
/// source `l` (a normal). With the weight clamped to zero the discrepancy
/// likelihood drops out and this reduces to pure GP conditioning on the
/// remaining source-l values.
std::pair<double, double> full_conditional_source_value(const MultiSourcePrecompute& pre,
                                                        const MultiSourceState& state, int i, int l,
                                                        Activation activation);

/// Initial state: weights at 1 (transfer on), latent source values at the
/// per-source GP posterior mean.
MultiSourceState initial_state_ms(const MultiSourcePrecompute& pre);

/// Run the Gibbs sampler; sweeps sources in order and target points within
/// each source, updating the weight then the source value per coordinate.
/// Returns the post-burn-in chain. Deterministic given config.seed.
MultiSourceChain gibbs_sample_ms(const MultiSourcePrecompute& pre, const GibbsConfig& config);
MultiSourceChain gibbs_sample_ms(const MultiSourceData& data, const HyperParams& hp,
                                 const GibbsConfig& config);

/// Apply one in-place Gibbs sweep to `state` (exposed for the chain
/// invariance tests).
void gibbs_sweep_ms(const MultiSourcePrecompute& pre, MultiSourceState& state,
                    Activation activation, bool freeze_weights, RngStream& rng);

/// Posterior predictive draws at a set of test points.
struct PredictiveSamples {
  Matrix draws;     // n_test x kept
  Vector mean;      // per test point
  Vector variance;  // per test point (MC sample variance)
  Vector q025;
  Vector q975;

  void summarize();
};

PredictiveSamples predict_ms(const MultiSourcePrecompute& pre, const MultiSourceChain& chain,
                             const Design& X_test, std::uint64_t seed);

/// Per-draw transfer weights rho_l at the test points, averaged over the
/// chain (for plot-data export).
Matrix posterior_mean_transfer_weights(const MultiSourcePrecompute& pre,
                                       const MultiSourceChain& chain, const Design& X_test,
                                       std::uint64_t seed);

}  // namespace lolgp
