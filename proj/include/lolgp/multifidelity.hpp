#pragma once

#include <cstdint>
#include <vector>

#include "lolgp/data.hpp"
#include "lolgp/gp.hpp"
#include "lolgp/hyper.hpp"
#include "lolgp/multisource.hpp"
#include "lolgp/rng.hpp"

namespace lolgp {

/// Latent state for the multi-fidelity model. For step l (0-based), the
/// weight field lives on the augmented design of level l+2 and above, and
/// `values_latent` holds the level-(l+1) function values at the points of
/// that augmented design where the level was not simulated (empty when the
/// designs are nested).
struct MultiFidelityState {
  std::vector<Vector> weights;
  std::vector<Vector> values_latent;
};

struct MultiFidelityChain {
  std::vector<Matrix> weights;        // kept x |aug(l+1)| per step
  std::vector<Matrix> values_latent;  // kept x n_latent(l) per step
  Activation activation = Activation::Relu;
  int n_kept = 0;  // explicit because a single-level model has no latents
  int kept() const {
    if (n_kept > 0) return n_kept;
    return weights.empty() ? 0 : static_cast<int>(weights.front().rows());
  }
  MultiFidelityState state_at(int b) const;
  MultiFidelityState posterior_mean() const;
};

/// Augmented designs, index maps and covariance inverses for the
/// multi-fidelity sampler. aug(l) for step index l = 0..L is the union of the
/// designs of levels l+1..L+1, laid out as [X_{l+1}; remainder], so a level's
/// own simulated points always come first.
class MultiFidelityPrecompute {
 public:
  MultiFidelityPrecompute(const MultiFidelityData& data, const HyperParams& hp);

  const MultiFidelityData& data() const { return *data_; }
  const HyperParams& hyper() const { return *hp_; }

  int n_steps() const { return n_steps_; }  // L
  const Design& aug(int l) const { return aug_[l]; }
  int aug_size(int l) const { return static_cast<int>(aug_[l].rows()); }
  /// Position in aug(l) of point i of aug(l+1).
  int up_index(int l, int i) const { return map_up_[l][i]; }
  /// Number of latent (non-simulated) values of level l+1 on aug(l+1).
  int n_latent(int l) const { return aug_size(l) - n_level(l); }
  int n_level(int l) const { return static_cast<int>(data_->levels[l].inputs.rows()); }

  const Matrix& level1_inv() const { return level1_inv_; }
  const SpdFactor& level1_factor() const { return level1_factor_; }
  const Matrix& weight_inv(int l) const { return weight_inv_[l]; }
  const SpdFactor& weight_factor(int l) const { return weight_factor_[l]; }
  const Matrix& disc_inv(int l) const { return disc_inv_[l]; }
  const SpdFactor& disc_factor(int l) const { return disc_factor_[l]; }

  /// Level-(l+1) values over aug(l): observed head from the data, latent tail
  /// from the state.
  Vector level_values(int l, const MultiFidelityState& state) const;

  /// Largest matrix dimension factorized during pre-computation.
  int max_factor_dim() const { return max_factor_dim_; }

 private:
  const MultiFidelityData* data_;
  const HyperParams* hp_;
  int n_steps_ = 0;
  std::vector<Design> aug_;                 // aug(0..L)
  std::vector<std::vector<int>> map_up_;    // aug(l+1) -> aug(l), l = 0..L-1
  SpdFactor level1_factor_;
  Matrix level1_inv_;
  std::vector<SpdFactor> weight_factor_;
  std::vector<Matrix> weight_inv_;
  std::vector<SpdFactor> disc_factor_;
  std::vector<Matrix> disc_inv_;
  int max_factor_dim_ = 0;
};

/// Full conditional of the latent weight of step `l` at point `i` of
/// aug(l+1); mixture structure identical to the multi-source case.
MixtureTruncNormal full_conditional_weight_mf(const MultiFidelityPrecompute& pre,
                                              const MultiFidelityState& state, int i, int l);

/// Full conditional of the latent level-(l+1) value at point `i` of
/// aug(l+1); throws if that value is observed.
std::pair<double, double> full_conditional_value_mf(const MultiFidelityPrecompute& pre,
                                                    const MultiFidelityState& state, int i, int l,
                                                    Activation activation);

MultiFidelityState initial_state_mf(const MultiFidelityPrecompute& pre);

MultiFidelityChain gibbs_sample_mf(const MultiFidelityPrecompute& pre, const GibbsConfig& config);
MultiFidelityChain gibbs_sample_mf(const MultiFidelityData& data, const HyperParams& hp,
                                   const GibbsConfig& config);

void gibbs_sweep_mf(const MultiFidelityPrecompute& pre, MultiFidelityState& state,
                    Activation activation, bool freeze_weights, RngStream& rng);

/// Posterior predictive via the level-by-level Monte Carlo composition;
/// valid for nested and non-nested designs alike.
PredictiveSamples predict_mf_generic(const MultiFidelityPrecompute& pre,
                                     const MultiFidelityChain& chain, const Design& X_test,
                                     std::uint64_t seed);

/// Posterior predictive via the recursive mean/variance composition; nested
/// designs only. Distributionally equivalent to the generic path.
PredictiveSamples predict_mf_nested(const MultiFidelityPrecompute& pre,
                                    const MultiFidelityChain& chain, const Design& X_test,
                                    std::uint64_t seed);

/// Factorized log-likelihood of all level outputs given the latent weights
/// (nested designs only): a sum of per-level Gaussian log-densities of the
/// transfer residuals z_1 = f_1, z_l = f_l - rho_{l-1}(X_l) . f_{l-1}(X_l).
double nested_likelihood(const MultiFidelityData& data, const MultiFidelityState& theta_hat,
                         const HyperParams& hp, Activation activation = Activation::Relu);

/// Posterior mean transfer weights at test points (plot-data export).
Matrix posterior_mean_transfer_weights_mf(const MultiFidelityPrecompute& pre,
                                          const MultiFidelityChain& chain, const Design& X_test,
                                          std::uint64_t seed);

}  // namespace lolgp
