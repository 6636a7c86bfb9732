#pragma once

#include "lolgp/common.hpp"
#include "lolgp/rng.hpp"

namespace lolgp {

enum class TruncSide { NonNegative, NonPositive };

/// Draw from N(mean, var) restricted to the requested half-line. Uses the
/// inverse CDF for mild truncation and an exponential-proposal rejection
/// sampler when the kept tail is more than ~6 sigma out, where the inverse
/// CDF loses precision.
double sample_trunc_normal(double mean, double var, TruncSide side, RngStream& rng);

/// Two-component conditional made of a normal truncated to the non-negative
/// reals (weight `weight_pos`) and one truncated to the non-positive reals.
struct MixtureTruncNormal {
  double weight_pos = 0.5;  // probability of the non-negative component
  double mean_pos = 0.0;
  double var_pos = 1.0;
  double mean_neg = 0.0;
  double var_neg = 1.0;

  void validate() const {
    if (!(weight_pos >= 0.0 && weight_pos <= 1.0)) throw input_error("mixture weight outside [0,1]");
    if (!(var_pos > 0.0) || !(var_neg > 0.0)) throw input_error("mixture variances must be positive");
  }

  double sample(RngStream& rng) const;

  /// Density and CDF of the mixture (used by the grid oracles in tests).
  double pdf(double x) const;
  double cdf(double x) const;
};

/// Mean of N(mean, var) truncated to the half-line (test oracle helper).
double trunc_normal_mean(double mean, double var, TruncSide side);
/// Variance of the same truncated distribution.
double trunc_normal_var(double mean, double var, TruncSide side);

}  // namespace lolgp
