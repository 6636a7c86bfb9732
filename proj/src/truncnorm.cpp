#include "lolgp/truncnorm.hpp"

#include <cmath>

#include "lolgp/linalg.hpp"

namespace lolgp {

namespace {

// Sample standard normal conditioned on Z >= a.
double sample_lower_truncated_std(double a, RngStream& rng) {
  if (a < 6.0) {
    // Z >= a has tail mass Phi(-a); map a uniform into that tail through the
    // complementary quantile to keep precision when Phi(-a) is small.
    const double tail = norm_cdf(-a);
    const double u = rng.uniform_pos();
    const double p = u * tail;  // P(Z >= z) target
    return -norm_quantile(p);
  }
  // Robert (1995) exponential-proposal rejection for deep tails.
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a + rng.exponential(lambda);
    const double d = z - lambda;
    if (std::log(rng.uniform_pos()) <= -0.5 * d * d) return z;
  }
}

}  // namespace

double sample_trunc_normal(double mean, double var, TruncSide side, RngStream& rng) {
  if (!(var > 0.0)) throw input_error("sample_trunc_normal: variance must be positive");
  const double sd = std::sqrt(var);
  if (side == TruncSide::NonNegative) {
    const double a = -mean / sd;  // standardized truncation point
    return mean + sd * sample_lower_truncated_std(a, rng);
  }
  // Non-positive side by symmetry: -X where X ~ N(-mean, var) on [0, inf).
  const double a = mean / sd;
  return -(-mean + sd * sample_lower_truncated_std(a, rng));
}

double MixtureTruncNormal::sample(RngStream& rng) const {
  validate();
  if (rng.uniform() < weight_pos) {
    return sample_trunc_normal(mean_pos, var_pos, TruncSide::NonNegative, rng);
  }
  return sample_trunc_normal(mean_neg, var_neg, TruncSide::NonPositive, rng);
}

double MixtureTruncNormal::pdf(double x) const {
  if (x >= 0.0) {
    const double mass = norm_cdf(mean_pos / std::sqrt(var_pos));
    if (mass <= 0.0) return 0.0;
    return weight_pos * std::exp(normal_log_pdf(x, mean_pos, var_pos)) / mass;
  }
  const double mass = norm_cdf(-mean_neg / std::sqrt(var_neg));
  if (mass <= 0.0) return 0.0;
  return (1.0 - weight_pos) * std::exp(normal_log_pdf(x, mean_neg, var_neg)) / mass;
}

double MixtureTruncNormal::cdf(double x) const {
  const double sd_neg = std::sqrt(var_neg);
  const double mass_neg = norm_cdf(-mean_neg / sd_neg);
  if (x < 0.0) {
    if (mass_neg <= 0.0) return 0.0;
    return (1.0 - weight_pos) * norm_cdf((x - mean_neg) / sd_neg) / mass_neg;
  }
  const double sd_pos = std::sqrt(var_pos);
  const double mass_pos = norm_cdf(mean_pos / sd_pos);
  double pos_part = 0.0;
  if (mass_pos > 0.0) {
    pos_part = (norm_cdf((x - mean_pos) / sd_pos) - norm_cdf(-mean_pos / sd_pos)) / mass_pos;
  }
  return (1.0 - weight_pos) + weight_pos * pos_part;
}

double trunc_normal_mean(double mean, double var, TruncSide side) {
  const double sd = std::sqrt(var);
  if (side == TruncSide::NonNegative) {
    const double a = -mean / sd;
    const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
    return mean + sd * phi / norm_cdf(-a);
  }
  return -trunc_normal_mean(-mean, var, TruncSide::NonNegative);
}

double trunc_normal_var(double mean, double var, TruncSide side) {
  const double sd = std::sqrt(var);
  const double a = (side == TruncSide::NonNegative) ? -mean / sd : mean / sd;
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
  const double ratio = phi / norm_cdf(-a);
  return var * (1.0 + a * ratio - ratio * ratio);
}

}  // namespace lolgp
