#pragma once

#include <cmath>
#include <utility>

#include "lolgp/common.hpp"
#include "lolgp/linalg.hpp"
#include "lolgp/truncnorm.hpp"

namespace lolgp::detail {

// Conditional of coordinate i of a zero-mean Gaussian vector z with
// precision-times-state product u = K^{-1} z: removing the self term gives
//   var = 1 / (K^{-1})_{ii},  mean = z_i - var * u_i,
// the leave-one-out conditional without re-factorizing.
inline std::pair<double, double> loo_conditional(const Matrix& inv, const Vector& z,
                                                 const Vector& u, int i) {
  const double var = 1.0 / inv(i, i);
  const double mean = z[i] - var * u[i];
  return {mean, var};
}

// Complete the square for  N(w; a, b) * N(e - f*w; m, v)  as a function of w.
inline std::pair<double, double> gaussian_product(double a, double b, double f, double e,
                                                  double m, double v) {
  const double prec = 1.0 / b + f * f / v;
  const double var = 1.0 / prec;
  const double mean = var * (a / b + f * (e - m) / v);
  return {mean, var};
}

// Mixture conditional of a clamped latent weight. On the non-positive side
// the likelihood factor N(e - relu(w)*f; m, v) is constant in w; on the
// positive side it tilts the prior conditional N(w; a, b). The component
// masses carry the Gaussian marginal constants of each branch, without which
// the mixture would not integrate to the true conditional (the grid oracle
// in the tests pins this down).
inline MixtureTruncNormal weight_mixture(double a, double b, double f, double e, double m,
                                         double v) {
  MixtureTruncNormal mix;
  mix.mean_neg = a;
  mix.var_neg = b;
  const auto [mean_pos, var_pos] = gaussian_product(a, b, f, e, m, v);
  mix.mean_pos = mean_pos;
  mix.var_pos = var_pos;

  const double log_mass_pos =
      log_norm_cdf(mean_pos / std::sqrt(var_pos)) + normal_log_pdf(e, f * a + m, f * f * b + v);
  const double log_mass_neg = log_norm_cdf(-a / std::sqrt(b)) + normal_log_pdf(e, m, v);
  const double diff = log_mass_neg - log_mass_pos;
  if (diff > 500.0) {
    mix.weight_pos = 0.0;
  } else if (diff < -500.0) {
    mix.weight_pos = 1.0;
  } else {
    mix.weight_pos = 1.0 / (1.0 + std::exp(diff));
  }
  return mix;
}

}  // namespace lolgp::detail
