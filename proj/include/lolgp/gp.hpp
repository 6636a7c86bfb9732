#pragma once

#include <utility>

#include "lolgp/kernel.hpp"
#include "lolgp/linalg.hpp"

namespace lolgp {

/// Zero-mean GP regression posterior with a cached SPD factorization of the
/// training covariance. Immutable after fit and safe to share across threads.
class GpPosterior {
 public:
  GpPosterior() = default;

  const Design& train_inputs() const { return X_; }
  const Vector& train_outputs() const { return f_; }
  const KernelSpec& kernel() const { return spec_; }
  const SpdFactor& factor() const { return factor_; }
  const Vector& alpha() const { return alpha_; }  // K^{-1} f

  /// Posterior mean and variance at a new point; variance is clamped at 0.
  std::pair<double, double> predict(const Vector& x_new) const;

  friend GpPosterior gp_fit(const Design& X, const Vector& f, const KernelSpec& spec);

 private:
  Design X_;
  Vector f_;
  KernelSpec spec_;
  SpdFactor factor_;
  Vector alpha_;
};

/// Condition a zero-mean GP on (X, f). Throws numeric_error if K(X,X) stays
/// non-PD after nugget escalation.
GpPosterior gp_fit(const Design& X, const Vector& f, const KernelSpec& spec);

inline std::pair<double, double> gp_predict(const GpPosterior& post, const Vector& x_new) {
  return post.predict(x_new);
}

/// Affine output transform shared by every model: outputs are centered and
/// scaled by the target system's statistics before fitting, and predictions
/// are mapped back. A variance floor keeps constant outputs fittable.
struct Standardizer {
  double mean = 0.0;
  double sd = 1.0;

  static Standardizer from(const Vector& target_outputs) {
    Standardizer s;
    const double n = static_cast<double>(target_outputs.size());
    if (n < 1) return s;
    s.mean = target_outputs.mean();
    const double var = (target_outputs.array() - s.mean).square().sum() / n;
    s.sd = std::sqrt(var);
    if (!(s.sd > 1e-12)) s.sd = 1.0;  // variance floor for degenerate data
    return s;
  }

  double forward(double y) const { return (y - mean) / sd; }
  double inverse(double z) const { return mean + sd * z; }
  Vector forward(const Vector& y) const { return (y.array() - mean) / sd; }
  Vector inverse(const Vector& z) const { return z.array() * sd + mean; }
};

}  // namespace lolgp
