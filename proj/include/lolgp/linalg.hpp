#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "lolgp/common.hpp"

namespace lolgp {

inline constexpr double kDefaultNugget = 1e-8;
inline constexpr double kMaxNugget = 1e-4;

/// Cholesky factorization of a symmetric positive-definite matrix with
/// automatic nugget escalation: if the factorization fails, the diagonal
/// jitter is multiplied by 10 until it reaches `kMaxNugget`, after which a
/// numeric_error is thrown advising a larger nugget.
class SpdFactor {
 public:
  SpdFactor() = default;

  /// Factorize `K + extra_jitter * I`. `base_nugget` is only used to seed the
  /// escalation ladder; `K` is expected to already contain its nugget.
  static SpdFactor factorize(const Matrix& K, double base_nugget = kDefaultNugget) {
    SpdFactor f;
    double jitter = 0.0;
    double step = std::max(base_nugget, 1e-12);
    for (;;) {
      Matrix Kj = K;
      if (jitter > 0.0) Kj.diagonal().array() += jitter;
      f.llt_.compute(Kj);
      if (f.llt_.info() == Eigen::Success) {
        // Guard against a "successful" factorization with a non-positive
        // pivot from near-singular input.
        const auto& L = f.llt_.matrixLLT();
        bool ok = true;
        for (Eigen::Index i = 0; i < L.rows(); ++i) {
          if (!(L(i, i) > 0.0) || !std::isfinite(L(i, i))) {
            ok = false;
            break;
          }
        }
        if (ok) {
          f.applied_jitter_ = jitter;
          f.dim_ = K.rows();
          return f;
        }
      }
      if (jitter >= kMaxNugget) {
        throw numeric_error(
            "covariance matrix is not positive definite even after nugget "
            "escalation to 1e-4; increase the kernel nugget");
      }
      jitter = (jitter == 0.0) ? step * 10.0 : jitter * 10.0;
      if (jitter > kMaxNugget) jitter = kMaxNugget;
    }
  }

  Eigen::Index dim() const { return dim_; }
  double applied_jitter() const { return applied_jitter_; }

  Vector solve(const Vector& b) const { return llt_.solve(b); }
  Matrix solve(const Matrix& B) const { return llt_.solve(B); }

  Matrix inverse() const {
    return llt_.solve(Matrix::Identity(dim_, dim_));
  }

  double log_det() const {
    double s = 0.0;
    const auto& L = llt_.matrixLLT();
    for (Eigen::Index i = 0; i < dim_; ++i) s += std::log(L(i, i));
    return 2.0 * s;
  }

  /// Reconstruct the factorized matrix (for factorization-quality checks).
  Matrix reconstruct() const {
    Matrix L = llt_.matrixL();
    return L * L.transpose();
  }

  /// log N(x; 0, K) for the factorized K.
  double gaussian_log_density(const Vector& x) const {
    const double quad = x.dot(solve(x));
    return -0.5 * (quad + log_det() + static_cast<double>(dim_) * std::log(2.0 * M_PI));
  }

 private:
  Eigen::LLT<Matrix> llt_;
  Eigen::Index dim_ = 0;
  double applied_jitter_ = 0.0;
};

/// log N(x; mean, var) for a scalar.
inline double normal_log_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (d * d / var + std::log(2.0 * M_PI * var));
}

/// Standard normal CDF, accurate in both tails.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

/// log Phi(z) with an asymptotic expansion for the far lower tail where
/// erfc underflows.
inline double log_norm_cdf(double z) {
  if (z > -20.0) {
    const double p = norm_cdf(z);
    if (p > 0.0) return std::log(p);
  }
  // Mills-ratio expansion: Phi(z) ~ phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - ...)
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - 0.5 * std::log(2.0 * M_PI) - std::log(-z) + std::log(series);
}

/// Inverse standard normal CDF (Wichura's AS241, double precision).
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                 45921.953931549871457) *
                    r +
                13731.693765509461125) *
                   r +
               1971.5909503065514427) *
                  r +
              133.14166789178437745) *
                 r +
             3.387132872796366608) /
           (((((((5226.495278852545703 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                 21213.794301586595867) *
                    r +
                5394.1960214247511077) *
                   r +
               687.1870074920579083) *
                  r +
              42.313330701600911252) *
                 r +
             1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) *
                  r +
              3.64784832476320460504) *
                 r +
             5.7694972214606914055) *
                r +
            4.6303378461565452959) *
               r +
           1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) *
                  r +
              0.68976733498510000455) *
                 r +
             1.6763848301838038494) *
                r +
            2.05319162663775882187) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) *
                  r +
              0.29656057182850489123) *
                 r +
             1.7848265399172913358) *
                r +
            5.4637849111641143699) *
               r +
           6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) *
                  r +
              0.0148753612908506148525) *
                 r +
             0.13692988092273580531) *
                r +
            0.59983220655588793769) *
               r +
           1.0);
  }
  return (q < 0.0) ? -val : val;
}

}  // namespace lolgp
