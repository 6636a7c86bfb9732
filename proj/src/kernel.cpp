#include "lolgp/kernel.hpp"

#include <cmath>

namespace lolgp {

void KernelSpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw input_error("kernel variance must be positive and finite");
  }
  if (lengthscales.size() < 1) {
    throw input_error("kernel needs at least one lengthscale");
  }
  for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
    if (!(lengthscales[j] > 0.0) || !std::isfinite(lengthscales[j])) {
      throw input_error("kernel lengthscales must be positive and finite");
    }
  }
  if (nugget < 0.0 || !std::isfinite(nugget)) {
    throw input_error("kernel nugget must be non-negative and finite");
  }
}

namespace {
inline double sq_dist_scaled(const KernelSpec& spec, const Vector& x, const Vector& y) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double d = (x[j] - y[j]) / spec.lengthscales[j];
    s += d * d;
  }
  return s;
}
}  // namespace

double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y) {
  if (x.size() != spec.lengthscales.size() || y.size() != spec.lengthscales.size()) {
    throw input_error("kernel_eval: point dimension does not match kernel lengthscales");
  }
  double v = spec.variance * std::exp(-sq_dist_scaled(spec, x, y));
  if (x == y) v += spec.nugget;
  return v;
}

Matrix kernel_matrix(const KernelSpec& spec, const Design& X) {
  if (X.cols() != spec.lengthscales.size()) {
    throw input_error("kernel_matrix: design dimension does not match kernel");
  }
  const Eigen::Index n = X.rows();
  Matrix K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = spec.variance + spec.nugget;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = spec.variance * std::exp(-sq_dist_scaled(spec, X.row(i), X.row(j)));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

Matrix kernel_cross(const KernelSpec& spec, const Design& X, const Design& Y) {
  if (X.cols() != spec.lengthscales.size() || Y.cols() != spec.lengthscales.size()) {
    throw input_error("kernel_cross: design dimension does not match kernel");
  }
  Matrix K(X.rows(), Y.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < Y.rows(); ++j) {
      K(i, j) = spec.variance * std::exp(-sq_dist_scaled(spec, X.row(i), Y.row(j)));
    }
  }
  return K;
}

Vector kernel_vector(const KernelSpec& spec, const Design& X, const Vector& x) {
  if (X.cols() != spec.lengthscales.size() || x.size() != spec.lengthscales.size()) {
    throw input_error("kernel_vector: dimension mismatch");
  }
  Vector k(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    k[i] = spec.variance * std::exp(-sq_dist_scaled(spec, X.row(i), x));
  }
  return k;
}

std::vector<Matrix> kernel_matrix_log_grads(const KernelSpec& spec, const Design& X) {
  const Eigen::Index n = X.rows();
  const int d = spec.dim();
  // Smooth part only; the nugget does not depend on the hyperparameters.
  Matrix Ksmooth = kernel_matrix(spec, X);
  Ksmooth.diagonal().array() -= spec.nugget;

  std::vector<Matrix> grads;
  grads.reserve(1 + d);
  grads.push_back(Ksmooth);  // dK/dlog(variance) = K_smooth
  for (int j = 0; j < d; ++j) {
    Matrix G(n, n);
    const double inv_l2 = 1.0 / (spec.lengthscales[j] * spec.lengthscales[j]);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        const double diff = X(a, j) - X(b, j);
        // d/dlog(l_j) exp(-d^2/l^2) multiplies by 2 d^2 / l^2.
        G(a, b) = Ksmooth(a, b) * 2.0 * diff * diff * inv_l2;
      }
    }
    grads.push_back(std::move(G));
  }
  return grads;
}

}  // namespace lolgp
