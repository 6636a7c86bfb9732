#include "lolgp/gp.hpp"

namespace lolgp {

GpPosterior gp_fit(const Design& X, const Vector& f, const KernelSpec& spec) {
  spec.validate();
  if (X.rows() != f.size() || X.rows() < 1) {
    throw input_error("gp_fit: need |X| == |f| >= 1");
  }
  if (X.cols() != spec.lengthscales.size()) {
    throw input_error("gp_fit: design dimension does not match kernel");
  }
  GpPosterior post;
  post.X_ = X;
  post.f_ = f;
  post.spec_ = spec;
  post.factor_ = SpdFactor::factorize(kernel_matrix(spec, X), std::max(spec.nugget, kDefaultNugget));
  post.alpha_ = post.factor_.solve(f);
  return post;
}

std::pair<double, double> GpPosterior::predict(const Vector& x_new) const {
  if (x_new.size() != X_.cols()) {
    throw input_error("gp_predict: point dimension does not match training design");
  }
  const Vector k = kernel_vector(spec_, X_, x_new);
  const double mean = k.dot(alpha_);
  double var = spec_.variance + spec_.nugget - k.dot(factor_.solve(k));
  if (var < 0.0) var = 0.0;
  return {mean, var};
}

}  // namespace lolgp
