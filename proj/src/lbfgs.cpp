#include "lolgp/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace lolgp {

namespace {
bool finite(double v) { return std::isfinite(v); }
}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, const Vector& x0, const LbfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  LbfgsResult res;
  res.x = x0;

  Vector grad(n);
  double f = fn(res.x, grad);
  if (!finite(f)) {
    // Objective undefined at the start; report the initial point unchanged.
    res.value = f;
    return res;
  }

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;

  Vector x_prev = res.x, grad_prev = grad;

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (grad.norm() <= opts.grad_tolerance * std::max(1.0, res.x.norm())) {
      res.converged = true;
      break;
    }

    // Two-loop recursion for the search direction.
    Vector q = grad;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Vector dir = -q;
    double dir_deriv = grad.dot(dir);
    if (!(dir_deriv < 0.0) || !dir.allFinite()) {
      dir = -grad;  // fall back to steepest descent
      dir_deriv = grad.dot(dir);
    }

    // Armijo backtracking.
    double step = 1.0;
    const double c1 = 1e-4;
    double f_new = std::numeric_limits<double>::infinity();
    Vector x_new, grad_new(n);
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = res.x + step * dir;
      f_new = fn(x_new, grad_new);
      if (finite(f_new) && f_new <= f + c1 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
      if (step * dir.norm() < opts.step_tolerance) break;
    }
    if (!accepted) break;

    Vector s = x_new - res.x;
    Vector y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && y.allFinite()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    res.x = x_new;
    f = f_new;
    grad = grad_new;
    res.iterations = it + 1;
  }
  res.value = f;
  return res;
}

}  // namespace lolgp
