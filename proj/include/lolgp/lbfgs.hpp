#pragma once

#include <functional>

#include "lolgp/common.hpp"

namespace lolgp {

/// Objective callback: value and gradient at x. May return -inf (for a
/// maximization problem flipped to minimization, +inf) to reject a point;
/// the line search then backtracks.
using ObjectiveFn = std::function<double(const Vector& x, Vector& grad)>;

struct LbfgsOptions {
  int max_iterations = 200;
  int memory = 8;
  double grad_tolerance = 1e-6;
  double step_tolerance = 1e-11;
};

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS minimization with Armijo backtracking.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, const Vector& x0, const LbfgsOptions& opts = {});

}  // namespace lolgp
