#include "lolgp/testfunctions.hpp"

#include <cmath>

namespace lolgp {

namespace {

// Real-part convention for square roots: sqrt of a negative radicand is pure
// imaginary, so it contributes zero to a real-valued product.
inline double real_sqrt(double v) { return v >= 0.0 ? std::sqrt(v) : 0.0; }

inline double forrester(double x) {
  const double a = 6.0 * x - 2.0;
  return 0.2 * a * a * std::sin(12.0 * x - 4.0) + 0.5;
}

// -- 1-d motivating pair (one source) --
double eval_motivating(int system, const Vector& x) {
  const double t = forrester(x[0]);
  if (system == 1) return t;
  const double xi = x[0];
  double v = t;
  if (xi >= 0.5) v += 0.6 * (xi - 0.5);
  if (xi < 0.5) v += 1.6 * (xi - 0.5) * std::sin(30.0 * xi) * real_sqrt(5.0 * xi - 4.0);
  return v;
}

// -- 1-d two-source pair --
double eval_forrester_ms(int system, const Vector& x) {
  const double xi = x[0];
  const double t = forrester(xi);
  switch (system) {
    case 0: {
      double v = t;
      if (xi < 0.5) v += 0.4 * (xi - 0.5);
      if (xi >= 0.5) v += 1.6 * (xi - 0.5) * std::cos(40.0 * xi) * (5.0 * xi - 1.0);
      return v;
    }
    case 1: {
      double v = t;
      if (xi >= 0.5) v += 0.4 * (xi - 0.5);
      if (xi < 0.5) v += 1.6 * (xi - 0.5) * std::cos(20.0 * xi) * real_sqrt(4.0 - 5.0 * xi);
      return v;
    }
    default:
      return t;
  }
}

// -- 5-d two-source pair --
double eval_friedman_ms(int system, const Vector& x) {
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4];
  const double common = 2.0 * std::sin(M_PI * x1 * x2);
  const double q = 8.0 * (x3 - 0.5) * (x3 - 0.5);
  switch (system) {
    case 0: {
      double bracket = (x3 < 0.5) ? 1.2 : (1.0 + 2.0 * std::sin(30.0 * (x3 - 0.5)));
      return common + 2.2 * x4 - x5 + q * bracket;
    }
    case 1: {
      double bracket = (x3 >= 0.5) ? 1.0 : 1.5 * (1.0 + std::sin(20.0 * (x3 - 0.5) - 1.5));
      return common + 2.0 * x4 - 0.8 * x5 + q * bracket;
    }
    default:
      return common + q + 2.0 * x4 - x5;
  }
}

// -- 1-d two-level pair --
double eval_forrester_mf(int system, const Vector& x) {
  const double xi = x[0];
  const double a = 6.0 * xi - 2.0;
  const double f1 = 0.2 * a * a * std::sin(12.0 * xi - 4.0) + 0.8;
  if (system == 0) return f1;
  double v = 0.0;
  if (xi > 0.5) v += real_sqrt(2.0 * xi - 1.0) * f1;
  if (xi <= 0.5) v += 3.2 * (1.0 - 2.0 * xi) * (std::sin(14.0 * real_sqrt(xi - 0.5)) - 1.0);
  return v;
}

// -- 2-d three-level triple --
double eval_branin_mf(int system, const Vector& x) {
  const double x1 = x[0], x2 = x[1];
  const double inner = x2 - 5.1 / (4.0 * M_PI * M_PI) * x1 * x1 + 5.0 / M_PI * x1 - 1.0;
  const double f1 = 0.01 * inner * inner;
  if (system == 0) return f1;
  const double f2 = f1 + 0.1 * ((1.0 - 1.0 / (8.0 * M_PI)) * std::cos(x1 * x1) + 1.0);
  if (system == 1) return f2;
  double v = 0.0;
  if (x2 > 3.0) v += (x2 - 3.0) / 7.0 * f2;
  if (x2 <= 3.0) v -= (x2 - 3.0) / 5.0 * std::sin(2.0 * (x1 + 1.0) / (3.0 * M_PI));
  return v;
}

// -- 1-d two-level pair without local structure --
double eval_forrester_mf_no_local(int system, const Vector& x) {
  const double xi = x[0];
  const double f1 = forrester(xi);
  if (system == 0) return f1;
  return f1 + 1.6 * (1.0 - xi);
}

TestFunction make(const std::string& name, bool mf, bool nested, int dim, double lo, double hi,
                  int n_systems, double (*fn)(int, const Vector&)) {
  TestFunction t;
  t.name = name;
  t.multi_fidelity = mf;
  t.nested_default = nested;
  t.dim = dim;
  t.lo = Vector::Constant(dim, lo);
  t.hi = Vector::Constant(dim, hi);
  t.n_systems = n_systems;
  t.eval_fn = fn;
  return t;
}

const std::vector<TestFunction>& registry() {
  static const std::vector<TestFunction> fns = {
      make("forrester-motivating", false, false, 1, 0.0, 1.0, 2, eval_motivating),
      make("forrester-ms", false, false, 1, 0.0, 1.0, 3, eval_forrester_ms),
      make("friedman-ms", false, false, 5, 0.0, 1.0, 3, eval_friedman_ms),
      make("forrester-mf", true, true, 1, 0.0, 1.0, 2, eval_forrester_mf),
      make("branin-mf", true, true, 2, -5.0, 10.0, 3, eval_branin_mf),
      make("forrester-mf-no-local", true, true, 1, 0.0, 1.0, 2, eval_forrester_mf_no_local),
  };
  return fns;
}

}  // namespace

double TestFunction::eval(int system, const Vector& x) const {
  if (system < 0 || system >= n_systems) throw input_error(name + ": unknown system index");
  if (x.size() != dim) throw input_error(name + ": input dimension mismatch");
  for (int j = 0; j < dim; ++j) {
    if (x[j] < lo[j] - 1e-12 || x[j] > hi[j] + 1e-12) {
      throw input_error(name + ": input outside domain box");
    }
  }
  return eval_fn(system, x);
}

const TestFunction& test_function(const std::string& name) {
  for (const auto& t : registry()) {
    if (t.name == name) return t;
  }
  throw input_error("unknown test function: " + name);
}

std::vector<std::string> test_function_names() {
  std::vector<std::string> out;
  for (const auto& t : registry()) out.push_back(t.name);
  return out;
}

}  // namespace lolgp
