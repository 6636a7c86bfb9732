#pragma once

#include <string>
#include <vector>

#include "lolgp/common.hpp"

namespace lolgp {

/// Analytic benchmark functions. Systems are ordered with the target last
/// (multi-source: sources then target; multi-fidelity: increasing fidelity).
///
/// Square roots of negative radicands in some source definitions follow the
/// real-part convention (`complex-branch: real-part`): a pure-imaginary root
/// contributes zero to the real-valued composite.
struct TestFunction {
  std::string name;
  bool multi_fidelity = false;
  bool nested_default = false;
  int dim = 1;
  Vector lo;
  Vector hi;
  int n_systems = 2;

  double (*eval_fn)(int system, const Vector& x) = nullptr;

  /// Evaluate system `system` (target = n_systems - 1) at a point inside the
  /// domain box; throws input_error outside it.
  double eval(int system, const Vector& x) const;
};

const TestFunction& test_function(const std::string& name);
std::vector<std::string> test_function_names();

}  // namespace lolgp
