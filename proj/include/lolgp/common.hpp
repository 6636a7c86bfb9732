#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lolgp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A design is one input point per row, one column per input dimension.
using Design = Eigen::MatrixXd;

/// Raised on malformed inputs (dimension mismatches, schema violations,
/// violated preconditions). CLI maps this to exit code 2.
class input_error : public std::invalid_argument {
 public:
  explicit input_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Raised on numerical failure (non-PD covariances after nugget escalation,
/// non-finite sampler states). CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lolgp
