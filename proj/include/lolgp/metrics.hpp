#pragma once

#include <vector>

#include "lolgp/common.hpp"

namespace lolgp {

/// Root-mean-squared error between point predictions and truths.
double rmse(const Vector& predictions, const Vector& truths);

/// Sample CRPS of an empirical predictive distribution against a realized
/// value:  mean|Y - y| - 0.5 mean|Y - Y'|  over all draw pairs, computed
/// exactly in O(n log n) by sorting. Requires at least two draws.
double crps_empirical(const Vector& draws, double truth);

/// Closed-form CRPS of a Gaussian predictive distribution (exact predictives
/// from the non-MCMC models).
double crps_gaussian(double mean, double sd, double truth);

struct EssResult {
  double ess = 0.0;
  bool capped = false;      // raw estimate exceeded the chain length
  bool degenerate = false;  // constant chain
};

/// Effective sample size from the empirical autocorrelations with Geyer's
/// initial monotone sequence truncation; capped at the chain length.
/// Requires length >= 100.
EssResult ess(const Vector& chain);

struct SplitHalfResult {
  double mean_first = 0.0;
  double mean_second = 0.0;
  double combined_se = 0.0;  // ESS-adjusted
  bool stationary = false;   // halves agree within 3 combined standard errors
};

/// Split-chain stationarity check on a scalar series.
SplitHalfResult split_half(const Vector& chain);

struct MetricReport {
  double rmse = 0.0;
  double crps = 0.0;
  Vector per_point_sq_err;
  Vector per_point_crps;
  int n_test = 0;
};

/// Aggregate report from per-point predictive draws (rows) and truths.
MetricReport evaluate_draws(const Matrix& draws, const Vector& truths);

/// Aggregate report from Gaussian predictives.
MetricReport evaluate_gaussian(const Vector& means, const Vector& sds, const Vector& truths);

}  // namespace lolgp
