#include "lolgp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lolgp/linalg.hpp"

namespace lolgp {

double rmse(const Vector& predictions, const Vector& truths) {
  if (predictions.size() != truths.size() || predictions.size() < 1) {
    throw input_error("rmse: length mismatch or empty input");
  }
  return std::sqrt((predictions - truths).squaredNorm() / predictions.size());
}

double crps_empirical(const Vector& draws, double truth) {
  const int n = static_cast<int>(draws.size());
  if (n < 2) throw input_error("crps_empirical: need at least two draws");
  std::vector<double> d(draws.data(), draws.data() + n);
  std::sort(d.begin(), d.end());

  double term1 = 0.0;
  for (int i = 0; i < n; ++i) term1 += std::fabs(d[i] - truth);
  term1 /= n;

  // sum_{i,j} |d_i - d_j| = 2 sum_k (2k - n - 1) d_(k)  (1-based sorted),
  // so 0.5 * mean pairwise gap = sum_k (2k - n - 1) d_(k) / n^2.
  double term2 = 0.0;
  for (int k = 1; k <= n; ++k) term2 += (2.0 * k - n - 1.0) * d[k - 1];
  term2 /= static_cast<double>(n) * n;

  return term1 - term2;
}

double crps_gaussian(double mean, double sd, double truth) {
  if (sd <= 0.0) return std::fabs(truth - mean);
  const double z = (truth - mean) / sd;
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return sd * (z * (2.0 * norm_cdf(z) - 1.0) + 2.0 * phi - 1.0 / std::sqrt(M_PI));
}

EssResult ess(const Vector& chain) {
  const int n = static_cast<int>(chain.size());
  if (n < 100) throw input_error("ess: need a chain of length >= 100");
  EssResult res;

  const double mean = chain.mean();
  const Vector c = chain.array() - mean;
  const double var0 = c.squaredNorm() / n;
  if (var0 <= 0.0 || !std::isfinite(var0)) {
    res.ess = n;
    res.degenerate = true;
    return res;
  }

  auto acov = [&](int lag) {
    double s = 0.0;
    for (int t = 0; t + lag < n; ++t) s += c[t] * c[t + lag];
    return s / n;
  };

  // Geyer: sum paired autocorrelations Gamma_m = rho_{2m} + rho_{2m+1} while
  // positive, enforcing monotone decrease.
  double tau = -1.0;  // running 2 * sum(Gamma) - 1 with Gamma_0 including rho_0 = 1
  double prev = std::numeric_limits<double>::infinity();
  for (int m = 0; 2 * m + 1 < n; ++m) {
    const double g0 = (m == 0) ? 1.0 : acov(2 * m) / var0;
    const double g1 = acov(2 * m + 1) / var0;
    double gamma = g0 + g1;
    if (gamma <= 0.0) break;
    gamma = std::min(gamma, prev);
    prev = gamma;
    tau += 2.0 * gamma;
  }
  if (tau < 1e-12) tau = 1e-12;

  res.ess = n / tau;
  if (res.ess > n) {
    res.ess = n;
    res.capped = true;
  }
  return res;
}

SplitHalfResult split_half(const Vector& chain) {
  const int n = static_cast<int>(chain.size());
  if (n < 200) throw input_error("split_half: need a chain of length >= 200");
  const int h = n / 2;
  const Vector a = chain.head(h);
  const Vector b = chain.tail(h);

  SplitHalfResult r;
  r.mean_first = a.mean();
  r.mean_second = b.mean();
  const double va = (a.array() - r.mean_first).square().sum() / (h - 1);
  const double vb = (b.array() - r.mean_second).square().sum() / (h - 1);
  const EssResult ea = ess(a), eb = ess(b);
  r.combined_se = std::sqrt(va / std::max(1.0, ea.ess) + vb / std::max(1.0, eb.ess));
  r.stationary = std::fabs(r.mean_first - r.mean_second) < 3.0 * r.combined_se ||
                 (va == 0.0 && vb == 0.0 && r.mean_first == r.mean_second);
  return r;
}

MetricReport evaluate_draws(const Matrix& draws, const Vector& truths) {
  const int n = static_cast<int>(truths.size());
  if (draws.rows() != n) throw input_error("evaluate_draws: row count mismatch");
  MetricReport rep;
  rep.n_test = n;
  rep.per_point_sq_err.resize(n);
  rep.per_point_crps.resize(n);
  Vector means(n);
  for (int i = 0; i < n; ++i) {
    means[i] = draws.row(i).mean();
    rep.per_point_sq_err[i] = (means[i] - truths[i]) * (means[i] - truths[i]);
    rep.per_point_crps[i] = crps_empirical(draws.row(i).transpose(), truths[i]);
  }
  rep.rmse = std::sqrt(rep.per_point_sq_err.mean());
  rep.crps = rep.per_point_crps.mean();
  return rep;
}

MetricReport evaluate_gaussian(const Vector& means, const Vector& sds, const Vector& truths) {
  const int n = static_cast<int>(truths.size());
  if (means.size() != n || sds.size() != n) throw input_error("evaluate_gaussian: length mismatch");
  MetricReport rep;
  rep.n_test = n;
  rep.per_point_sq_err.resize(n);
  rep.per_point_crps.resize(n);
  for (int i = 0; i < n; ++i) {
    rep.per_point_sq_err[i] = (means[i] - truths[i]) * (means[i] - truths[i]);
    rep.per_point_crps[i] = crps_gaussian(means[i], sds[i], truths[i]);
  }
  rep.rmse = std::sqrt(rep.per_point_sq_err.mean());
  rep.crps = rep.per_point_crps.mean();
  return rep;
}

}  // namespace lolgp
