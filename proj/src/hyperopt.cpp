#include "lolgp/hyperopt.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "lolgp/lbfgs.hpp"
#include "lolgp/linalg.hpp"

namespace lolgp {

// ---------------------------------------------------------------------------
// HyperParams packing

namespace {
int spec_params(const KernelSpec& k) { return 1 + k.dim(); }

void pack_one(const KernelSpec& k, Vector& out, int& pos) {
  out[pos++] = std::log(k.variance);
  for (int j = 0; j < k.dim(); ++j) out[pos++] = std::log(k.lengthscales[j]);
}

void unpack_one(KernelSpec& k, const Vector& in, int& pos) {
  k.variance = std::exp(in[pos++]);
  for (int j = 0; j < k.dim(); ++j) k.lengthscales[j] = std::exp(in[pos++]);
}
}  // namespace

int HyperParams::n_params() const {
  int n = 0;
  for (const auto& k : f_kernels) n += spec_params(k);
  for (const auto& k : w_kernels) n += spec_params(k);
  for (const auto& k : d_kernels) n += spec_params(k);
  return n;
}

Vector HyperParams::pack_log() const {
  Vector out(n_params());
  int pos = 0;
  for (const auto& k : f_kernels) pack_one(k, out, pos);
  for (const auto& k : w_kernels) pack_one(k, out, pos);
  for (const auto& k : d_kernels) pack_one(k, out, pos);
  return out;
}

void HyperParams::unpack_log(const Vector& theta) {
  if (theta.size() != n_params()) throw input_error("hyperparameter vector has wrong length");
  int pos = 0;
  for (auto& k : f_kernels) unpack_one(k, theta, pos);
  for (auto& k : w_kernels) unpack_one(k, theta, pos);
  for (auto& k : d_kernels) unpack_one(k, theta, pos);
}

// ---------------------------------------------------------------------------
// Priors

double PriorSpec::log_density(const Vector& log_params) const {
  const double n = static_cast<double>(log_params.size());
  const double quad = ((log_params.array() - log_mean) / log_sd).square().sum();
  return -0.5 * quad - n * (std::log(log_sd) + 0.5 * std::log(2.0 * M_PI));
}

Vector PriorSpec::log_density_grad(const Vector& log_params) const {
  return -(log_params.array() - log_mean) / (log_sd * log_sd);
}

// ---------------------------------------------------------------------------
// Objective terms. Given the latent point estimate, every term is a zero-mean
// Gaussian log-density whose covariance involves exactly one kernel, so
// values and gradients separate cleanly by kernel block.

namespace {

struct GaussianTerm {
  const KernelSpec* kernel;  // which block of the packed vector it belongs to
  Design X;
  Vector z;
};

double term_value(const GaussianTerm& t) {
  const SpdFactor f = SpdFactor::factorize(kernel_matrix(*t.kernel, t.X));
  return f.gaussian_log_density(t.z);
}

// d logN(z; 0, K)/d theta_j = 0.5 (a' dK a - tr(K^{-1} dK)),  a = K^{-1} z.
Vector term_grad(const GaussianTerm& t) {
  const SpdFactor f = SpdFactor::factorize(kernel_matrix(*t.kernel, t.X));
  const Vector a = f.solve(t.z);
  const Matrix Kinv = f.inverse();
  const auto dKs = kernel_matrix_log_grads(*t.kernel, t.X);
  Vector g(dKs.size());
  for (size_t j = 0; j < dKs.size(); ++j) {
    g[j] = 0.5 * (a.dot(dKs[j] * a) - (Kinv.array() * dKs[j].array()).sum());
  }
  return g;
}

// Block offsets of each kernel inside the packed log-parameter vector.
struct BlockMap {
  std::vector<const KernelSpec*> kernels;
  std::vector<int> offsets;

  explicit BlockMap(const HyperParams& hp) {
    int pos = 0;
    auto add = [&](const KernelSpec& k) {
      kernels.push_back(&k);
      offsets.push_back(pos);
      pos += spec_params(k);
    };
    for (const auto& k : hp.f_kernels) add(k);
    for (const auto& k : hp.w_kernels) add(k);
    for (const auto& k : hp.d_kernels) add(k);
  }

  int offset_of(const KernelSpec* k) const {
    for (size_t i = 0; i < kernels.size(); ++i) {
      if (kernels[i] == k) return offsets[i];
    }
    throw input_error("internal: kernel not found in block map");
  }
};

std::vector<GaussianTerm> ms_terms(const MultiSourceData& data, const MultiSourceState& theta_hat,
                                   const HyperParams& hp, Activation activation) {
  const int L = data.n_sources();
  const int nT = static_cast<int>(data.target.inputs.rows());
  std::vector<GaussianTerm> terms;

  for (int l = 0; l < L; ++l) {
    const int nl = static_cast<int>(data.sources[l].inputs.rows());
    GaussianTerm t;
    t.kernel = &hp.f_kernels[l];
    t.X.resize(nl + nT, data.dim());
    t.X.topRows(nl) = data.sources[l].inputs;
    t.X.bottomRows(nT) = data.target.inputs;
    t.z.resize(nl + nT);
    t.z.head(nl) = data.sources[l].outputs;
    t.z.tail(nT) = theta_hat.source_values[l];
    terms.push_back(std::move(t));
  }
  for (int l = 0; l < L; ++l) {
    terms.push_back({&hp.w_kernels[l], data.target.inputs, theta_hat.weights[l]});
  }
  {
    Vector resid = data.target.outputs;
    for (int l = 0; l < L; ++l) {
      for (int i = 0; i < nT; ++i) {
        resid[i] -= apply_activation(activation, theta_hat.weights[l][i]) *
                    theta_hat.source_values[l][i];
      }
    }
    terms.push_back({&hp.d_kernels[0], data.target.inputs, std::move(resid)});
  }
  return terms;
}

std::vector<GaussianTerm> mf_terms(const MultiFidelityData& data,
                                   const MultiFidelityState& theta_hat, const HyperParams& hp,
                                   Activation activation) {
  const int L = data.n_levels() - 1;
  std::vector<GaussianTerm> terms;

  if (MultiFidelityData::detect_nested(data.levels)) {
    // Factorized likelihood: per-level Gaussians of the transfer residuals.
    terms.push_back({&hp.f_kernels[0], data.levels[0].inputs, data.levels[0].outputs});
    for (int s = 0; s < L; ++s) {
      const Design& Xn = data.levels[s + 1].inputs;
      const int n = static_cast<int>(Xn.rows());
      Vector z(n);
      for (int i = 0; i < n; ++i) {
        const int j = find_point(data.levels[s].inputs, Xn.row(i));
        z[i] = data.levels[s + 1].outputs[i] -
               apply_activation(activation, theta_hat.weights[s][i]) * data.levels[s].outputs[j];
      }
      terms.push_back({&hp.d_kernels[s], Xn, std::move(z)});
      terms.push_back({&hp.w_kernels[s], Xn, theta_hat.weights[s]});
    }
    return terms;
  }

  // General case: joint density over the augmented designs. The layout
  // bookkeeping (but not the covariance inverses) comes from a throwaway
  // precompute at unit hyperparameters.
  HyperParams layout_hp = HyperParams::initial_multifidelity(data.n_levels(), data.dim());
  MultiFidelityPrecompute layout(data, layout_hp);

  {
    GaussianTerm t;
    t.kernel = &hp.f_kernels[0];
    t.X = layout.aug(0);
    t.z = layout.level_values(0, theta_hat);
    terms.push_back(std::move(t));
  }
  for (int s = 0; s < L; ++s) {
    const int n = layout.aug_size(s + 1);
    const Vector upper = layout.level_values(s + 1, theta_hat);
    const Vector lower = layout.level_values(s, theta_hat);
    Vector z(n);
    for (int i = 0; i < n; ++i) {
      z[i] = upper[i] - apply_activation(activation, theta_hat.weights[s][i]) *
                            lower[layout.up_index(s, i)];
    }
    terms.push_back({&hp.d_kernels[s], layout.aug(s + 1), std::move(z)});
    terms.push_back({&hp.w_kernels[s], layout.aug(s + 1), theta_hat.weights[s]});
  }
  return terms;
}

double objective_from_terms(const std::vector<GaussianTerm>& terms, const HyperParams& hp,
                            const PriorSpec& prior) {
  double v = prior.log_density(hp.pack_log());
  try {
    for (const auto& t : terms) v += term_value(t);
  } catch (const numeric_error&) {
    return -std::numeric_limits<double>::infinity();
  }
  return v;
}

Vector grad_from_terms(const std::vector<GaussianTerm>& terms, const HyperParams& hp,
                       const PriorSpec& prior) {
  BlockMap blocks(hp);
  Vector g = prior.log_density_grad(hp.pack_log());
  for (const auto& t : terms) {
    const Vector tg = term_grad(t);
    const int off = blocks.offset_of(t.kernel);
    g.segment(off, tg.size()) += tg;
  }
  return g;
}

}  // namespace

double map_objective_ms(const MultiSourceData& data, const MultiSourceState& theta_hat,
                        const HyperParams& hp, const PriorSpec& prior, Activation activation) {
  return objective_from_terms(ms_terms(data, theta_hat, hp, activation), hp, prior);
}

double map_objective_mf(const MultiFidelityData& data, const MultiFidelityState& theta_hat,
                        const HyperParams& hp, const PriorSpec& prior, Activation activation) {
  return objective_from_terms(mf_terms(data, theta_hat, hp, activation), hp, prior);
}

Vector map_objective_ms_grad(const MultiSourceData& data, const MultiSourceState& theta_hat,
                             const HyperParams& hp, const PriorSpec& prior,
                             Activation activation) {
  return grad_from_terms(ms_terms(data, theta_hat, hp, activation), hp, prior);
}

Vector map_objective_mf_grad(const MultiFidelityData& data, const MultiFidelityState& theta_hat,
                             const HyperParams& hp, const PriorSpec& prior,
                             Activation activation) {
  return grad_from_terms(mf_terms(data, theta_hat, hp, activation), hp, prior);
}

// ---------------------------------------------------------------------------
// Best-of-restarts optimization on the packed log scale.

namespace {

// Maximize the objective over the packed log parameters from `restarts`
// starting points. The term list is bound to `work`, whose kernel values are
// rewritten in place by unpack_log, so terms are assembled only once.
void optimize_terms(HyperParams& work, const std::vector<GaussianTerm>& terms,
                    const PriorSpec& prior, const OptimizeOptions& opts) {
  const Vector x0 = work.pack_log();
  const int P = static_cast<int>(x0.size());

  auto value_at = [&](const Vector& x) -> double {
    work.unpack_log(x);
    return objective_from_terms(terms, work, prior);
  };

  auto neg_objective = [&](const Vector& x, Vector& grad) -> double {
    const double v = value_at(x);
    if (!std::isfinite(v)) {
      grad.setZero(P);
      return std::numeric_limits<double>::infinity();
    }
    if (opts.gradient == GradientMode::Analytic) {
      work.unpack_log(x);
      grad = -grad_from_terms(terms, work, prior);
    } else {
      grad.resize(P);
      Vector xp = x;
      for (int j = 0; j < P; ++j) {
        xp[j] = x[j] + opts.fd_step;
        const double fp = value_at(xp);
        xp[j] = x[j] - opts.fd_step;
        const double fm = value_at(xp);
        xp[j] = x[j];
        grad[j] = -(fp - fm) / (2.0 * opts.fd_step);
        if (!std::isfinite(grad[j])) grad[j] = 0.0;
      }
    }
    return -v;
  };

  double best_value = value_at(x0);
  Vector best_x = x0;
  bool improved = false;

  RngStream rng = RngStream(opts.seed).child(streams::kOptimizer);
  for (int r = 0; r < opts.restarts; ++r) {
    Vector start = x0;
    if (r > 0) {
      for (int j = 0; j < P; ++j) start[j] = x0[j] + rng.normal();
    }
    LbfgsResult res = lbfgs_minimize(neg_objective, start);
    const double v = -res.value;
    if (std::isfinite(v) && v > best_value) {
      best_value = v;
      best_x = res.x;
      improved = true;
    }
  }
  if (!improved) {
    std::cerr << "[lolgp] warning: hyperparameter optimization did not improve on the "
                 "initialization; keeping initial values\n";
  }
  work.unpack_log(best_x);
}

}  // namespace

HyperParams map_optimize_ms(const MultiSourceData& data, const MultiSourceState& theta_hat,
                            const HyperParams& hp0, const PriorSpec& prior,
                            const OptimizeOptions& opts, Activation activation) {
  HyperParams work = hp0;
  const auto terms = ms_terms(data, theta_hat, work, activation);
  optimize_terms(work, terms, prior, opts);
  return work;
}

HyperParams map_optimize_mf(const MultiFidelityData& data, const MultiFidelityState& theta_hat,
                            const HyperParams& hp0, const PriorSpec& prior,
                            const OptimizeOptions& opts, Activation activation) {
  HyperParams work = hp0;
  const auto terms = mf_terms(data, theta_hat, work, activation);
  optimize_terms(work, terms, prior, opts);
  return work;
}

// ---------------------------------------------------------------------------
// Full training pipeline

namespace {
GibbsConfig pilot_config(const GibbsConfig& g) {
  GibbsConfig p = g;
  p.iterations = std::max(2, g.iterations / 4);
  p.burn_in = std::min(p.iterations - 1, std::max(0, g.burn_in / 4));
  p.seed = RngStream(g.seed).child(streams::kPilot).raw();
  return p;
}
}  // namespace

MultiSourceSurrogate train_full_ms(const MultiSourceData& raw, const TrainConfig& config) {
  MultiSourceSurrogate model;
  model.standardizer = Standardizer::from(raw.target.outputs);
  model.data = raw;
  for (auto& s : model.data.sources) s.outputs = model.standardizer.forward(s.outputs);
  model.data.target.outputs = model.standardizer.forward(model.data.target.outputs);

  HyperParams hp = HyperParams::initial_multisource(raw.n_sources(), raw.dim(), config.nugget);
  if (!config.skip_optimization) {
    const MultiSourceChain pilot =
        gibbs_sample_ms(model.data, hp, pilot_config(config.gibbs));
    const MultiSourceState theta_hat = pilot.posterior_mean();
    OptimizeOptions opts = config.optimize;
    opts.seed = RngStream(config.gibbs.seed).child(streams::kOptimizer).raw();
    hp = map_optimize_ms(model.data, theta_hat, hp, config.prior, opts,
                         config.gibbs.activation);
  }
  model.hyper = hp;
  model.chain = gibbs_sample_ms(model.data, hp, config.gibbs);
  return model;
}

MultiFidelitySurrogate train_full_mf(const MultiFidelityData& raw, const TrainConfig& config) {
  MultiFidelitySurrogate model;
  model.standardizer = Standardizer::from(raw.target().outputs);
  model.data = raw;
  for (auto& s : model.data.levels) s.outputs = model.standardizer.forward(s.outputs);
  model.use_nested_path = raw.nested;

  HyperParams hp = HyperParams::initial_multifidelity(raw.n_levels(), raw.dim(), config.nugget);
  if (!config.skip_optimization) {
    const MultiFidelityChain pilot =
        gibbs_sample_mf(model.data, hp, pilot_config(config.gibbs));
    const MultiFidelityState theta_hat = pilot.posterior_mean();
    OptimizeOptions opts = config.optimize;
    opts.seed = RngStream(config.gibbs.seed).child(streams::kOptimizer).raw();
    hp = map_optimize_mf(model.data, theta_hat, hp, config.prior, opts,
                         config.gibbs.activation);
  }
  model.hyper = hp;
  model.chain = gibbs_sample_mf(model.data, hp, config.gibbs);
  return model;
}

namespace {
PredictiveSamples back_transform(PredictiveSamples s, const Standardizer& std) {
  s.draws = (s.draws.array() * std.sd + std.mean).matrix();
  s.summarize();
  return s;
}
}  // namespace

PredictiveSamples MultiSourceSurrogate::predict(const Design& X_test, std::uint64_t seed) const {
  MultiSourcePrecompute pre(data, hyper);
  return back_transform(predict_ms(pre, chain, X_test, seed), standardizer);
}

PredictiveSamples MultiFidelitySurrogate::predict(const Design& X_test, std::uint64_t seed) const {
  MultiFidelityPrecompute pre(data, hyper);
  PredictiveSamples s = use_nested_path ? predict_mf_nested(pre, chain, X_test, seed)
                                        : predict_mf_generic(pre, chain, X_test, seed);
  return back_transform(s, standardizer);
}

}  // namespace lolgp
