#include "lolgp/multisource.hpp"

#include <algorithm>
#include <cmath>

#include "lolgp/detail/conditionals.hpp"
#include "lolgp/linalg.hpp"

namespace lolgp {

MultiSourceState MultiSourceChain::state_at(int b) const {
  MultiSourceState s;
  for (size_t l = 0; l < weights.size(); ++l) {
    s.weights.push_back(weights[l].row(b).transpose());
    s.source_values.push_back(source_values[l].row(b).transpose());
  }
  return s;
}

MultiSourceState MultiSourceChain::posterior_mean() const {
  MultiSourceState s;
  for (size_t l = 0; l < weights.size(); ++l) {
    s.weights.push_back(weights[l].colwise().mean().transpose());
    s.source_values.push_back(source_values[l].colwise().mean().transpose());
  }
  return s;
}

MultiSourcePrecompute::MultiSourcePrecompute(const MultiSourceData& data, const HyperParams& hp)
    : data_(&data), hp_(&hp) {
  data.validate();
  hp.validate();
  const int L = data.n_sources();
  if (static_cast<int>(hp.f_kernels.size()) != L || static_cast<int>(hp.w_kernels.size()) != L ||
      hp.d_kernels.size() != 1) {
    throw input_error("multi-source hyperparameters must have L source kernels, L weight kernels "
                      "and one discrepancy kernel");
  }
  n_target_ = static_cast<int>(data.target.inputs.rows());

  disc_factor_ = SpdFactor::factorize(kernel_matrix(hp.d_kernels[0], data.target.inputs));
  disc_inv_ = disc_factor_.inverse();
  for (int l = 0; l < L; ++l) {
    weight_factor_.push_back(
        SpdFactor::factorize(kernel_matrix(hp.w_kernels[l], data.target.inputs)));
    weight_inv_.push_back(weight_factor_.back().inverse());

    const int nl = n_source(l);
    Design stacked(nl + n_target_, data.dim());
    stacked.topRows(nl) = data.sources[l].inputs;
    stacked.bottomRows(n_target_) = data.target.inputs;
    source_factor_.push_back(SpdFactor::factorize(kernel_matrix(hp.f_kernels[l], stacked)));
    source_inv_.push_back(source_factor_.back().inverse());
  }
}

namespace {

// Mutable sweep workspace: the state vectors plus the maintained
// precision-times-state products, so each coordinate update is O(n).
struct SweepWork {
  std::vector<Vector> weights;     // omega_l(X_T)
  std::vector<Vector> stacked_f;   // [f_l(X_l); f_l(X_T)] per source
  std::vector<Vector> s;           // weight_inv * weights
  std::vector<Vector> t;           // source_inv * stacked_f
  Vector resid;                    // f_T - sum_l rho_l . f_l(X_T)
  Vector u;                        // disc_inv * resid

  static SweepWork from_state(const MultiSourcePrecompute& pre, const MultiSourceState& state,
                              Activation act) {
    const auto& data = pre.data();
    const int L = data.n_sources();
    const int nT = pre.n_target();
    SweepWork w;
    w.resid = data.target.outputs;
    for (int l = 0; l < L; ++l) {
      w.weights.push_back(state.weights[l]);
      const int nl = pre.n_source(l);
      Vector g(nl + nT);
      g.head(nl) = data.sources[l].outputs;
      g.tail(nT) = state.source_values[l];
      w.stacked_f.push_back(std::move(g));
      w.s.push_back(pre.weight_inv(l) * w.weights[l]);
      w.t.push_back(pre.source_inv(l) * w.stacked_f[l]);
      for (int i = 0; i < nT; ++i) {
        w.resid[i] -= apply_activation(act, w.weights[l][i]) * state.source_values[l][i];
      }
    }
    w.u = pre.disc_inv() * w.resid;
    return w;
  }

  void to_state(const MultiSourcePrecompute& pre, MultiSourceState& state) const {
    const int nT = pre.n_target();
    state.weights = weights;
    state.source_values.clear();
    for (size_t l = 0; l < stacked_f.size(); ++l) {
      state.source_values.push_back(stacked_f[l].tail(nT));
    }
  }

  double source_value(int l, int i, int n_source) const { return stacked_f[l][n_source + i]; }

  // f_T(x_i) minus every other source's transfer contribution.
  double partial_residual(const MultiSourcePrecompute& pre, Activation act, int i,
                          int l_skip) const {
    double e = pre.data().target.outputs[i];
    for (size_t l = 0; l < weights.size(); ++l) {
      if (static_cast<int>(l) == l_skip) continue;
      e -= apply_activation(act, weights[l][i]) *
           stacked_f[l][pre.n_source(static_cast<int>(l)) + i];
    }
    return e;
  }

  void set_residual_entry(const MultiSourcePrecompute& pre, int i, double value) {
    const double delta = value - resid[i];
    if (delta != 0.0) {
      u += delta * pre.disc_inv().col(i);
      resid[i] = value;
    }
  }
};

}  // namespace

MixtureTruncNormal full_conditional_weight(const MultiSourcePrecompute& pre,
                                           const MultiSourceState& state, int i, int l) {
  if (l < 0 || l >= pre.data().n_sources() || i < 0 || i >= pre.n_target()) {
    throw input_error("full_conditional_weight: index out of range");
  }
  SweepWork w = SweepWork::from_state(pre, state, Activation::Relu);
  const auto [a, b] = detail::loo_conditional(pre.weight_inv(l), w.weights[l], w.s[l], i);
  const auto [m, v] = detail::loo_conditional(pre.disc_inv(), w.resid, w.u, i);
  const double e = w.partial_residual(pre, Activation::Relu, i, l);
  const double fval = w.source_value(l, i, pre.n_source(l));
  return detail::weight_mixture(a, b, fval, e, m, v);
}

std::pair<double, double> full_conditional_source_value(const MultiSourcePrecompute& pre,
                                                        const MultiSourceState& state, int i,
                                                        int l, Activation activation) {
  if (l < 0 || l >= pre.data().n_sources() || i < 0 || i >= pre.n_target()) {
    throw input_error("full_conditional_source_value: index out of range");
  }
  SweepWork w = SweepWork::from_state(pre, state, activation);
  const int j = pre.n_source(l) + i;
  const auto [a, b] = detail::loo_conditional(pre.source_inv(l), w.stacked_f[l], w.t[l], j);
  const double rho = apply_activation(activation, w.weights[l][i]);
  if (rho == 0.0) return {a, b};
  const auto [m, v] = detail::loo_conditional(pre.disc_inv(), w.resid, w.u, i);
  const double e = w.partial_residual(pre, activation, i, l);
  return detail::gaussian_product(a, b, rho, e, m, v);
}

MultiSourceState initial_state_ms(const MultiSourcePrecompute& pre) {
  const auto& data = pre.data();
  MultiSourceState state;
  for (int l = 0; l < data.n_sources(); ++l) {
    state.weights.push_back(Vector::Ones(pre.n_target()));
    const auto post =
        gp_fit(data.sources[l].inputs, data.sources[l].outputs, pre.hyper().f_kernels[l]);
    Vector mean(pre.n_target());
    for (int i = 0; i < pre.n_target(); ++i) {
      mean[i] = post.predict(data.target.inputs.row(i)).first;
    }
    state.source_values.push_back(std::move(mean));
  }
  return state;
}

namespace {

void sweep(const MultiSourcePrecompute& pre, SweepWork& w, Activation act, bool freeze_weights,
           RngStream& rng) {
  const int L = pre.data().n_sources();
  const int nT = pre.n_target();
  for (int l = 0; l < L; ++l) {
    const int nl = pre.n_source(l);
    for (int i = 0; i < nT; ++i) {
      const double e = w.partial_residual(pre, act, i, l);
      // -- latent weight update --
      if (!freeze_weights) {
        const auto [a, b] = detail::loo_conditional(pre.weight_inv(l), w.weights[l], w.s[l], i);
        const auto [m, v] = detail::loo_conditional(pre.disc_inv(), w.resid, w.u, i);
        const double fval = w.stacked_f[l][nl + i];
        double w_new;
        if (act == Activation::Relu) {
          w_new = detail::weight_mixture(a, b, fval, e, m, v).sample(rng);
        } else {
          const auto [mean, var] = detail::gaussian_product(a, b, fval, e, m, v);
          w_new = rng.normal(mean, var);
        }
        const double delta = w_new - w.weights[l][i];
        if (delta != 0.0) {
          w.s[l] += delta * pre.weight_inv(l).col(i);
          w.weights[l][i] = w_new;
        }
        w.set_residual_entry(pre, i, e - apply_activation(act, w_new) * fval);
      }
      // -- latent source value update --
      {
        const int j = nl + i;
        const auto [a, b] = detail::loo_conditional(pre.source_inv(l), w.stacked_f[l], w.t[l], j);
        const double rho = apply_activation(act, w.weights[l][i]);
        double f_new;
        if (rho == 0.0) {
          f_new = rng.normal(a, b);
        } else {
          const auto [m, v] = detail::loo_conditional(pre.disc_inv(), w.resid, w.u, i);
          const auto [mean, var] = detail::gaussian_product(a, b, rho, e, m, v);
          f_new = rng.normal(mean, var);
        }
        const double delta = f_new - w.stacked_f[l][j];
        if (delta != 0.0) {
          w.t[l] += delta * pre.source_inv(l).col(j);
          w.stacked_f[l][j] = f_new;
        }
        w.set_residual_entry(pre, i, e - rho * f_new);
      }
    }
  }
}

}  // namespace

void gibbs_sweep_ms(const MultiSourcePrecompute& pre, MultiSourceState& state,
                    Activation activation, bool freeze_weights, RngStream& rng) {
  SweepWork w = SweepWork::from_state(pre, state, activation);
  sweep(pre, w, activation, freeze_weights, rng);
  w.to_state(pre, state);
}

MultiSourceChain gibbs_sample_ms(const MultiSourcePrecompute& pre, const GibbsConfig& config) {
  config.validate();
  const int L = pre.data().n_sources();
  const int nT = pre.n_target();
  const int kept = config.iterations - config.burn_in;

  MultiSourceChain chain;
  chain.activation = config.activation;
  for (int l = 0; l < L; ++l) {
    chain.weights.emplace_back(kept, nT);
    chain.source_values.emplace_back(kept, nT);
  }

  MultiSourceState state = initial_state_ms(pre);
  SweepWork w = SweepWork::from_state(pre, state, config.activation);
  RngStream rng = RngStream(config.seed).child(streams::kGibbs);

  for (int b = 0; b < config.iterations; ++b) {
    sweep(pre, w, config.activation, config.freeze_weights, rng);
    bool finite = true;
    for (int l = 0; l < L; ++l) {
      if (!w.weights[l].allFinite() || !w.stacked_f[l].allFinite()) finite = false;
    }
    if (!finite) {
      throw numeric_error("gibbs_sample_ms: non-finite state at iteration " + std::to_string(b + 1));
    }
    if (b >= config.burn_in) {
      const int row = b - config.burn_in;
      for (int l = 0; l < L; ++l) {
        chain.weights[l].row(row) = w.weights[l].transpose();
        chain.source_values[l].row(row) = w.stacked_f[l].tail(nT).transpose();
      }
    }
  }
  return chain;
}

MultiSourceChain gibbs_sample_ms(const MultiSourceData& data, const HyperParams& hp,
                                 const GibbsConfig& config) {
  MultiSourcePrecompute pre(data, hp);
  return gibbs_sample_ms(pre, config);
}

void PredictiveSamples::summarize() {
  const int n = static_cast<int>(draws.rows());
  const int m = static_cast<int>(draws.cols());
  mean.resize(n);
  variance.resize(n);
  q025.resize(n);
  q975.resize(n);
  std::vector<double> buf(m);
  for (int i = 0; i < n; ++i) {
    mean[i] = draws.row(i).mean();
    variance[i] = (draws.row(i).array() - mean[i]).square().sum() / std::max(1, m - 1);
    for (int b = 0; b < m; ++b) buf[b] = draws(i, b);
    std::sort(buf.begin(), buf.end());
    auto quantile = [&](double p) {
      const double h = p * (m - 1);
      const int lo = static_cast<int>(h);
      const int hi = std::min(lo + 1, m - 1);
      const double frac = h - lo;
      return buf[lo] + frac * (buf[hi] - buf[lo]);
    };
    q025[i] = quantile(0.025);
    q975[i] = quantile(0.975);
  }
}

PredictiveSamples predict_ms(const MultiSourcePrecompute& pre, const MultiSourceChain& chain,
                             const Design& X_test, std::uint64_t seed) {
  const auto& data = pre.data();
  const int L = data.n_sources();
  const int nT = pre.n_target();
  const int kept = chain.kept();
  const int n_test = static_cast<int>(X_test.rows());
  const Activation act = chain.activation;
  if (X_test.cols() != data.dim()) throw input_error("predict_ms: test dimension mismatch");

  PredictiveSamples out;
  out.draws.resize(n_test, kept);

  RngStream base(seed);
  for (int p = 0; p < n_test; ++p) {
    RngStream rng = base.child(streams::kPredictBase + static_cast<std::uint64_t>(p));
    const Vector x = X_test.row(p).transpose();

    // Per-point conditioning vectors; fixed across chain states.
    std::vector<Vector> alpha_f(L), alpha_w(L);
    std::vector<double> var_f(L), var_w(L), fixed_f(L);
    for (int l = 0; l < L; ++l) {
      const int nl = pre.n_source(l);
      Design stacked(nl + nT, data.dim());
      stacked.topRows(nl) = data.sources[l].inputs;
      stacked.bottomRows(nT) = data.target.inputs;
      const Vector kf = kernel_vector(pre.hyper().f_kernels[l], stacked, x);
      alpha_f[l] = pre.source_factor(l).solve(kf);
      var_f[l] = std::max(0.0, pre.hyper().f_kernels[l].variance - kf.dot(alpha_f[l]));
      fixed_f[l] = alpha_f[l].head(nl).dot(data.sources[l].outputs);

      const Vector kw = kernel_vector(pre.hyper().w_kernels[l], data.target.inputs, x);
      alpha_w[l] = pre.weight_factor(l).solve(kw);
      var_w[l] = std::max(0.0, pre.hyper().w_kernels[l].variance - kw.dot(alpha_w[l]));
    }
    const Vector kd = kernel_vector(pre.hyper().d_kernels[0], data.target.inputs, x);
    const Vector gamma = pre.disc_factor().solve(kd);
    const double var_d = std::max(0.0, pre.hyper().d_kernels[0].variance - kd.dot(gamma));

    Vector resid(nT);
    for (int b = 0; b < kept; ++b) {
      double ft = 0.0;
      resid = data.target.outputs;
      for (int l = 0; l < L; ++l) {
        for (int i = 0; i < nT; ++i) {
          resid[i] -= apply_activation(act, chain.weights[l](b, i)) * chain.source_values[l](b, i);
        }
      }
      for (int l = 0; l < L; ++l) {
        const double mean_f =
            fixed_f[l] + alpha_f[l].tail(nT).dot(chain.source_values[l].row(b).transpose());
        const double f_draw = rng.normal(mean_f, var_f[l]);
        const double mean_w = alpha_w[l].dot(chain.weights[l].row(b).transpose());
        const double w_draw = rng.normal(mean_w, var_w[l]);
        ft += apply_activation(act, w_draw) * f_draw;
      }
      ft += rng.normal(gamma.dot(resid), var_d);
      out.draws(p, b) = ft;
    }
  }
  out.summarize();
  return out;
}

Matrix posterior_mean_transfer_weights(const MultiSourcePrecompute& pre,
                                       const MultiSourceChain& chain, const Design& X_test,
                                       std::uint64_t seed) {
  const auto& data = pre.data();
  const int L = data.n_sources();
  const int kept = chain.kept();
  const int n_test = static_cast<int>(X_test.rows());
  const Activation act = chain.activation;

  Matrix rho(n_test, L);
  RngStream base(seed);
  for (int p = 0; p < n_test; ++p) {
    RngStream rng = base.child(streams::kPredictBase * 2 + static_cast<std::uint64_t>(p));
    const Vector x = X_test.row(p).transpose();
    for (int l = 0; l < L; ++l) {
      const Vector kw = kernel_vector(pre.hyper().w_kernels[l], data.target.inputs, x);
      const Vector beta = pre.weight_factor(l).solve(kw);
      const double var_w = std::max(0.0, pre.hyper().w_kernels[l].variance - kw.dot(beta));
      double acc = 0.0;
      for (int b = 0; b < kept; ++b) {
        const double mean_w = beta.dot(chain.weights[l].row(b).transpose());
        acc += apply_activation(act, rng.normal(mean_w, var_w));
      }
      rho(p, l) = acc / kept;
    }
  }
  return rho;
}

}  // namespace lolgp
