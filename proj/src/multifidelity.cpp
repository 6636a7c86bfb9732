#include "lolgp/multifidelity.hpp"

#include <cmath>

#include "lolgp/detail/conditionals.hpp"
#include "lolgp/linalg.hpp"

namespace lolgp {

MultiFidelityState MultiFidelityChain::state_at(int b) const {
  MultiFidelityState s;
  for (size_t l = 0; l < weights.size(); ++l) {
    s.weights.push_back(weights[l].row(b).transpose());
    s.values_latent.push_back(values_latent[l].cols() > 0
                                  ? Vector(values_latent[l].row(b).transpose())
                                  : Vector(0));
  }
  return s;
}

MultiFidelityState MultiFidelityChain::posterior_mean() const {
  MultiFidelityState s;
  for (size_t l = 0; l < weights.size(); ++l) {
    s.weights.push_back(weights[l].colwise().mean().transpose());
    s.values_latent.push_back(values_latent[l].cols() > 0
                                  ? Vector(values_latent[l].colwise().mean().transpose())
                                  : Vector(0));
  }
  return s;
}

MultiFidelityPrecompute::MultiFidelityPrecompute(const MultiFidelityData& data,
                                                 const HyperParams& hp)
    : data_(&data), hp_(&hp) {
  data.validate();
  hp.validate();
  const int L = data.n_levels() - 1;
  n_steps_ = L;
  if (static_cast<int>(hp.f_kernels.size()) != 1 || static_cast<int>(hp.w_kernels.size()) != L ||
      static_cast<int>(hp.d_kernels.size()) != L) {
    throw input_error("multi-fidelity hyperparameters must have one level-1 kernel and one weight "
                      "and one discrepancy kernel per fidelity step");
  }

  // Augmented designs, built top-down: aug(L) is the target design and
  // aug(l) = [X_{l+1}; aug(l+1) \ X_{l+1}].
  aug_.resize(L + 1);
  aug_[L] = data.levels[L].inputs;
  for (int l = L - 1; l >= 0; --l) {
    const Design& own = data.levels[l].inputs;
    std::vector<int> extra;
    for (Eigen::Index i = 0; i < aug_[l + 1].rows(); ++i) {
      if (find_point(own, aug_[l + 1].row(i)) < 0) extra.push_back(static_cast<int>(i));
    }
    Design A(own.rows() + static_cast<Eigen::Index>(extra.size()), data.dim());
    A.topRows(own.rows()) = own;
    for (size_t k = 0; k < extra.size(); ++k) {
      A.row(own.rows() + static_cast<Eigen::Index>(k)) = aug_[l + 1].row(extra[k]);
    }
    aug_[l] = std::move(A);
  }

  map_up_.resize(L);
  for (int l = 0; l < L; ++l) {
    std::vector<int> m(aug_[l + 1].rows());
    for (Eigen::Index i = 0; i < aug_[l + 1].rows(); ++i) {
      const int j = find_point(aug_[l], aug_[l + 1].row(i));
      if (j < 0) throw input_error("augmented designs are not a subset chain");
      m[i] = j;
    }
    map_up_[l] = std::move(m);
  }

  auto track = [&](const SpdFactor& f) {
    max_factor_dim_ = std::max(max_factor_dim_, static_cast<int>(f.dim()));
  };

  level1_factor_ = SpdFactor::factorize(kernel_matrix(hp.f_kernels[0], aug_[0]));
  track(level1_factor_);
  level1_inv_ = level1_factor_.inverse();
  for (int l = 0; l < L; ++l) {
    weight_factor_.push_back(SpdFactor::factorize(kernel_matrix(hp.w_kernels[l], aug_[l + 1])));
    track(weight_factor_.back());
    weight_inv_.push_back(weight_factor_.back().inverse());
    disc_factor_.push_back(SpdFactor::factorize(kernel_matrix(hp.d_kernels[l], aug_[l + 1])));
    track(disc_factor_.back());
    disc_inv_.push_back(disc_factor_.back().inverse());
  }
}

Vector MultiFidelityPrecompute::level_values(int l, const MultiFidelityState& state) const {
  const int n_obs = n_level(l);
  if (l == n_steps_) return data_->levels[l].outputs;  // target: fully observed
  Vector v(aug_size(l));
  v.head(n_obs) = data_->levels[l].outputs;
  if (aug_size(l) > n_obs) v.tail(aug_size(l) - n_obs) = state.values_latent[l];
  return v;
}

namespace {

struct SweepWorkMF {
  std::vector<Vector> weights;  // omega_s over aug(s+1)
  std::vector<Vector> values;   // level-s values over aug(s), s = 0..L (target included)
  std::vector<Vector> s;        // weight_inv * weights
  Vector t1;                    // level1_inv * values[0]
  std::vector<Vector> resid;    // r_s over aug(s+1)
  std::vector<Vector> u;        // disc_inv(s) * resid[s]

  static SweepWorkMF from_state(const MultiFidelityPrecompute& pre,
                                const MultiFidelityState& state, Activation act) {
    const int L = pre.n_steps();
    SweepWorkMF w;
    for (int l = 0; l <= L; ++l) w.values.push_back(pre.level_values(l, state));
    for (int s = 0; s < L; ++s) {
      w.weights.push_back(state.weights[s]);
      w.s.push_back(pre.weight_inv(s) * w.weights[s]);
    }
    if (L > 0) w.t1 = pre.level1_inv() * w.values[0];
    for (int s = 0; s < L; ++s) {
      const int n = pre.aug_size(s + 1);
      Vector r(n);
      for (int i = 0; i < n; ++i) {
        r[i] = w.values[s + 1][i] -
               apply_activation(act, w.weights[s][i]) * w.values[s][pre.up_index(s, i)];
      }
      w.u.push_back(pre.disc_inv(s) * r);
      w.resid.push_back(std::move(r));
    }
    return w;
  }

  void to_state(const MultiFidelityPrecompute& pre, MultiFidelityState& state) const {
    const int L = pre.n_steps();
    state.weights = weights;
    state.values_latent.clear();
    for (int l = 0; l < L; ++l) {
      const int n_lat = pre.n_latent(l);
      state.values_latent.push_back(n_lat > 0 ? Vector(values[l].tail(n_lat)) : Vector(0));
    }
  }

  void set_residual_entry(const MultiFidelityPrecompute& pre, int step, int i, double value) {
    const double delta = value - resid[step][i];
    if (delta != 0.0) {
      u[step] += delta * pre.disc_inv(step).col(i);
      resid[step][i] = value;
    }
  }
};

void sweep_mf(const MultiFidelityPrecompute& pre, SweepWorkMF& w, Activation act,
              bool freeze_weights, RngStream& rng) {
  const int L = pre.n_steps();
  for (int s = 0; s < L; ++s) {
    const int n = pre.aug_size(s + 1);
    for (int i = 0; i < n; ++i) {
      const int j = pre.up_index(s, i);
      const double e = w.values[s + 1][i];
      // -- latent weight update --
      if (!freeze_weights) {
        const auto [a, b] = detail::loo_conditional(pre.weight_inv(s), w.weights[s], w.s[s], i);
        const auto [m, v] = detail::loo_conditional(pre.disc_inv(s), w.resid[s], w.u[s], i);
        const double fval = w.values[s][j];
        double w_new;
        if (act == Activation::Relu) {
          w_new = detail::weight_mixture(a, b, fval, e, m, v).sample(rng);
        } else {
          const auto [mean, var] = detail::gaussian_product(a, b, fval, e, m, v);
          w_new = rng.normal(mean, var);
        }
        const double delta = w_new - w.weights[s][i];
        if (delta != 0.0) {
          w.s[s] += delta * pre.weight_inv(s).col(i);
          w.weights[s][i] = w_new;
        }
        w.set_residual_entry(pre, s, i, e - apply_activation(act, w_new) * fval);
      }
      // -- latent level value update (skip observed coordinates) --
      if (j >= pre.n_level(s)) {
        double a, b;
        if (s == 0) {
          std::tie(a, b) = detail::loo_conditional(pre.level1_inv(), w.values[0], w.t1, j);
        } else {
          const auto [mp, vp] = detail::loo_conditional(pre.disc_inv(s - 1), w.resid[s - 1],
                                                        w.u[s - 1], j);
          const double rho_prev = apply_activation(act, w.weights[s - 1][j]);
          a = rho_prev * w.values[s - 1][pre.up_index(s - 1, j)] + mp;
          b = vp;
        }
        const double rho = apply_activation(act, w.weights[s][i]);
        double f_new;
        if (rho == 0.0) {
          f_new = rng.normal(a, b);
        } else {
          const auto [m, v] = detail::loo_conditional(pre.disc_inv(s), w.resid[s], w.u[s], i);
          const auto [mean, var] = detail::gaussian_product(a, b, rho, e, m, v);
          f_new = rng.normal(mean, var);
        }
        const double delta = f_new - w.values[s][j];
        if (delta != 0.0) {
          if (s == 0) {
            w.t1 += delta * pre.level1_inv().col(j);
          } else {
            const double rho_prev = apply_activation(act, w.weights[s - 1][j]);
            w.set_residual_entry(pre, s - 1, j,
                                 f_new - rho_prev * w.values[s - 1][pre.up_index(s - 1, j)]);
          }
          w.values[s][j] = f_new;
        }
        w.set_residual_entry(pre, s, i, e - rho * f_new);
      }
    }
  }
}

}  // namespace

MixtureTruncNormal full_conditional_weight_mf(const MultiFidelityPrecompute& pre,
                                              const MultiFidelityState& state, int i, int l) {
  if (l < 0 || l >= pre.n_steps() || i < 0 || i >= pre.aug_size(l + 1)) {
    throw input_error("full_conditional_weight_mf: index out of range");
  }
  SweepWorkMF w = SweepWorkMF::from_state(pre, state, Activation::Relu);
  const auto [a, b] = detail::loo_conditional(pre.weight_inv(l), w.weights[l], w.s[l], i);
  const auto [m, v] = detail::loo_conditional(pre.disc_inv(l), w.resid[l], w.u[l], i);
  const double e = w.values[l + 1][i];
  const double fval = w.values[l][pre.up_index(l, i)];
  return detail::weight_mixture(a, b, fval, e, m, v);
}

std::pair<double, double> full_conditional_value_mf(const MultiFidelityPrecompute& pre,
                                                    const MultiFidelityState& state, int i, int l,
                                                    Activation activation) {
  if (l < 0 || l >= pre.n_steps() || i < 0 || i >= pre.aug_size(l + 1)) {
    throw input_error("full_conditional_value_mf: index out of range");
  }
  const int j = pre.up_index(l, i);
  if (j < pre.n_level(l)) {
    throw input_error("full_conditional_value_mf: value observed at this design point");
  }
  SweepWorkMF w = SweepWorkMF::from_state(pre, state, activation);
  double a, b;
  if (l == 0) {
    std::tie(a, b) = detail::loo_conditional(pre.level1_inv(), w.values[0], w.t1, j);
  } else {
    const auto [mp, vp] = detail::loo_conditional(pre.disc_inv(l - 1), w.resid[l - 1], w.u[l - 1], j);
    const double rho_prev = apply_activation(activation, w.weights[l - 1][j]);
    a = rho_prev * w.values[l - 1][pre.up_index(l - 1, j)] + mp;
    b = vp;
  }
  const double rho = apply_activation(activation, w.weights[l][i]);
  if (rho == 0.0) return {a, b};
  const auto [m, v] = detail::loo_conditional(pre.disc_inv(l), w.resid[l], w.u[l], i);
  const double e = w.values[l + 1][i];
  return detail::gaussian_product(a, b, rho, e, m, v);
}

MultiFidelityState initial_state_mf(const MultiFidelityPrecompute& pre) {
  const auto& data = pre.data();
  const int L = pre.n_steps();
  MultiFidelityState state;
  for (int s = 0; s < L; ++s) {
    state.weights.push_back(Vector::Ones(pre.aug_size(s + 1)));
    const int n_lat = pre.n_latent(s);
    if (n_lat == 0) {
      state.values_latent.push_back(Vector(0));
      continue;
    }
    const KernelSpec& spec = (s == 0) ? pre.hyper().f_kernels[0] : pre.hyper().d_kernels[s - 1];
    const auto post = gp_fit(data.levels[s].inputs, data.levels[s].outputs, spec);
    Vector mean(n_lat);
    for (int k = 0; k < n_lat; ++k) {
      mean[k] = post.predict(pre.aug(s).row(pre.n_level(s) + k)).first;
    }
    state.values_latent.push_back(std::move(mean));
  }
  return state;
}

void gibbs_sweep_mf(const MultiFidelityPrecompute& pre, MultiFidelityState& state,
                    Activation activation, bool freeze_weights, RngStream& rng) {
  SweepWorkMF w = SweepWorkMF::from_state(pre, state, activation);
  sweep_mf(pre, w, activation, freeze_weights, rng);
  w.to_state(pre, state);
}

MultiFidelityChain gibbs_sample_mf(const MultiFidelityPrecompute& pre, const GibbsConfig& config) {
  config.validate();
  const int L = pre.n_steps();
  const int kept = config.iterations - config.burn_in;

  MultiFidelityChain chain;
  chain.activation = config.activation;
  chain.n_kept = kept;
  for (int s = 0; s < L; ++s) {
    chain.weights.emplace_back(kept, pre.aug_size(s + 1));
    chain.values_latent.emplace_back(kept, pre.n_latent(s));
  }

  MultiFidelityState state = initial_state_mf(pre);
  SweepWorkMF w = SweepWorkMF::from_state(pre, state, config.activation);
  RngStream rng = RngStream(config.seed).child(streams::kGibbs);

  for (int b = 0; b < config.iterations; ++b) {
    sweep_mf(pre, w, config.activation, config.freeze_weights, rng);
    for (int s = 0; s < L; ++s) {
      if (!w.weights[s].allFinite() || !w.values[s].allFinite()) {
        throw numeric_error("gibbs_sample_mf: non-finite state at iteration " +
                            std::to_string(b + 1));
      }
    }
    if (b >= config.burn_in) {
      const int row = b - config.burn_in;
      for (int s = 0; s < L; ++s) {
        chain.weights[s].row(row) = w.weights[s].transpose();
        const int n_lat = pre.n_latent(s);
        if (n_lat > 0) chain.values_latent[s].row(row) = w.values[s].tail(n_lat).transpose();
      }
    }
  }
  return chain;
}

MultiFidelityChain gibbs_sample_mf(const MultiFidelityData& data, const HyperParams& hp,
                                   const GibbsConfig& config) {
  MultiFidelityPrecompute pre(data, hp);
  return gibbs_sample_mf(pre, config);
}

PredictiveSamples predict_mf_generic(const MultiFidelityPrecompute& pre,
                                     const MultiFidelityChain& chain, const Design& X_test,
                                     std::uint64_t seed) {
  const auto& data = pre.data();
  const int L = pre.n_steps();
  const int kept = chain.kept();
  const int n_test = static_cast<int>(X_test.rows());
  const Activation act = chain.activation;
  if (kept < 1) throw input_error("predict_mf: empty chain");
  if (X_test.cols() != data.dim()) throw input_error("predict_mf: test dimension mismatch");

  PredictiveSamples out;
  out.draws.resize(n_test, kept);
  RngStream base(seed);

  for (int p = 0; p < n_test; ++p) {
    RngStream rng = base.child(streams::kPredictBase + static_cast<std::uint64_t>(p));
    const Vector x = X_test.row(p).transpose();

    const Vector k1 = kernel_vector(pre.hyper().f_kernels[0], pre.aug(0), x);
    const Vector alpha1 = pre.level1_factor().solve(k1);
    const double var1 = std::max(0.0, pre.hyper().f_kernels[0].variance - k1.dot(alpha1));

    std::vector<Vector> alpha_w(L), alpha_d(L);
    std::vector<double> var_w(L), var_d(L);
    for (int s = 0; s < L; ++s) {
      const Vector kw = kernel_vector(pre.hyper().w_kernels[s], pre.aug(s + 1), x);
      alpha_w[s] = pre.weight_factor(s).solve(kw);
      var_w[s] = std::max(0.0, pre.hyper().w_kernels[s].variance - kw.dot(alpha_w[s]));
      const Vector kd = kernel_vector(pre.hyper().d_kernels[s], pre.aug(s + 1), x);
      alpha_d[s] = pre.disc_factor(s).solve(kd);
      var_d[s] = std::max(0.0, pre.hyper().d_kernels[s].variance - kd.dot(alpha_d[s]));
    }

    for (int b = 0; b < kept; ++b) {
      MultiFidelityState st;
      if (L > 0) st = chain.state_at(b);
      std::vector<Vector> vals;
      for (int l = 0; l <= L; ++l) vals.push_back(pre.level_values(l, st));

      double f_cur = rng.normal(alpha1.dot(vals[0]), var1);
      for (int s = 0; s < L; ++s) {
        const int n = pre.aug_size(s + 1);
        Vector r(n);
        for (int i = 0; i < n; ++i) {
          r[i] = vals[s + 1][i] -
                 apply_activation(act, st.weights[s][i]) * vals[s][pre.up_index(s, i)];
        }
        const double w_draw = rng.normal(alpha_w[s].dot(st.weights[s]), var_w[s]);
        const double d_draw = rng.normal(alpha_d[s].dot(r), var_d[s]);
        f_cur = apply_activation(act, w_draw) * f_cur + d_draw;
      }
      out.draws(p, b) = f_cur;
    }
  }
  out.summarize();
  return out;
}

PredictiveSamples predict_mf_nested(const MultiFidelityPrecompute& pre,
                                    const MultiFidelityChain& chain, const Design& X_test,
                                    std::uint64_t seed) {
  const auto& data = pre.data();
  if (!data.nested) throw input_error("predict_mf_nested: data is not flagged nested");
  const int L = pre.n_steps();
  const int kept = chain.kept();
  const int n_test = static_cast<int>(X_test.rows());
  const Activation act = chain.activation;
  if (kept < 1) throw input_error("predict_mf: empty chain");
  if (X_test.cols() != data.dim()) throw input_error("predict_mf: test dimension mismatch");

  // Per-level conditioning against each level's own design. With nested
  // designs aug(l) equals the level design, so the pre-computed factors are
  // exactly the per-level matrices (never larger than max_l n_l).
  PredictiveSamples out;
  out.draws.resize(n_test, kept);
  RngStream base(seed);

  for (int p = 0; p < n_test; ++p) {
    RngStream rng = base.child(streams::kPredictBase + static_cast<std::uint64_t>(p));
    const Vector x = X_test.row(p).transpose();

    // Level recursion vectors: level 0 uses the level-1 kernel on X_1;
    // level s >= 1 uses the step-(s-1) discrepancy kernel on X_{s+1}.
    std::vector<Vector> alpha(L + 1);
    std::vector<double> vcond(L + 1);
    {
      const Vector k1 = kernel_vector(pre.hyper().f_kernels[0], data.levels[0].inputs, x);
      alpha[0] = pre.level1_factor().solve(k1);
      vcond[0] = std::max(0.0, pre.hyper().f_kernels[0].variance - k1.dot(alpha[0]));
    }
    for (int l = 1; l <= L; ++l) {
      const Vector kd = kernel_vector(pre.hyper().d_kernels[l - 1], data.levels[l].inputs, x);
      alpha[l] = pre.disc_factor(l - 1).solve(kd);
      vcond[l] = std::max(0.0, pre.hyper().d_kernels[l - 1].variance - kd.dot(alpha[l]));
    }

    std::vector<Vector> alpha_w(L);
    std::vector<double> var_w(L);
    for (int s = 0; s < L; ++s) {
      const Vector kw = kernel_vector(pre.hyper().w_kernels[s], pre.aug(s + 1), x);
      alpha_w[s] = pre.weight_factor(s).solve(kw);
      var_w[s] = std::max(0.0, pre.hyper().w_kernels[s].variance - kw.dot(alpha_w[s]));
    }

    const double mu1 = alpha[0].dot(data.levels[0].outputs);
    for (int b = 0; b < kept; ++b) {
      double mu = mu1;
      double s2 = vcond[0];
      for (int s = 0; s < L; ++s) {
        const Vector w_row = chain.weights[s].row(b).transpose();
        const int n_next = static_cast<int>(data.levels[s + 1].inputs.rows());
        Vector z(n_next);
        for (int i = 0; i < n_next; ++i) {
          // Nested layout: point i of level s+2's design sits at index i of
          // aug(s+1) and up_index maps it into level s+1's design.
          z[i] = data.levels[s + 1].outputs[i] -
                 apply_activation(act, w_row[i]) *
                     data.levels[s].outputs[pre.up_index(s, i)];
        }
        const double w_draw = rng.normal(alpha_w[s].dot(w_row), var_w[s]);
        const double rho = apply_activation(act, w_draw);
        mu = rho * mu + alpha[s + 1].dot(z);
        s2 = rho * rho * s2 + vcond[s + 1];
      }
      out.draws(p, b) = rng.normal(mu, s2);
    }
  }
  out.summarize();
  return out;
}

double nested_likelihood(const MultiFidelityData& data, const MultiFidelityState& theta_hat,
                         const HyperParams& hp, Activation activation) {
  data.validate();
  if (!MultiFidelityData::detect_nested(data.levels)) {
    throw input_error("nested_likelihood: level designs are not nested");
  }
  const int L = data.n_levels() - 1;
  double ll = 0.0;
  {
    const SpdFactor f = SpdFactor::factorize(kernel_matrix(hp.f_kernels[0], data.levels[0].inputs));
    ll += f.gaussian_log_density(data.levels[0].outputs);
  }
  for (int s = 0; s < L; ++s) {
    const Design& Xn = data.levels[s + 1].inputs;
    const int n = static_cast<int>(Xn.rows());
    Vector z(n);
    for (int i = 0; i < n; ++i) {
      const int j = find_point(data.levels[s].inputs, Xn.row(i));
      if (j < 0) throw input_error("nested_likelihood: design point missing from lower level");
      z[i] = data.levels[s + 1].outputs[i] -
             apply_activation(activation, theta_hat.weights[s][i]) * data.levels[s].outputs[j];
    }
    const SpdFactor f = SpdFactor::factorize(kernel_matrix(hp.d_kernels[s], Xn));
    ll += f.gaussian_log_density(z);
  }
  return ll;
}

Matrix posterior_mean_transfer_weights_mf(const MultiFidelityPrecompute& pre,
                                          const MultiFidelityChain& chain, const Design& X_test,
                                          std::uint64_t seed) {
  const int L = pre.n_steps();
  const int kept = chain.kept();
  const int n_test = static_cast<int>(X_test.rows());
  const Activation act = chain.activation;

  Matrix rho(n_test, L);
  RngStream base(seed);
  for (int p = 0; p < n_test; ++p) {
    RngStream rng = base.child(streams::kPredictBase * 2 + static_cast<std::uint64_t>(p));
    const Vector x = X_test.row(p).transpose();
    for (int s = 0; s < L; ++s) {
      const Vector kw = kernel_vector(pre.hyper().w_kernels[s], pre.aug(s + 1), x);
      const Vector beta = pre.weight_factor(s).solve(kw);
      const double var_w = std::max(0.0, pre.hyper().w_kernels[s].variance - kw.dot(beta));
      double acc = 0.0;
      for (int b = 0; b < kept; ++b) {
        acc += apply_activation(act, rng.normal(beta.dot(chain.weights[s].row(b).transpose()), var_w));
      }
      rho(p, s) = acc / kept;
    }
  }
  return rho;
}

}  // namespace lolgp
