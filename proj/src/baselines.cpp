#include "lolgp/baselines.hpp"

#include <cmath>
#include <limits>

#include "lolgp/lbfgs.hpp"
#include "lolgp/linalg.hpp"
#include "lolgp/rng.hpp"

namespace lolgp {

namespace {

// Best-of-restarts minimization over a packed parameter vector with
// central-difference gradients. Restart 0 starts at x0; later restarts
// perturb it.
Vector ml_restarts(const std::function<double(const Vector&)>& nll, const Vector& x0, int restarts,
                   std::uint64_t seed) {
  auto objective = [&](const Vector& x, Vector& grad) -> double {
    const double f = nll(x);
    if (!std::isfinite(f)) {
      grad.setZero(x.size());
      return f;
    }
    const double h = 1e-5;
    grad.resize(x.size());
    Vector xp = x;
    for (int j = 0; j < x.size(); ++j) {
      xp[j] = x[j] + h;
      const double fp = nll(xp);
      xp[j] = x[j] - h;
      const double fm = nll(xp);
      xp[j] = x[j];
      grad[j] = (fp - fm) / (2.0 * h);
      if (!std::isfinite(grad[j])) grad[j] = 0.0;
    }
    return f;
  };

  double best = nll(x0);
  Vector best_x = x0;
  RngStream rng = RngStream(seed).child(streams::kOptimizer);
  for (int r = 0; r < restarts; ++r) {
    Vector start = x0;
    if (r > 0) {
      for (int j = 0; j < x0.size(); ++j) start[j] = x0[j] + rng.normal();
    }
    const LbfgsResult res = lbfgs_minimize(objective, start);
    if (std::isfinite(res.value) && res.value < best) {
      best = res.value;
      best_x = res.x;
    }
  }
  return best_x;
}

int total_rows(const std::vector<Design>& designs) {
  int n = 0;
  for (const auto& X : designs) n += static_cast<int>(X.rows());
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Target-only GP

GpSurrogate GpSurrogate::fit(const Design& X, const Vector& f, const MlFitOptions& opts) {
  if (X.rows() < 2) throw input_error("GpSurrogate: need at least two observations");
  GpSurrogate model;
  model.std_ = Standardizer::from(f);
  const Vector fs = model.std_.forward(f);

  KernelSpec work = KernelSpec::isotropic(1.0, 0.5, static_cast<int>(X.cols()), opts.nugget);
  Vector x0(1 + work.dim());
  x0[0] = 0.0;
  for (int j = 0; j < work.dim(); ++j) x0[1 + j] = std::log(0.5);

  auto nll = [&](const Vector& x) -> double {
    work.variance = std::exp(x[0]);
    for (int j = 0; j < work.dim(); ++j) work.lengthscales[j] = std::exp(x[1 + j]);
    try {
      const SpdFactor fac = SpdFactor::factorize(kernel_matrix(work, X));
      return -fac.gaussian_log_density(fs);
    } catch (const numeric_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const Vector best = ml_restarts(nll, x0, opts.restarts, opts.seed);
  work.variance = std::exp(best[0]);
  for (int j = 0; j < work.dim(); ++j) work.lengthscales[j] = std::exp(best[1 + j]);
  model.kernel_ = work;
  model.post_ = gp_fit(X, fs, work);
  return model;
}

std::pair<double, double> GpSurrogate::predict(const Vector& x) const {
  const auto [m, v] = post_.predict(x);
  return {std_.inverse(m), v * std_.sd * std_.sd};
}

// ---------------------------------------------------------------------------
// Constant-weight transfer model

namespace {

// Joint covariance of the stacked system outputs.
//
// Multi-source: independent source GPs, target = sum_l rho_l f_l + delta.
// Multi-fidelity: f_{l+1} = rho_l f_l + delta_l, giving
//   cov(f_a(x), f_b(x')) = sum_{j <= min(a,b)} P(j,a) P(j,b) k_j(x, x'),
// where P(j,a) is the product of transfer scalars between levels j and a and
// k_0 is the level-1 kernel, k_j (j >= 1) the step-j discrepancy kernel.
struct KoCov {
  bool multi_fidelity;
  const std::vector<Design>* designs;  // per system, target last
  const HyperParams* hp;
  const Vector* rho;

  int n_systems() const { return static_cast<int>(designs->size()); }

  const KernelSpec& layer_kernel(int j) const {
    if (multi_fidelity) return (j == 0) ? hp->f_kernels[0] : hp->d_kernels[j - 1];
    const int L = static_cast<int>(hp->f_kernels.size());
    return (j < L) ? hp->f_kernels[j] : hp->d_kernels[0];
  }

  double path(int j, int a) const {
    double p = 1.0;
    for (int i = j; i < a; ++i) p *= (*rho)[i];
    return p;
  }

  Matrix block(int a, int b, const Design& Xa, const Design& Xb) const {
    if (multi_fidelity) {
      Matrix C = Matrix::Zero(Xa.rows(), Xb.rows());
      const int m = std::min(a, b);
      for (int j = 0; j <= m; ++j) {
        const double w = path(j, a) * path(j, b);
        if (w != 0.0) C += w * kernel_cross(layer_kernel(j), Xa, Xb);
      }
      return C;
    }
    const int T = n_systems() - 1;
    if (a == T && b == T) {
      Matrix C = kernel_cross(hp->d_kernels[0], Xa, Xb);
      for (int l = 0; l < T; ++l) {
        C += (*rho)[l] * (*rho)[l] * kernel_cross(hp->f_kernels[l], Xa, Xb);
      }
      return C;
    }
    if (a == T) return (*rho)[b] * kernel_cross(hp->f_kernels[b], Xa, Xb);
    if (b == T) return (*rho)[a] * kernel_cross(hp->f_kernels[a], Xa, Xb);
    if (a == b) return kernel_cross(hp->f_kernels[a], Xa, Xb);
    return Matrix::Zero(Xa.rows(), Xb.rows());
  }

  double target_prior_var() const {
    const int T = n_systems() - 1;
    if (multi_fidelity) {
      double v = 0.0;
      for (int j = 0; j <= T; ++j) {
        const double w = path(j, T);
        v += w * w * layer_kernel(j).variance;
      }
      return v;
    }
    double v = hp->d_kernels[0].variance;
    for (size_t l = 0; l < hp->f_kernels.size(); ++l) {
      v += (*rho)[l] * (*rho)[l] * hp->f_kernels[l].variance;
    }
    return v;
  }

  Matrix full(double nugget) const {
    Matrix C(total_rows(*designs), total_rows(*designs));
    int ro = 0;
    for (int a = 0; a < n_systems(); ++a) {
      const int na = static_cast<int>((*designs)[a].rows());
      int co = 0;
      for (int b = 0; b < n_systems(); ++b) {
        const int nb = static_cast<int>((*designs)[b].rows());
        C.block(ro, co, na, nb) = block(a, b, (*designs)[a], (*designs)[b]);
        co += nb;
      }
      ro += na;
    }
    C.diagonal().array() += nugget;
    return C;
  }

  Vector cross_target(const Vector& x) const {
    const int T = n_systems() - 1;
    Design Xx(1, x.size());
    Xx.row(0) = x.transpose();
    Vector out(total_rows(*designs));
    int pos = 0;
    for (int b = 0; b < n_systems(); ++b) {
      const Matrix blk = block(T, b, Xx, (*designs)[b]);
      out.segment(pos, blk.cols()) = blk.row(0).transpose();
      pos += static_cast<int>(blk.cols());
    }
    return out;
  }
};

}  // namespace

void KoSurrogate::build(bool standardize_outputs) {
  designs_.clear();
  std::vector<const SystemData*> systems;
  if (multi_fidelity_) {
    for (const auto& s : mf_.levels) systems.push_back(&s);
  } else {
    for (const auto& s : ms_.sources) systems.push_back(&s);
    systems.push_back(&ms_.target);
  }
  if (standardize_outputs) std_ = Standardizer::from(systems.back()->outputs);
  for (const auto* s : systems) designs_.push_back(s->inputs);
  stacked_.resize(total_rows(designs_));
  int pos = 0;
  for (const auto* s : systems) {
    stacked_.segment(pos, s->outputs.size()) = std_.forward(s->outputs);
    pos += static_cast<int>(s->outputs.size());
  }
  const KoCov cov{multi_fidelity_, &designs_, &hp_, &rho_};
  factor_ = SpdFactor::factorize(cov.full(kDefaultNugget));
  alpha_ = factor_.solve(stacked_);
}

std::pair<double, double> KoSurrogate::predict(const Vector& x) const {
  const KoCov cov{multi_fidelity_, &designs_, &hp_, &rho_};
  const Vector c = cov.cross_target(x);
  const double mean = c.dot(alpha_);
  double var = cov.target_prior_var() - c.dot(factor_.solve(c));
  if (var < 0.0) var = 0.0;
  return {std_.inverse(mean), var * std_.sd * std_.sd};
}

KoSurrogate KoSurrogate::assemble(const MultiSourceData& data, const HyperParams& hp,
                                  const Vector& rho) {
  data.validate();
  KoSurrogate m;
  m.multi_fidelity_ = false;
  m.ms_ = data;
  m.hp_ = hp;
  m.rho_ = rho;
  m.build(false);
  return m;
}

KoSurrogate KoSurrogate::assemble(const MultiFidelityData& data, const HyperParams& hp,
                                  const Vector& rho) {
  data.validate();
  KoSurrogate m;
  m.multi_fidelity_ = true;
  m.mf_ = data;
  m.hp_ = hp;
  m.rho_ = rho;
  m.build(false);
  return m;
}

namespace {

// Shared maximum-likelihood driver. The model arrives with its data, initial
// hyperparameters and transfer scalars set; this optimizes them in place.
void fit_ko_in_place(KoSurrogate& m, bool multi_fidelity, HyperParams& hp, Vector& rho,
                     bool fit_rho, const std::vector<Design>& designs, const Vector& stacked,
                     const MlFitOptions& opts) {
  (void)m;
  const int n_hp = hp.n_params();
  const int n_rho = fit_rho ? static_cast<int>(rho.size()) : 0;
  Vector x0(n_hp + n_rho);
  x0.head(n_hp) = hp.pack_log();
  if (fit_rho) x0.tail(n_rho) = rho;

  auto nll = [&](const Vector& x) -> double {
    hp.unpack_log(x.head(n_hp));
    if (fit_rho) rho = x.tail(n_rho);
    try {
      const KoCov cov{multi_fidelity, &designs, &hp, &rho};
      const SpdFactor f = SpdFactor::factorize(cov.full(kDefaultNugget));
      return -f.gaussian_log_density(stacked);
    } catch (const numeric_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const Vector best = ml_restarts(nll, x0, opts.restarts, opts.seed);
  hp.unpack_log(best.head(n_hp));
  if (fit_rho) rho = best.tail(n_rho);
}

}  // namespace

KoSurrogate KoSurrogate::fit(const MultiSourceData& data, const MlFitOptions& opts) {
  data.validate();
  KoSurrogate m;
  m.multi_fidelity_ = false;
  m.ms_ = data;
  const int L = data.n_sources();
  m.hp_.f_kernels.assign(L, KernelSpec::isotropic(1.0, 0.5, data.dim(), opts.nugget));
  m.hp_.d_kernels.assign(1, KernelSpec::isotropic(1.0, 0.5, data.dim(), opts.nugget));
  m.rho_ = Vector::Ones(L);
  m.std_ = Standardizer::from(data.target.outputs);

  std::vector<Design> designs;
  for (const auto& s : data.sources) designs.push_back(s.inputs);
  designs.push_back(data.target.inputs);
  Vector stacked(total_rows(designs));
  int pos = 0;
  for (const auto& s : data.sources) {
    stacked.segment(pos, s.outputs.size()) = m.std_.forward(s.outputs);
    pos += static_cast<int>(s.outputs.size());
  }
  stacked.tail(data.target.outputs.size()) = m.std_.forward(data.target.outputs);

  fit_ko_in_place(m, false, m.hp_, m.rho_, true, designs, stacked, opts);
  m.build(true);
  return m;
}

KoSurrogate KoSurrogate::fit_fixed_rho(const MultiSourceData& data, const Vector& rho,
                                       const MlFitOptions& opts) {
  data.validate();
  if (rho.size() != data.n_sources()) throw input_error("fit_fixed_rho: wrong rho length");
  KoSurrogate m;
  m.multi_fidelity_ = false;
  m.ms_ = data;
  const int L = data.n_sources();
  m.hp_.f_kernels.assign(L, KernelSpec::isotropic(1.0, 0.5, data.dim(), opts.nugget));
  m.hp_.d_kernels.assign(1, KernelSpec::isotropic(1.0, 0.5, data.dim(), opts.nugget));
  m.rho_ = rho;
  m.std_ = Standardizer::from(data.target.outputs);

  std::vector<Design> designs;
  for (const auto& s : data.sources) designs.push_back(s.inputs);
  designs.push_back(data.target.inputs);
  Vector stacked(total_rows(designs));
  int pos = 0;
  for (const auto& s : data.sources) {
    stacked.segment(pos, s.outputs.size()) = m.std_.forward(s.outputs);
    pos += static_cast<int>(s.outputs.size());
  }
  stacked.tail(data.target.outputs.size()) = m.std_.forward(data.target.outputs);

  fit_ko_in_place(m, false, m.hp_, m.rho_, false, designs, stacked, opts);
  m.build(true);
  return m;
}

KoSurrogate KoSurrogate::fit(const MultiFidelityData& data, const MlFitOptions& opts) {
  data.validate();
  KoSurrogate m;
  m.multi_fidelity_ = true;
  m.mf_ = data;
  const int L = data.n_levels() - 1;
  m.hp_.f_kernels.assign(1, KernelSpec::isotropic(1.0, 0.5, data.dim(), opts.nugget));
  m.hp_.d_kernels.assign(std::max(L, 0), KernelSpec::isotropic(1.0, 0.5, data.dim(), opts.nugget));
  m.rho_ = Vector::Ones(L);
  m.std_ = Standardizer::from(data.target().outputs);

  std::vector<Design> designs;
  for (const auto& s : data.levels) designs.push_back(s.inputs);
  Vector stacked(total_rows(designs));
  int pos = 0;
  for (const auto& s : data.levels) {
    stacked.segment(pos, s.outputs.size()) = m.std_.forward(s.outputs);
    pos += static_cast<int>(s.outputs.size());
  }

  fit_ko_in_place(m, true, m.hp_, m.rho_, true, designs, stacked, opts);
  m.build(true);
  return m;
}

}  // namespace lolgp
