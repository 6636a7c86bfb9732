#include "lolgp/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lolgp {

void DesignSpec::validate() const {
  if (sizes.empty()) throw input_error("design needs at least one system size");
  for (int n : sizes) {
    if (n < 1) throw input_error("design sizes must be >= 1");
  }
  if (dim < 1) throw input_error("design dimension must be >= 1");
  if (kind == DesignKind::NestedHierarchy) {
    for (size_t k = 0; k + 1 < sizes.size(); ++k) {
      if (sizes[k + 1] > sizes[k]) {
        throw input_error("nested-hierarchy sizes must be non-increasing");
      }
    }
  }
  if (kind == DesignKind::Equispaced && dim != 1) {
    throw input_error("equispaced designs are one-dimensional");
  }
}

Design equispaced_design(int n) {
  Design X(n, 1);
  if (n == 1) {
    X(0, 0) = 0.5;
    return X;
  }
  for (int i = 0; i < n; ++i) X(i, 0) = static_cast<double>(i) / (n - 1);
  return X;
}

Design midpoint_design(int n) {
  Design X(n, 1);
  for (int i = 0; i < n; ++i) X(i, 0) = (i + 0.5) / n;
  return X;
}

Design latin_hypercube(int n, int dim, RngStream& rng) {
  Design X(n, dim);
  std::vector<int> perm(n);
  for (int j = 0; j < dim; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const int k = static_cast<int>(rng.uniform() * (i + 1));
      std::swap(perm[i], perm[std::min(k, i)]);
    }
    for (int i = 0; i < n; ++i) X(i, j) = (perm[i] + rng.uniform()) / n;
  }
  return X;
}

std::vector<Design> nested_equispaced(const std::vector<int>& sizes) {
  std::vector<Design> out;
  if (sizes.empty()) return out;
  out.push_back(equispaced_design(sizes[0]));
  for (size_t k = 1; k < sizes.size(); ++k) {
    const Design& prev = out.back();
    const int np = static_cast<int>(prev.rows());
    const int n = sizes[k];
    if (n > np) throw input_error("nested sizes must be non-increasing");
    Design X(n, 1);
    for (int i = 0; i < n; ++i) {
      const int idx =
          (n == 1) ? (np - 1) / 2
                   : static_cast<int>(std::lround(static_cast<double>(i) * (np - 1) / (n - 1)));
      X.row(i) = prev.row(idx);
    }
    out.push_back(std::move(X));
  }
  return out;
}

namespace {

// Count how far a subset is from one-point-per-stratum coverage at its own
// granularity.
int stratification_deficit(const Design& X, const std::vector<int>& subset) {
  const int n = static_cast<int>(subset.size());
  const int d = static_cast<int>(X.cols());
  int deficit = 0;
  std::vector<int> count(n);
  for (int j = 0; j < d; ++j) {
    std::fill(count.begin(), count.end(), 0);
    for (int idx : subset) {
      int s = static_cast<int>(X(idx, j) * n);
      s = std::clamp(s, 0, n - 1);
      ++count[s];
    }
    for (int s = 0; s < n; ++s) deficit += std::abs(count[s] - 1);
  }
  return deficit;
}

}  // namespace

std::vector<Design> nested_latin_hypercube(const std::vector<int>& sizes, int dim,
                                           RngStream& rng) {
  std::vector<Design> out;
  if (sizes.empty()) return out;
  out.push_back(latin_hypercube(sizes[0], dim, rng));

  std::vector<int> current(sizes[0]);
  std::iota(current.begin(), current.end(), 0);
  const Design& top = out.front();

  for (size_t k = 1; k < sizes.size(); ++k) {
    const int n = sizes[k];
    if (n > static_cast<int>(current.size())) {
      throw input_error("nested sizes must be non-increasing");
    }
    // Random subset of the previous level, then swap repair towards balanced
    // stratum coverage at the subset's granularity.
    std::vector<int> pool = current;
    for (int i = static_cast<int>(pool.size()) - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform() * (i + 1));
      std::swap(pool[i], pool[std::min(j, i)]);
    }
    std::vector<int> subset(pool.begin(), pool.begin() + n);
    std::vector<int> rest(pool.begin() + n, pool.end());

    int deficit = stratification_deficit(top, subset);
    for (int pass = 0; pass < 50 && deficit > 0; ++pass) {
      bool improved = false;
      for (size_t a = 0; a < subset.size() && deficit > 0; ++a) {
        for (size_t b = 0; b < rest.size(); ++b) {
          std::swap(subset[a], rest[b]);
          const int d2 = stratification_deficit(top, subset);
          if (d2 < deficit) {
            deficit = d2;
            improved = true;
            break;
          }
          std::swap(subset[a], rest[b]);
        }
      }
      if (!improved) break;
    }
    std::sort(subset.begin(), subset.end());
    Design X(n, dim);
    for (int i = 0; i < n; ++i) X.row(i) = top.row(subset[i]);
    out.push_back(std::move(X));
    current = subset;
  }
  return out;
}

std::vector<Design> make_design(const DesignSpec& spec) {
  spec.validate();
  RngStream rng = RngStream(spec.seed).child(streams::kDesign);
  std::vector<Design> out;
  switch (spec.kind) {
    case DesignKind::Equispaced:
      for (int n : spec.sizes) out.push_back(equispaced_design(n));
      break;
    case DesignKind::LatinHypercube: {
      for (size_t k = 0; k < spec.sizes.size(); ++k) {
        RngStream sys = rng.child(100 + k);
        out.push_back(latin_hypercube(spec.sizes[k], spec.dim, sys));
      }
      break;
    }
    case DesignKind::NestedHierarchy:
      out = nested_latin_hypercube(spec.sizes, spec.dim, rng);
      break;
  }
  return out;
}

Design rescale_to_box(const Design& unit, const Vector& lo, const Vector& hi) {
  Design X = unit;
  for (int j = 0; j < X.cols(); ++j) {
    X.col(j) = (X.col(j).array() * (hi[j] - lo[j]) + lo[j]).matrix();
  }
  return X;
}

Design rescale_to_unit(const Design& original, const Vector& lo, const Vector& hi) {
  Design X = original;
  for (int j = 0; j < X.cols(); ++j) {
    const double span = hi[j] - lo[j];
    if (!(span > 0.0)) throw input_error("degenerate bounds for rescaling");
    X.col(j) = ((X.col(j).array() - lo[j]) / span).matrix();
  }
  return X;
}

DesignKind design_kind_from_string(const std::string& s) {
  if (s == "equispaced") return DesignKind::Equispaced;
  if (s == "latin-hypercube") return DesignKind::LatinHypercube;
  if (s == "nested-hierarchy") return DesignKind::NestedHierarchy;
  throw input_error("unknown design kind: " + s);
}

}  // namespace lolgp
