#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lolgp/common.hpp"
#include "lolgp/rng.hpp"

namespace lolgp {

enum class DesignKind { Equispaced, LatinHypercube, NestedHierarchy };

/// Design request: one size per system; `nested-hierarchy` requires
/// non-increasing sizes and yields a subset chain. Points are produced on the
/// unit box; callers rescale with the bounds they carry.
struct DesignSpec {
  DesignKind kind = DesignKind::LatinHypercube;
  std::vector<int> sizes;
  int dim = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One design per system, bit-identical for identical (kind, sizes, dim,
/// seed).
std::vector<Design> make_design(const DesignSpec& spec);

/// n points on [0,1], endpoints included (midpoint for n = 1).
Design equispaced_design(int n);

/// n points at stratum midpoints offset grid: (k + 0.5)/n. Used for source
/// designs that must avoid sharing points with an endpoint-included target
/// grid.
Design midpoint_design(int n);

/// Latin hypercube on the unit box: one point per axis stratum per dimension,
/// uniform within strata.
Design latin_hypercube(int n, int dim, RngStream& rng);

/// Nested chain of 1-d equispaced designs: level k+1 picks evenly strided
/// indices of level k.
std::vector<Design> nested_equispaced(const std::vector<int>& sizes);

/// Nested chain of designs by random subsetting of a Latin hypercube, with a
/// swap-based stratification repair per level. Guarantees the subset chain;
/// stratification of inner levels is best-effort.
std::vector<Design> nested_latin_hypercube(const std::vector<int>& sizes, int dim, RngStream& rng);

/// Map unit-box points into [lo, hi].
Design rescale_to_box(const Design& unit, const Vector& lo, const Vector& hi);
/// Inverse map.
Design rescale_to_unit(const Design& original, const Vector& lo, const Vector& hi);

DesignKind design_kind_from_string(const std::string& s);

}  // namespace lolgp
