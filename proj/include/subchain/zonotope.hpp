#pragma once

#include <vector>

#include "subchain/losses.hpp"
#include "subchain/types.hpp"

namespace subchain {

// Outer subdifferential estimates are zonotopes: center + generators with an
// interval weight each, {c + sum_k s_k g_k : s_k in [lo_k, hi_k]}. Intervals
// carry the one-sided-slope ranges directly, so they are not symmetric.
struct Generator {
  std::vector<double> vector;
  Interval range{0.0, 0.0};
};

struct SubgradientZonotope {
  std::vector<double> center;
  std::vector<Generator> generators;

  std::size_t dim() const { return center.size(); }
  void validate() const;

  // h(v) = <c,v> + sum_k max(lo_k <g_k,v>, hi_k <g_k,v>)
  double support(const std::vector<double>& v) const;
};

// Distance from a point to the zonotope via projected gradient on the box of
// interval weights: fixed step 1/(largest squared singular value of the
// generator matrix), at most 10^4 iterations, stop when the squared distance
// decreases by less than 1e-18.
struct BoxFitResult {
  std::vector<double> weights;
  double residual = 0.0;  // Euclidean distance at the returned weights
  std::size_t iterations = 0;
};

BoxFitResult nearest_point(const SubgradientZonotope& z,
                           const std::vector<double>& target);

struct ZeroMembership {
  bool contains = false;
  double min_norm = 0.0;
  std::vector<double> witness;  // interval weights realizing min_norm
};

// 0 in the zonotope iff the best squared distance is <= 1e-16.
ZeroMembership contains_zero(const SubgradientZonotope& z);

}  // namespace subchain
