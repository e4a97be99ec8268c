#pragma once

#include <functional>
#include <vector>

#include "subchain/types.hpp"

namespace subchain {

// Derivative of a map at a point, exposed as matrix-free apply / adjoint on
// flat coordinate vectors (columns of each parameter matrix stacked in
// declaration order).
struct LinearOperator {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::function<std::vector<double>(const std::vector<double>&)> apply;
  std::function<std::vector<double>(const std::vector<double>&)> apply_adjoint;
};

// Column-by-column materialization. Refused above 10^6 entries; everything in
// scope here is far smaller.
DenseMatrix materialize(const LinearOperator& op);

}  // namespace subchain
