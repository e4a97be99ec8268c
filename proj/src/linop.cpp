#include "subchain/linop.hpp"

namespace subchain {

DenseMatrix materialize(const LinearOperator& op) {
  if (op.in_dim * op.out_dim > 1000000)
    throw DimensionError("materialize: operator larger than 10^6 entries");
  DenseMatrix j(op.out_dim, op.in_dim);
  std::vector<double> e(op.in_dim, 0.0);
  for (std::size_t c = 0; c < op.in_dim; ++c) {
    e[c] = 1.0;
    const std::vector<double> col = op.apply(e);
    for (std::size_t r = 0; r < op.out_dim; ++r) j.at(r, c) = col[r];
    e[c] = 0.0;
  }
  return j;
}

}  // namespace subchain
