#include "subchain/zonotope.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace subchain {

void SubgradientZonotope::validate() const {
  for (double v : center)
    if (!std::isfinite(v)) throw ShapeError("zonotope: non-finite center");
  for (const Generator& g : generators) {
    if (g.vector.size() != center.size())
      throw ShapeError("zonotope: generator dimension mismatch");
    if (!(g.range.lo <= g.range.hi))
      throw ShapeError("zonotope: empty generator interval");
    for (double v : g.vector)
      if (!std::isfinite(v)) throw ShapeError("zonotope: non-finite generator");
  }
}

double SubgradientZonotope::support(const std::vector<double>& v) const {
  if (v.size() != dim()) throw ShapeError("support: direction dim mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) h += center[i] * v[i];
  for (const Generator& g : generators) {
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += g.vector[i] * v[i];
    h += std::max(g.range.lo * dot, g.range.hi * dot);
  }
  return h;
}

BoxFitResult nearest_point(const SubgradientZonotope& z,
                           const std::vector<double>& target) {
  if (target.size() != z.dim())
    throw ShapeError("nearest_point: target dim mismatch");
  const std::size_t n = z.dim();
  const std::size_t k = z.generators.size();

  Eigen::VectorXd offset(n);  // center - target
  for (std::size_t i = 0; i < n; ++i) offset[i] = z.center[i] - target[i];

  BoxFitResult out;
  if (k == 0) {
    out.residual = offset.norm();
    return out;
  }

  Eigen::MatrixXd g(n, k);
  Eigen::VectorXd lo(k), hi(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t r = 0; r < n; ++r) g(r, c) = z.generators[c].vector[r];
    lo[c] = z.generators[c].range.lo;
    hi[c] = z.generators[c].range.hi;
  }

  const double sigma = g.jacobiSvd().singularValues()(0);
  const double lip = sigma * sigma;
  auto clamp_box = [&](Eigen::VectorXd& s) {
    for (std::size_t c = 0; c < k; ++c) s[c] = std::clamp(s[c], lo[c], hi[c]);
  };

  Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
  clamp_box(s);

  Eigen::VectorXd r = offset + g * s;
  double sq = r.squaredNorm();
  std::size_t it = 0;
  if (lip > 0.0) {
    const double step = 1.0 / lip;
    for (; it < 10000; ++it) {
      s -= step * (g.transpose() * r);
      clamp_box(s);
      r = offset + g * s;
      const double next = r.squaredNorm();
      if (sq - next < 1e-18) {
        sq = std::min(sq, next);
        ++it;
        break;
      }
      sq = next;
    }
  }

  // Active-set polish (bounded-variable least squares). Projected gradient
  // contracts like (1 - 1/cond)^it and exhausts its cap on correlated
  // generators; from its iterate, alternate exact solves on the free
  // coordinates with KKT-driven re-binding until the box optimum is exact.
  enum : unsigned char { kAtLo, kAtHi, kFree };
  std::vector<unsigned char> bind(k);
  const auto degenerate = [&](std::size_t c) { return !(lo[c] < hi[c]); };
  for (std::size_t c = 0; c < k; ++c) {
    bind[c] = degenerate(c)   ? kAtLo
              : s[c] <= lo[c] ? kAtLo
              : s[c] >= hi[c] ? kAtHi
                              : kFree;
    if (bind[c] == kAtLo) s[c] = lo[c];
    if (bind[c] == kAtHi) s[c] = hi[c];
  }
  const std::size_t outer_cap = 10 * k + 50;
  for (std::size_t outer = 0; outer < outer_cap; ++outer, ++it) {
    // minimize exactly over the free coordinates; a step toward that
    // minimizer never increases the objective, so clip at the first bound
    // crossed and pin the blocker
    for (std::size_t inner = 0; inner <= k; ++inner) {
      std::vector<std::size_t> free_ix;
      for (std::size_t c = 0; c < k; ++c)
        if (bind[c] == kFree) free_ix.push_back(c);
      if (free_ix.empty()) break;
      Eigen::VectorXd rhs = -offset;
      for (std::size_t c = 0; c < k; ++c)
        if (bind[c] != kFree) rhs -= g.col(c) * s[c];
      Eigen::MatrixXd gf(n, free_ix.size());
      for (std::size_t j = 0; j < free_ix.size(); ++j)
        gf.col(j) = g.col(free_ix[j]);
      const Eigen::VectorXd target_f = gf.colPivHouseholderQr().solve(rhs);
      double alpha = 1.0;
      std::size_t block = k;
      unsigned char block_side = kFree;
      for (std::size_t j = 0; j < free_ix.size(); ++j) {
        const std::size_t c = free_ix[j];
        const double cur = s[c], tgt = target_f[j];
        if (tgt < lo[c] && tgt < cur) {
          const double a = (lo[c] - cur) / (tgt - cur);
          if (a < alpha) { alpha = a; block = c; block_side = kAtLo; }
        } else if (tgt > hi[c] && tgt > cur) {
          const double a = (hi[c] - cur) / (tgt - cur);
          if (a < alpha) { alpha = a; block = c; block_side = kAtHi; }
        }
      }
      for (std::size_t j = 0; j < free_ix.size(); ++j)
        s[free_ix[j]] += alpha * (target_f[j] - s[free_ix[j]]);
      if (block == k) break;  // free solve is interior: optimal on this set
      bind[block] = block_side;
      s[block] = block_side == kAtLo ? lo[block] : hi[block];
    }
    clamp_box(s);
    r = offset + g * s;
    // a bound coordinate is freed only when moving inward descends
    const Eigen::VectorXd grad = g.transpose() * r;
    const double tol = 1e-13 * std::max(1.0, sigma) * std::max(1.0, r.norm());
    double worst = tol;
    std::size_t pick = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (degenerate(c) || bind[c] == kFree) continue;
      const double v = bind[c] == kAtLo ? -grad[c] : grad[c];
      if (v > worst) { worst = v; pick = c; }
    }
    if (pick == k) break;
    bind[pick] = kFree;
  }
  sq = (offset + g * s).squaredNorm();

  out.weights.assign(s.data(), s.data() + k);
  out.residual = std::sqrt(sq);
  out.iterations = it;
  return out;
}

ZeroMembership contains_zero(const SubgradientZonotope& z) {
  const BoxFitResult fit = nearest_point(z, std::vector<double>(z.dim(), 0.0));
  ZeroMembership m;
  m.min_norm = fit.residual;
  m.witness = fit.weights;
  m.contains = fit.residual * fit.residual <= 1e-16;
  return m;
}

}  // namespace subchain
