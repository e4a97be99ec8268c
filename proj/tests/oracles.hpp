#pragma once

// Independent numerical oracles the tests check library results against.
// Deliberately naive: central differences for derivatives, corner
// enumeration for zonotope supports. If these agree with the analytic code
// paths, both are probably right; they share no implementation.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "subchain/maps.hpp"
#include "subchain/zonotope.hpp"

namespace oracles {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(const std::vector<double>& v) {
  return std::sqrt(dot(v, v));
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// Directional derivative of the flat map via central differences.
inline std::vector<double> central_diff_direction(
    const subchain::MapPoint& shape, const std::vector<double>& w,
    const std::vector<double>& v, double h = 1e-5) {
  std::vector<double> wp = w, wm = w;
  for (std::size_t k = 0; k < w.size(); ++k) {
    wp[k] += h * v[k];
    wm[k] -= h * v[k];
  }
  const std::vector<double> fp =
      subchain::eval_flat(subchain::unflatten_point(shape, wp));
  const std::vector<double> fm =
      subchain::eval_flat(subchain::unflatten_point(shape, wm));
  std::vector<double> out(fp.size());
  for (std::size_t k = 0; k < fp.size(); ++k)
    out[k] = (fp[k] - fm[k]) / (2.0 * h);
  return out;
}

// Coordinate-wise central-difference gradient of a scalar function.
inline std::vector<double> central_diff_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> w, double h = 1e-6) {
  std::vector<double> g(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double saved = w[k];
    w[k] = saved + h;
    const double fp = f(w);
    w[k] = saved - h;
    const double fm = f(w);
    w[k] = saved;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Zonotope support by brute corner enumeration. A linear functional over a
// box attains its maximum at a corner, so max over all 2^g lo/hi choices is
// the exact support. Exponential on purpose; callers keep g small.
inline double corner_support(const subchain::SubgradientZonotope& z,
                             const std::vector<double>& v) {
  const std::size_t g = z.generators.size();
  if (g > 20) throw std::runtime_error("corner_support: too many generators");
  double best = -1e300;
  for (std::size_t mask = 0; mask < (std::size_t{1} << g); ++mask) {
    double s = dot(z.center, v);
    for (std::size_t k = 0; k < g; ++k) {
      const double coeff =
          (mask >> k) & 1 ? z.generators[k].range.hi : z.generators[k].range.lo;
      s += coeff * dot(z.generators[k].vector, v);
    }
    best = std::max(best, s);
  }
  return best;
}

}  // namespace oracles
