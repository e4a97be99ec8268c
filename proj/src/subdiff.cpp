#include "subchain/subdiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "subchain/rng.hpp"

namespace subchain {

namespace {

bool contrast_shape_ok(const MapPoint& shape) {
  const auto* f = std::get_if<FactorPoint>(&shape);
  return f != nullptr && f->d() == 1 && f->X.cols == 2 && f->Y.cols == 2;
}

// The product-contrast inner arguments z1*z4 and z2*z3 both reduce to this
// monomial for the 1x(2,2) product map; evaluating both through it is what
// keeps the two branches bit-identical.
double contrast_monomial(const std::vector<double>& w) {
  return w[0] * w[1] * w[2] * w[3];
}

}  // namespace

std::size_t CompositeSpec::in_dim() const { return input_dim(shape); }
std::size_t CompositeSpec::out_dim() const { return output_dim(shape); }

void CompositeSpec::validate() const {
  if (product_contrast) {
    if (!contrast_shape_ok(shape))
      throw ShapeError(
          "product-contrast composite requires the 1x(2,2) two-factor map");
    if (!losses.empty())
      throw ShapeError(
          "product-contrast composite carries sigma, not per-output losses");
    return;
  }
  if (losses.size() != out_dim())
    throw ShapeError("composite needs one loss per map output: " +
                     std::to_string(losses.size()) + " losses for " +
                     std::to_string(out_dim()) + " outputs");
}

double composite_value(const CompositeSpec& spec, const std::vector<double>& w) {
  spec.validate();
  if (w.size() != spec.in_dim())
    throw ShapeError("composite_value: flat point length mismatch");
  if (spec.product_contrast) {
    const double m = contrast_monomial(w);
    return spec.sigma.value(m) - spec.sigma.value(m);
  }
  const std::vector<double> z = eval_flat(unflatten_point(spec.shape, w));
  double out = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) out += spec.losses[k].value(z[k]);
  return out;
}

std::vector<double> composite_gradient(const CompositeSpec& spec,
                                       const std::vector<double>& w) {
  spec.validate();
  if (w.size() != spec.in_dim())
    throw ShapeError("composite_gradient: flat point length mismatch");
  if (spec.product_contrast) {
    const double m = contrast_monomial(w);
    const double sp = spec.sigma.derivative(m);
    const double sq = spec.sigma.derivative(m);
    const double diff = sp - sq;  // exactly zero away from the kink
    return {diff * w[1] * w[2] * w[3], diff * w[0] * w[2] * w[3],
            diff * w[0] * w[1] * w[3], diff * w[0] * w[1] * w[2]};
  }
  const MapPoint pt = unflatten_point(spec.shape, w);
  const std::vector<double> z = eval_flat(pt);
  std::vector<double> u(z.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    u[k] = spec.losses[k].derivative(z[k]);
  return jacobian(pt).apply_adjoint(u);
}

double composite_kink_distance(const CompositeSpec& spec,
                               const std::vector<double>& w) {
  spec.validate();
  if (w.size() != spec.in_dim())
    throw ShapeError("composite_kink_distance: flat point length mismatch");
  if (spec.product_contrast)
    return spec.sigma.kink_distance(contrast_monomial(w));
  const std::vector<double> z = eval_flat(unflatten_point(spec.shape, w));
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k)
    dist = std::min(dist, spec.losses[k].kink_distance(z[k]));
  return dist;
}

SubgradientZonotope chainrule_upper(const CompositeSpec& spec,
                                    const std::vector<double>& w) {
  spec.validate();
  if (w.size() != spec.in_dim())
    throw ShapeError("chainrule_upper: flat point length mismatch");
  const MapPoint pt = unflatten_point(spec.shape, w);
  const LinearOperator jac = jacobian(pt);
  const std::vector<double> z = eval_flat(pt);

  SubgradientZonotope zono;
  zono.center.assign(w.size(), 0.0);
  std::vector<double> smooth(z.size(), 0.0);
  bool any_smooth = false;

  if (spec.product_contrast) {
    const double m = contrast_monomial(w);
    const Interval iv = spec.sigma.clarke(m);
    // term +sigma(z1*z4): d/dz = (z4, 0, 0, z1); term -sigma(z2*z3):
    // d/dz = -(0, z3, z2, 0)
    const std::vector<double> cot_p{z[3], 0.0, 0.0, z[0]};
    const std::vector<double> cot_q{0.0, -z[2], -z[1], 0.0};
    if (iv.is_point()) {
      std::vector<double> cot(4);
      for (std::size_t k = 0; k < 4; ++k)
        cot[k] = iv.lo * (cot_p[k] + cot_q[k]);
      zono.center = jac.apply_adjoint(cot);
    } else {
      zono.generators.push_back({jac.apply_adjoint(cot_p), iv});
      zono.generators.push_back({jac.apply_adjoint(cot_q), iv});
    }
    return zono;
  }

  for (std::size_t k = 0; k < z.size(); ++k) {
    const Interval iv = spec.losses[k].clarke(z[k]);
    if (iv.is_point()) {
      smooth[k] = iv.lo;
      any_smooth = any_smooth || iv.lo != 0.0;
    } else {
      std::vector<double> ek(z.size(), 0.0);
      ek[k] = 1.0;
      zono.generators.push_back({jac.apply_adjoint(ek), iv});
    }
  }
  if (any_smooth) zono.center = jac.apply_adjoint(smooth);
  return zono;
}

FMTrainSubdiff fm_train_subdiff(const QualifiedDataset& dataset,
                                const DenseMatrix& p,
                                const std::vector<ScalarLoss>& losses) {
  p.validate("fm_train_subdiff factors");
  if (p.cols != dataset.d0)
    throw ShapeError("fm_train_subdiff: factor columns != dataset d0");
  if (losses.size() != dataset.samples.size())
    throw ShapeError("fm_train_subdiff: one loss per sample required");
  const std::size_t d = p.rows, d0 = dataset.d0;

  FMTrainSubdiff out;
  out.dimension_certified = d + 1 >= 2 * d0;
  out.zonotope.center.assign(d * d0, 0.0);

  for (std::size_t k = 0; k < dataset.samples.size(); ++k) {
    const SparseSample& s = dataset.samples[k];
    const double t = fm_predict(s, p);
    const Interval iv = losses[k].clarke(t);
    if (iv.is_point() && iv.lo == 0.0) continue;

    // gradient of the prediction: column s gets x_s * sum_{j != s} x_j p_j
    std::vector<double> grad(d * d0, 0.0);
    for (std::size_t u = 0; u < s.indices.size(); ++u) {
      const std::size_t col = s.indices[u];
      for (std::size_t v = 0; v < s.indices.size(); ++v) {
        if (v == u) continue;
        const std::size_t other = s.indices[v];
        const double c = s.values[u] * s.values[v];
        for (std::size_t r = 0; r < d; ++r)
          grad[col * d + r] += c * p.at(r, other);
      }
    }
    if (iv.is_point()) {
      for (std::size_t q = 0; q < grad.size(); ++q)
        out.zonotope.center[q] += iv.lo * grad[q];
    } else {
      out.zonotope.generators.push_back({std::move(grad), iv});
    }
  }
  return out;
}

SubgradientZonotope gmf_subdiff(const GMFPoint& pt, const ScalarLoss& activation,
                                const std::vector<ScalarLoss>& pair_losses) {
  pt.validate();
  if (pair_losses.size() != pt.observed.size())
    throw ShapeError("gmf_subdiff: one loss per observed pair required");
  const std::size_t d = pt.h.size();
  const std::size_t n_total = 1 + d + pt.P.size() + pt.Q.size();
  const std::size_t off_h = 1;
  const std::size_t off_p = 1 + d;
  const std::size_t off_q = 1 + d + pt.P.size();

  SubgradientZonotope zono;
  zono.center.assign(n_total, 0.0);

  for (std::size_t e = 0; e < pt.observed.size(); ++e) {
    const auto [i, j] = pt.observed[e];
    double inner = 0.0;
    for (std::size_t r = 0; r < d; ++r)
      inner += pt.h[r] * pt.P.at(r, i) * pt.Q.at(r, j);
    const double act = activation.value(inner);
    const double pij = pair_losses[e].derivative(pt.v * act);

    zono.center[0] += pij * act;  // v-coordinate, always differentiable

    const Interval iv = activation.clarke(inner);
    const double scale = pij * pt.v;
    if (scale == 0.0 || (iv.is_point() && iv.lo == 0.0)) continue;

    std::vector<double> dir(n_total, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      dir[off_h + r] = scale * pt.P.at(r, i) * pt.Q.at(r, j);
      dir[off_p + i * d + r] = scale * pt.h[r] * pt.Q.at(r, j);
      dir[off_q + j * d + r] = scale * pt.h[r] * pt.P.at(r, i);
    }
    if (iv.is_point()) {
      for (std::size_t q = 0; q < n_total; ++q)
        zono.center[q] += iv.lo * dir[q];
    } else {
      zono.generators.push_back({std::move(dir), iv});
    }
  }
  return zono;
}

GradientSample sample_gradients(const CompositeSpec& spec,
                                const std::vector<double>& base, double radius,
                                std::size_t n_samples, std::uint64_t seed,
                                Exec exec, double kink_tol) {
  spec.validate();
  if (base.size() != spec.in_dim())
    throw ShapeError("sample_gradients: base point length mismatch");
  if (!(radius > 0.0))
    throw ShapeError("sample_gradients: radius must be positive");
  if (!(kink_tol >= 0.0))
    throw ShapeError("sample_gradients: kink tolerance must be nonnegative");

  constexpr std::size_t kMaxTries = 256;
  const std::size_t dim = base.size();

  GradientSample out;
  out.base = base;
  out.radius = radius;
  out.seed = seed;
  out.points.assign(n_samples, {});
  out.gradients.assign(n_samples, {});

  std::vector<std::size_t> rejections(n_samples, 0);
  std::vector<unsigned char> failed(n_samples, 0);
  std::vector<std::exception_ptr> errors(n_samples);

  for_each_index(n_samples, exec, [&](std::size_t idx) {
    Rng rng(derive_seed(seed, idx));
    try {
      for (std::size_t attempt = 0; attempt < kMaxTries; ++attempt) {
        std::vector<double> pt = rng.in_ball(dim, radius);
        for (std::size_t q = 0; q < dim; ++q) pt[q] += base[q];
        if (composite_kink_distance(spec, pt) < kink_tol) {
          ++rejections[idx];
          continue;
        }
        out.gradients[idx] = composite_gradient(spec, pt);
        out.points[idx] = std::move(pt);
        return;
      }
      failed[idx] = 1;
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  });

  std::size_t rejected = 0, failures = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    rejected += rejections[i];
    failures += failed[i];
    if (errors[i]) std::rethrow_exception(errors[i]);
  }
  out.kink_rejections = rejected;
  const double attempts = static_cast<double>(rejected + n_samples);
  if (failures > 0 || static_cast<double>(rejected) > 0.9 * attempts)
    throw DegenerateSamplingError(
        "sample_gradients: kink rejection rate too high (" +
        std::to_string(rejected) + " rejections over " +
        std::to_string(n_samples) + " slots, " + std::to_string(failures) +
        " exhausted)");
  return out;
}

SupportGapReport support_gap(const SubgradientZonotope& upper,
                             const GradientSample& lower,
                             std::size_t directions, std::uint64_t seed) {
  upper.validate();
  if (lower.gradients.empty())
    throw ShapeError("support_gap: no sampled gradients");
  for (const auto& g : lower.gradients)
    if (g.size() != upper.dim())
      throw ShapeError("support_gap: gradient dimension mismatch");
  if (directions == 0) throw ShapeError("support_gap: need >= 1 direction");

  Rng rng(seed);
  SupportGapReport rep;
  rep.max_gap = -std::numeric_limits<double>::infinity();
  rep.min_gap = std::numeric_limits<double>::infinity();
  rep.directions_checked = directions;
  for (std::size_t it = 0; it < directions; ++it) {
    const std::vector<double> v = rng.unit_vector(upper.dim());
    double lower_support = -std::numeric_limits<double>::infinity();
    for (const auto& g : lower.gradients) {
      double dot = 0.0;
      for (std::size_t q = 0; q < v.size(); ++q) dot += g[q] * v[q];
      lower_support = std::max(lower_support, dot);
    }
    const double gap = upper.support(v) - lower_support;
    rep.max_gap = std::max(rep.max_gap, gap);
    rep.min_gap = std::min(rep.min_gap, gap);
  }
  return rep;
}

}  // namespace subchain
