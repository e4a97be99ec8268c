#pragma once

#include <cstdint>
#include <vector>

#include "subchain/fmdata.hpp"
#include "subchain/losses.hpp"
#include "subchain/maps.hpp"
#include "subchain/parallel.hpp"
#include "subchain/zonotope.hpp"

namespace subchain {

// A catalogued composite: either per-output scalar losses applied to the map
// outputs and summed, or the rank-one 2x2 product-contrast composite
//   sigma(z1*z4) - sigma(z2*z3)
// over the four outputs of a 1x(2,2) two-factor product. For that map both
// inner products are the same monomial x1*x2*y1*y2; evaluation and gradient
// go through the shared monomial, which is what makes the function vanish
// identically (and its sampled gradients vanish exactly) away from the
// activation kink.
struct CompositeSpec {
  MapPoint shape;                  // fixes the map and all dimensions
  std::vector<ScalarLoss> losses;  // one per map output (separable case)
  bool product_contrast = false;
  ScalarLoss sigma = make_loss(LossId::shifted_relu);  // contrast case only

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  void validate() const;
};

double composite_value(const CompositeSpec& spec, const std::vector<double>& w);

// Gradient at a point where every loss is differentiable;
// UnsupportedLossError when some output sits on a kink.
std::vector<double> composite_gradient(const CompositeSpec& spec,
                                       const std::vector<double>& w);

// Distance from the map outputs at w to the nearest loss kink (+inf if none).
double composite_kink_distance(const CompositeSpec& spec,
                               const std::vector<double>& w);

// Chain-rule outer bound: the zonotope J_H(w)^T * (per-output generalized
// derivative intervals) over the flat input space. Differentiable outputs
// contribute to the center; each kinked output contributes one generator.
SubgradientZonotope chainrule_upper(const CompositeSpec& spec,
                                    const std::vector<double>& w);

// Training subdifferential of sum_k loss_k(fm_predict(x_k, P)) over vec(P)
// (columns stacked). Exact under the qualification the dataset already
// passed; the latent-dimension bound d >= 2*d0 - 1 is reported, not enforced.
struct FMTrainSubdiff {
  SubgradientZonotope zonotope;
  bool dimension_certified = false;  // d >= 2*d0 - 1
};

FMTrainSubdiff fm_train_subdiff(const QualifiedDataset& dataset,
                                const DenseMatrix& p,
                                const std::vector<ScalarLoss>& losses);

// Training subdifferential of sum_(i,j) loss_ij(v * act(<h, p_i, q_j>)) over
// the flat space [v | h | vec P | vec Q]. Outer losses must be differentiable
// at their arguments; the activation may kink (one generator per kinked
// pair).
SubgradientZonotope gmf_subdiff(const GMFPoint& pt, const ScalarLoss& activation,
                                const std::vector<ScalarLoss>& pair_losses);

// Gradients of the composite at uniform points in the radius-ball around
// base. Points within kink_tol of a loss kink are rejected and redrawn
// (counted in kink_rejections); the 1e-12 default suits O(1) outputs, while
// balls around the origin of a multilinear map need a radius-scaled
// tolerance since every output shrinks with the ball. Each sample index
// derives its own RNG sub-seed, so the contents are identical for serial and
// parallel execution.
struct GradientSample {
  std::vector<double> base;
  double radius = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> gradients;
  std::size_t kink_rejections = 0;
};

GradientSample sample_gradients(const CompositeSpec& spec,
                                const std::vector<double>& base, double radius,
                                std::size_t n_samples, std::uint64_t seed,
                                Exec exec = Exec::parallel,
                                double kink_tol = 1e-12);

// For sampled unit directions v: gap(v) = h_upper(v) - max_g <g, v> over the
// sampled gradients. gap >= 0 up to tolerance whenever the sampled set lies
// inside the upper set.
struct SupportGapReport {
  double max_gap = 0.0;
  double min_gap = 0.0;
  std::size_t directions_checked = 0;
};

SupportGapReport support_gap(const SubgradientZonotope& upper,
                             const GradientSample& lower,
                             std::size_t directions, std::uint64_t seed);

}  // namespace subchain
