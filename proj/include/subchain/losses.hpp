#pragma once

#include <string>

#include "subchain/types.hpp"

namespace subchain {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool is_point(double tol = 0.0) const { return hi - lo <= tol; }
};

enum class LossId { square, absolute, hinge, shifted_relu, logistic };

LossId parse_loss_id(const std::string& name);
std::string loss_name(LossId id);

// Closed catalog of scalar losses, all locally Lipschitz. Each exposes its
// value, its full generalized-derivative interval (a point where smooth), and
// the distance to the nearest kink so samplers can reject near-kink draws.
//
//   square(t)       = (t - label)^2
//   absolute(t)     = |t - label|
//   hinge(t)        = max(0, 1 - label*t)
//   shifted_relu(t) = max(t - shift, 0)
//   logistic(t)     = log(1 + exp(-label*t))
struct ScalarLoss {
  LossId id = LossId::square;
  double label = 0.0;
  double shift = 1.0;  // shifted_relu only

  double value(double t) const;
  Interval clarke(double t) const;
  // Plain derivative; throws UnsupportedLossError at a kink.
  double derivative(double t) const;
  // Distance from t to the closest nondifferentiable argument (+inf if none).
  double kink_distance(double t) const;
};

ScalarLoss make_loss(LossId id, double label = 0.0, double shift = 1.0);

}  // namespace subchain
