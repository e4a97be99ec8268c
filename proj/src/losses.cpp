#include "subchain/losses.hpp"

#include <cmath>
#include <limits>

namespace subchain {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

LossId parse_loss_id(const std::string& name) {
  if (name == "square") return LossId::square;
  if (name == "absolute") return LossId::absolute;
  if (name == "hinge") return LossId::hinge;
  if (name == "shifted_relu") return LossId::shifted_relu;
  if (name == "logistic") return LossId::logistic;
  throw UnsupportedLossError("unknown loss: " + name);
}

std::string loss_name(LossId id) {
  switch (id) {
    case LossId::square: return "square";
    case LossId::absolute: return "absolute";
    case LossId::hinge: return "hinge";
    case LossId::shifted_relu: return "shifted_relu";
    case LossId::logistic: return "logistic";
  }
  throw UnsupportedLossError("bad loss id");
}

double ScalarLoss::value(double t) const {
  switch (id) {
    case LossId::square: {
      const double r = t - label;
      return r * r;
    }
    case LossId::absolute:
      return std::abs(t - label);
    case LossId::hinge:
      return std::max(0.0, 1.0 - label * t);
    case LossId::shifted_relu:
      return std::max(t - shift, 0.0);
    case LossId::logistic: {
      // stable softplus(-label*t)
      const double z = -label * t;
      return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
  }
  throw UnsupportedLossError("bad loss id");
}

Interval ScalarLoss::clarke(double t) const {
  switch (id) {
    case LossId::square: {
      const double g = 2.0 * (t - label);
      return {g, g};
    }
    case LossId::absolute: {
      if (t > label) return {1.0, 1.0};
      if (t < label) return {-1.0, -1.0};
      return {-1.0, 1.0};
    }
    case LossId::hinge: {
      if (label == 0.0) return {0.0, 0.0};  // constant 1, no kink
      const double m = 1.0 - label * t;
      if (m > 0.0) return {-label, -label};
      if (m < 0.0) return {0.0, 0.0};
      return {std::min(-label, 0.0), std::max(-label, 0.0)};
    }
    case LossId::shifted_relu: {
      if (t > shift) return {1.0, 1.0};
      if (t < shift) return {0.0, 0.0};
      return {0.0, 1.0};
    }
    case LossId::logistic: {
      const double g = -label / (1.0 + std::exp(label * t));
      return {g, g};
    }
  }
  throw UnsupportedLossError("bad loss id");
}

double ScalarLoss::derivative(double t) const {
  const Interval iv = clarke(t);
  if (!iv.is_point())
    throw UnsupportedLossError(loss_name(id) +
                               " has no plain derivative at a kink");
  return iv.lo;
}

double ScalarLoss::kink_distance(double t) const {
  switch (id) {
    case LossId::square:
    case LossId::logistic:
      return kInf;
    case LossId::absolute:
      return std::abs(t - label);
    case LossId::hinge:
      if (label == 0.0) return kInf;
      return std::abs(t - 1.0 / label);
    case LossId::shifted_relu:
      return std::abs(t - shift);
  }
  throw UnsupportedLossError("bad loss id");
}

ScalarLoss make_loss(LossId id, double label, double shift) {
  return ScalarLoss{id, label, shift};
}

}  // namespace subchain
