// Acceptance gate: ten pass/fail checks with pinned tolerances and per-check
// runtime budgets, one line of output each. Exit code 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "subchain/certify.hpp"
#include "subchain/fmdata.hpp"
#include "subchain/losses.hpp"
#include "subchain/maps.hpp"
#include "subchain/preimage.hpp"
#include "subchain/rng.hpp"
#include "subchain/subdiff.hpp"
#include "subchain/zonotope.hpp"

using namespace subchain;

namespace {

DenseMatrix random_mat(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                       double hi = 1.0) {
  DenseMatrix m(r, c);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

struct Check {
  int id;
  const char* label;
  double budget_seconds;
  std::function<bool(std::ostringstream&)> body;
};

// ---- 1: origin solver hits every admissible boundary target ----------------

bool c1_origin_solver(std::ostringstream& why) {
  const double kResidual = 1e-10;
  Rng rng(1001);
  for (std::size_t m = 1; m <= 5; ++m)
    for (std::size_t n = 1; n <= 5; ++n) {
      const double t = 1.0;
      const double radius = t * t / std::sqrt(4.0 * double(m * n));
      for (int rep = 0; rep < 100; ++rep) {
        DenseMatrix target = random_mat(rng, m, n);
        const double norm = frobenius_norm(target);
        if (norm == 0.0) continue;
        for (double& v : target.data) v *= radius / norm;
        const PreimageSolution sol =
            solve_mf_origin(target, std::min(m, n), t, SolveMode::strict);
        const double image_err =
            frobenius_norm(sub(eval_mf(std::get<FactorPoint>(sol.point)), target));
        if (sol.residual > kResidual || image_err > kResidual) {
          why << "residual " << std::max(sol.residual, image_err) << " at ("
              << m << "," << n << ")";
          return false;
        }
        if (sol.perturbation_norm > t * (1.0 + 1e-12)) {
          why << "perturbation " << sol.perturbation_norm << " > t";
          return false;
        }
      }
    }
  return true;
}

// ---- 2: general-point solver, exactness and budget --------------------------

bool c2_general_solver(std::ostringstream& why) {
  const double kResidual = 1e-9;
  const double kCross = 1e-12;
  const std::size_t m = 3, n = 4, d = 10;
  const double t = 1.0;
  const double eps = std::min(t / std::sqrt(2.0 * m), t / std::sqrt(2.0 * n));
  Rng rng(1002);
  for (int rep = 0; rep < 100; ++rep) {
    const FactorPoint base{random_mat(rng, d, m), random_mat(rng, d, n)};
    DenseMatrix gap = random_mat(rng, m, n);
    const double norm = frobenius_norm(gap);
    for (double& v : gap.data) v *= 0.5 * eps * eps / norm;
    const DenseMatrix target = add(eval_mf(base), gap);
    const PreimageSolution sol = solve_mf_at(base, target, t, SolveMode::strict);
    const FactorPoint& p = std::get<FactorPoint>(sol.point);
    const double image_err = frobenius_norm(sub(eval_mf(p), target));
    if (sol.residual > kResidual || image_err > kResidual) {
      why << "residual " << std::max(sol.residual, image_err);
      return false;
    }
    if (sol.perturbation_norm > t * (1.0 + 1e-12)) {
      why << "perturbation " << sol.perturbation_norm;
      return false;
    }
    const double cross =
        std::max(max_abs(matmul_at_b(base.X, sub(p.Y, base.Y))),
                 max_abs(matmul_at_b(sub(p.X, base.X), base.Y)));
    if (cross > kCross) {
      why << "cross-term " << cross;
      return false;
    }
  }
  return true;
}

// ---- 3: triangular tower, exactness plus box bounds -------------------------

bool c3_tower_solver(std::ostringstream& why) {
  const double kResidual = 1e-10;
  Rng rng(1003);
  for (std::size_t d0 = 2; d0 <= 8; ++d0) {
    PairCoeffs a = PairCoeffs::ones(d0);
    for (double& v : a.values)
      v = rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const double rho = fm_tower_radius(a);
    const PairIndexer ix(d0);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> y(ix.size());
      for (double& v : y) v = rho * rng.uniform(-1.0, 1.0);
      const DenseMatrix w = solve_fm_tower(y, a, d0 - 1);
      for (std::size_t f = 0; f < ix.size(); ++f) {
        const auto [i, j] = ix.pair(f);
        double prod = 0.0;
        for (std::size_t r = 0; r < w.rows; ++r)
          prod += w.at(r, i) * w.at(r, j);
        if (std::abs(a.at(i, j) * prod - y[f]) > kResidual) {
          why << "residual " << std::abs(a.at(i, j) * prod - y[f]) << " at d0="
              << d0;
          return false;
        }
      }
      for (std::size_t k = 0; k < w.rows; ++k) {
        const double bound = std::pow(std::sqrt(0.5), double(d0 - 1 - k));
        for (std::size_t j = 0; j < w.cols; ++j)
          if (std::abs(w.at(k, j)) > bound + 1e-12) {
            why << "box bound broken: |w(" << k << "," << j << ")| = "
                << std::abs(w.at(k, j)) << " > " << bound << " at d0=" << d0;
            return false;
          }
      }
    }
  }
  return true;
}

// ---- 4: identically-zero composite vs its chain-rule bound ------------------

bool c4_zero_composite(std::ostringstream& why) {
  const CertificateReport rep = certify_chainrule_gap(1004, 100000);
  if (rep.verdict != Verdict::confirmed) {
    why << "verdict " << verdict_name(rep.verdict) << " (" << rep.note << ")";
    return false;
  }
  if (rep.stat("max_abs_value") > 1e-12) {
    why << "composite value " << rep.stat("max_abs_value");
    return false;
  }
  if (std::abs(rep.stat("support_plus") - 2.0) > 1e-12 ||
      std::abs(rep.stat("support_minus") - 2.0) > 1e-12) {
    why << "support " << rep.stat("support_plus") << "/"
        << rep.stat("support_minus");
    return false;
  }
  return true;
}

// ---- 5: positive-orthant certificate ----------------------------------------

bool c5_orthant(std::ostringstream& why) {
  const CertificateReport rep = certify_mf_orthant(100000, 1005, 1000000);
  if (rep.verdict != Verdict::confirmed) {
    why << "verdict " << verdict_name(rep.verdict) << " (" << rep.note << ")";
    return false;
  }
  if (rep.stat("orthant_hits") != 0.0) {
    why << rep.stat("orthant_hits") << " orthant hits";
    return false;
  }
  if (rep.stat("orthant_sign_patterns") != 0.0 ||
      rep.stat("patterns_first_three_positive") != 2.0) {
    why << "sign-pattern logic failed";
    return false;
  }
  if (std::abs(rep.stat("mc_fraction") - 0.0625) > 0.002) {
    why << "mc fraction " << rep.stat("mc_fraction");
    return false;
  }
  return true;
}

// ---- 6: success-rate phase transitions --------------------------------------

bool c6_phase_transitions(std::ostringstream& why) {
  const auto run_one = [&](MapId map, std::size_t mn, std::size_t d0,
                           std::uint64_t seed) {
    PhaseSweepConfig cfg;
    cfg.map = map;
    cfg.m = mn;
    cfg.n = mn;
    cfg.d0 = d0;
    cfg.trials = 20;
    cfg.restarts = 20;
    cfg.seed = seed;
    const std::size_t threshold = map == MapId::mf ? mn : d0 - 1;
    cfg.d_lo = threshold - 1;
    cfg.d_hi = threshold;
    return phase_sweep(cfg);
  };
  const auto verify = [&](const PhaseSweepTable& table, const char* name) {
    const PhaseSweepRow& below = table.rows.front();
    const PhaseSweepRow& at = table.rows.back();
    if (at.rate != 1.0) {
      why << name << ": control/solver rate " << at.rate << " at threshold";
      return false;
    }
    if (!(below.rate < 1.0)) {
      why << name << ": adversarial targets reached below threshold (rate "
          << below.rate << ")";
      return false;
    }
    return true;
  };
  return verify(run_one(MapId::mf, 2, 0, 1061), "mf 2x2") &&
         verify(run_one(MapId::mf, 3, 0, 1062), "mf 3x3") &&
         verify(run_one(MapId::fm, 0, 3, 1063), "fm d0=3") &&
         verify(run_one(MapId::fm, 0, 4, 1064), "fm d0=4");
}

// ---- 7: exchange identity of the two-tower sum -------------------------------

bool c7_exchange_identity(std::ostringstream& why) {
  const CertificateReport rep = certify_neumf_defect(3, 3, 2, 1000, 1007);
  if (rep.verdict != Verdict::confirmed) {
    why << "verdict " << verdict_name(rep.verdict);
    return false;
  }
  if (rep.stat("max_identity_violation") > 1e-12) {
    why << "identity violation " << rep.stat("max_identity_violation");
    return false;
  }
  return true;
}

// ---- 8: training subdifferential oracle -------------------------------------

std::vector<SparseSample> random_qualified_dataset(Rng& rng, std::size_t d0,
                                                   std::size_t max_samples) {
  std::vector<SparseSample> samples;
  const std::size_t want = 3 + rng.index(max_samples - 2);
  for (int attempt = 0; attempt < 400 && samples.size() < want; ++attempt) {
    const std::size_t support = 2 + rng.index(2);  // 2 or 3 indices
    std::vector<std::size_t> idx;
    while (idx.size() < support) {
      const std::size_t cand = rng.index(d0);
      bool dup = false;
      for (std::size_t existing : idx) dup = dup || existing == cand;
      if (!dup) idx.push_back(cand);
    }
    std::sort(idx.begin(), idx.end());
    SparseSample s;
    s.indices = idx;
    for (std::size_t k = 0; k < support; ++k) {
      double v = rng.uniform(-1.5, 1.5);
      if (std::abs(v) < 0.1) v = v < 0 ? -0.1 : 0.1;
      s.values.push_back(v);
    }
    s.y = rng.uniform(-1.0, 1.0);
    std::vector<SparseSample> trial = samples;
    trial.push_back(s);
    if (check_qualification(trial, d0).ok) samples.push_back(std::move(s));
  }
  return samples;
}

double training_value(const QualifiedDataset& data,
                      const std::vector<ScalarLoss>& losses,
                      const DenseMatrix& p) {
  double total = 0.0;
  for (std::size_t k = 0; k < data.samples.size(); ++k)
    total += losses[k].value(fm_predict(data.samples[k], p));
  return total;
}

std::vector<double> training_gradient(const QualifiedDataset& data,
                                      const std::vector<ScalarLoss>& losses,
                                      const DenseMatrix& p) {
  const std::size_t d = p.rows, d0 = p.cols;
  std::vector<double> grad(d * d0, 0.0);
  for (std::size_t k = 0; k < data.samples.size(); ++k) {
    const SparseSample& s = data.samples[k];
    const double slope = losses[k].derivative(fm_predict(s, p));
    for (std::size_t ia = 0; ia < s.indices.size(); ++ia)
      for (std::size_t ib = ia + 1; ib < s.indices.size(); ++ib) {
        const std::size_t ci = s.indices[ia], cj = s.indices[ib];
        const double xx = s.values[ia] * s.values[ib];
        for (std::size_t r = 0; r < d; ++r) {
          grad[ci * d + r] += slope * xx * p.at(r, cj);
          grad[cj * d + r] += slope * xx * p.at(r, ci);
        }
      }
  }
  return grad;
}

bool c8_training_oracle(std::ostringstream& why) {
  const std::size_t d0 = 6, d = 11;
  const double kCenterTol = 1e-6;
  const double kInclusionTol = 1e-8;
  Rng rng(1008);
  for (int instance = 0; instance < 100; ++instance) {
    const std::vector<SparseSample> raw = random_qualified_dataset(rng, d0, 20);
    const QualifiedDataset data = build_qualified(raw, d0);
    const DenseMatrix p = random_mat(rng, d, d0);

    // square loss: center == gradient of the training objective
    {
      std::vector<ScalarLoss> losses;
      for (const SparseSample& s : data.samples)
        losses.push_back(make_loss(LossId::square, s.y));
      const FMTrainSubdiff sd = fm_train_subdiff(data, p, losses);
      if (!sd.dimension_certified) {
        why << "dimension condition unexpectedly violated";
        return false;
      }
      const std::vector<double> num = oracles::central_diff_gradient(
          [&](const std::vector<double>& flat) {
            return training_value(
                data, losses,
                DenseMatrix::from_flat_columns(d, d0, flat.data()));
          },
          p.flatten_columns());
      double diff = 0.0, ref = 1.0;
      for (std::size_t k = 0; k < num.size(); ++k) {
        diff += std::pow(sd.zonotope.center[k] - num[k], 2);
        ref = std::max(ref, std::abs(num[k]));
      }
      if (std::sqrt(diff) > kCenterTol * ref) {
        why << "square-loss center error " << std::sqrt(diff);
        return false;
      }
    }

    // absolute and hinge losses at smooth points: same agreement
    for (LossId id : {LossId::absolute, LossId::hinge}) {
      std::vector<ScalarLoss> losses;
      bool smooth = true;
      for (const SparseSample& s : data.samples) {
        // place the label off the prediction so the loss is differentiable
        const ScalarLoss candidate = make_loss(id, s.y);
        if (candidate.kink_distance(fm_predict(s, p)) < 1e-6) smooth = false;
        losses.push_back(candidate);
      }
      if (!smooth) continue;
      const FMTrainSubdiff sd = fm_train_subdiff(data, p, losses);
      if (!sd.zonotope.generators.empty()) {
        why << loss_name(id) << " produced generators at a smooth point";
        return false;
      }
      const std::vector<double> num = oracles::central_diff_gradient(
          [&](const std::vector<double>& flat) {
            return training_value(
                data, losses,
                DenseMatrix::from_flat_columns(d, d0, flat.data()));
          },
          p.flatten_columns());
      double diff = 0.0, ref = 1.0;
      for (std::size_t k = 0; k < num.size(); ++k) {
        diff += std::pow(sd.zonotope.center[k] - num[k], 2);
        ref = std::max(ref, std::abs(num[k]));
      }
      if (std::sqrt(diff) > kCenterTol * ref) {
        why << loss_name(id) << " center error " << std::sqrt(diff);
        return false;
      }
    }

    // Clarke inclusion: gradients sampled near the base point project into
    // the zonotope. Two samples are pinned to their kink so the box is real.
    {
      std::vector<ScalarLoss> losses;
      for (std::size_t k = 0; k < data.samples.size(); ++k) {
        const double pred = fm_predict(data.samples[k], p);
        losses.push_back(make_loss(LossId::absolute,
                                   k < 2 ? pred : pred + 1.0));
      }
      const FMTrainSubdiff sd = fm_train_subdiff(data, p, losses);
      const std::uint64_t stream = derive_seed(1080 + instance, "inclusion");
      const double radius = 1e-11;
      for (int g = 0; g < 500; ++g) {
        Rng grng(derive_seed(stream, g));
        DenseMatrix q = p;
        const std::vector<double> dir = grng.in_ball(q.data.size(), radius);
        for (std::size_t k = 0; k < q.data.size(); ++k) q.data[k] += dir[k];
        bool smooth = true;
        for (std::size_t k = 0; k < losses.size(); ++k)
          if (losses[k].kink_distance(fm_predict(data.samples[k], q)) < 1e-15)
            smooth = false;
        if (!smooth) continue;
        const std::vector<double> grad = training_gradient(data, losses, q);
        const BoxFitResult fit = nearest_point(sd.zonotope, grad);
        if (fit.residual > kInclusionTol) {
          why << "sampled gradient escaped the zonotope by " << fit.residual;
          return false;
        }
      }
    }
  }
  return true;
}

// ---- 9: gradient norms vanish linearly at the origin -------------------------

bool c9_trivial_stationarity(std::ostringstream& why) {
  const std::vector<double> radii{1e-2, 1e-3, 1e-4};
  Rng seed_rng(1009);
  std::vector<std::pair<std::string, MapPoint>> shapes;
  shapes.push_back({"mf", FactorPoint{DenseMatrix(2, 2), DenseMatrix(2, 2)}});
  shapes.push_back({"fm", FMPoint{DenseMatrix(2, 3), PairCoeffs::ones(3)}});
  shapes.push_back(
      {"cp", CPPoint{DenseMatrix(2, 2), DenseMatrix(2, 2), DenseMatrix(2, 2)}});

  const std::vector<std::pair<LossId, double>> losses{
      {LossId::square, 0.3},
      {LossId::absolute, 0.0},
      {LossId::hinge, 1.0},
      {LossId::shifted_relu, 0.0},
      {LossId::logistic, 1.0}};

  for (const auto& [map_label, shape] : shapes) {
    for (const auto& [loss_id, label] : losses) {
      CompositeSpec spec;
      spec.shape = shape;
      spec.losses.assign(output_dim(shape), make_loss(loss_id, label));
      const std::vector<double> origin(input_dim(shape), 0.0);

      // one seed for all radii: sample directions are shared, so the slope
      // estimate is not perturbed by independent max-statistics noise. The
      // kink rejection tolerance scales with the radius because every output
      // of a multilinear map shrinks at least quadratically with the ball.
      const std::uint64_t seed =
          derive_seed(1009, std::string(map_label) + loss_name(loss_id));
      std::vector<double> norms;
      for (double r : radii) {
        const GradientSample gs = sample_gradients(
            spec, origin, r, 400, seed, Exec::parallel, 1e-15 * r);
        double max_norm = 0.0;
        for (const std::vector<double>& g : gs.gradients)
          max_norm = std::max(max_norm, oracles::norm2(g));
        norms.push_back(max_norm);
      }

      const bool identically_zero =
          norms[0] <= 1e-15 && norms[1] <= 1e-15 && norms[2] <= 1e-15;
      if (!identically_zero) {
        if (norms[2] <= 0.0) {
          why << map_label << "/" << loss_name(loss_id)
              << ": zero norm at the smallest radius only";
          return false;
        }
        // degree-3 maps decay exactly quadratically, the edge of the band;
        // the 1e-3 slack is measurement tolerance on the estimator, not a
        // wider acceptance region
        const double slope =
            (std::log10(norms[0]) - std::log10(norms[2])) / 2.0;
        if (slope < 0.5 - 1e-3 || slope > 2.0 + 1e-3) {
          why << map_label << "/" << loss_name(loss_id) << ": log-log slope "
              << slope;
          return false;
        }
      }

      const SubgradientZonotope upper = chainrule_upper(spec, origin);
      if (!contains_zero(upper).contains) {
        why << map_label << "/" << loss_name(loss_id)
            << ": origin zonotope misses zero";
        return false;
      }
    }
  }
  return true;
}

// ---- 10: Jacobians against central differences --------------------------------

bool c10_jacobians(std::ostringstream& why) {
  const double kTol = 1e-6;
  Rng rng(1010);
  std::vector<MapPoint> shapes;
  shapes.push_back(FactorPoint{random_mat(rng, 3, 2), random_mat(rng, 3, 4)});
  shapes.push_back(FMPoint{random_mat(rng, 2, 4), PairCoeffs::constant(4, 1.3)});
  shapes.push_back(CPPoint{random_mat(rng, 2, 2), random_mat(rng, 2, 3),
                           random_mat(rng, 2, 2)});
  shapes.push_back(CPDaggerPoint{random_vec(rng, 3), random_mat(rng, 3, 2),
                                 random_mat(rng, 3, 3)});
  shapes.push_back(HOFMPoint{random_mat(rng, 2, 4), TripleCoeffs::ones(4)});
  shapes.push_back(NeuFMPoint{random_mat(rng, 2, 3), random_mat(rng, 2, 2),
                              PairCoeffs::ones(3)});
  shapes.push_back(NeuMFPoint{random_mat(rng, 2, 2), random_mat(rng, 2, 3),
                              random_mat(rng, 2, 2), random_mat(rng, 2, 3),
                              random_vec(rng, 2)});
  GMFPoint g;
  g.v = rng.uniform(-1.0, 1.0);
  g.h = random_vec(rng, 2);
  g.P = random_mat(rng, 2, 3);
  g.Q = random_mat(rng, 2, 3);
  g.observed = GMFPoint::full_grid(3, 3);
  shapes.push_back(std::move(g));

  for (const MapPoint& shape : shapes) {
    const LinearOperator jac = jacobian(shape);
    for (int rep = 0; rep < 100; ++rep) {
      // fresh random point of the same shape, fresh random direction
      std::vector<double> w(input_dim(shape));
      for (double& v : w) v = rng.uniform(-1.0, 1.0);
      const MapPoint at = unflatten_point(shape, w);
      const LinearOperator jac_at = jacobian(at);
      const std::vector<double> v = rng.unit_vector(jac.in_dim);
      const std::vector<double> jv = jac_at.apply(v);
      const std::vector<double> cd = oracles::central_diff_direction(at, w, v);
      double diff = 0.0, ref = 1.0;
      for (std::size_t k = 0; k < jv.size(); ++k) {
        diff += (jv[k] - cd[k]) * (jv[k] - cd[k]);
        ref += jv[k] * jv[k];
      }
      if (std::sqrt(diff / ref) > kTol) {
        why << map_name(map_id_of(shape)) << ": central-difference error "
            << std::sqrt(diff / ref);
        return false;
      }
    }
  }
  return true;
}

}  // namespace

int main() {
  const std::vector<Check> checks{
      {1, "origin two-factor solver on boundary targets", 5.0, c1_origin_solver},
      {2, "general-point two-factor solver", 5.0, c2_general_solver},
      {3, "triangular tower solver with box bounds", 10.0, c3_tower_solver},
      {4, "identically-zero composite vs chain-rule bound", 5.0,
       c4_zero_composite},
      {5, "positive-orthant reachability certificate", 10.0, c5_orthant},
      {6, "latent-dimension phase transitions", 60.0, c6_phase_transitions},
      {7, "two-tower exchange identity", 2.0, c7_exchange_identity},
      {8, "training subdifferential oracle", 60.0, c8_training_oracle},
      {9, "trivial stationarity at the origin", 30.0, c9_trivial_stationarity},
      {10, "jacobians against central differences", 10.0, c10_jacobians},
  };

  int failures = 0;
  for (const Check& c : checks) {
    std::ostringstream why;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.body(why);
    } catch (const std::exception& e) {
      why << "exception: " << e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (ok && elapsed > c.budget_seconds) {
      ok = false;
      why << "runtime " << elapsed << "s over the " << c.budget_seconds
          << "s budget";
    }
    if (ok) {
      std::printf("[PASS] criterion %2d: %s (%.2fs)\n", c.id, c.label, elapsed);
    } else {
      ++failures;
      std::printf("[FAIL] criterion %2d: %s (%.2fs) -- %s\n", c.id, c.label,
                  elapsed, why.str().c_str());
    }
  }
  if (failures > 0) std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
