#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "subchain/maps.hpp"
#include "subchain/parallel.hpp"
#include "subchain/rng.hpp"
#include "subchain/types.hpp"

namespace subchain {

// Certificates are statistical evidence, not proofs: an optimization stress
// test that fails to reach a target, plus a control run at the next latent
// dimension that does reach it, is "consistent with" unreachability. The
// report wording keeps that distinction.

enum class Verdict { confirmed, refuted, inconclusive };

std::string_view verdict_name(Verdict v);

struct CertificateReport {
  std::string case_id;
  Verdict verdict = Verdict::inconclusive;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::size_t violations = 0;
  // Named scalar statistics in a fixed (insertion) order so serialized
  // reports are reproducible byte-for-byte for a fixed seed.
  std::vector<std::pair<std::string, double>> stats;
  // Case-dependent payload for external re-verification: the stress target
  // (flat, column-stacked for matrices; pair order for interaction vectors).
  std::vector<double> target;
  // neumf-defect only: index triples (i, j, k) of annihilating functionals
  //   phi(T) = T[i,i,k] + T[j,j,k] - T[i,j,k] - T[j,i,k].
  std::vector<std::array<std::size_t, 3>> annihilators;
  std::string note;

  void put(std::string name, double value);
  bool has_stat(std::string_view name) const;
  double stat(std::string_view name) const;  // SchemaError if absent
};

// ---- forbidden-set predicates ----------------------------------------------
//
// Strict inequalities use a tolerance: "positive" means > tol, "negative"
// means < -tol, "zero" means |.| <= tol. A component at exactly 0 therefore
// violates a strict sign constraint.

// Open orthant R+^3 x R- over the column-stacked 2x2 product
// (x1y1, x2y1, x1y2, x2y2).
bool in_mf_orthant(const std::vector<double>& z, double tol = 1e-12);

// Sign-pattern set in R^{nxn} (n >= 2) that rank-deficient products X^T Y
// with d = n-1 provably miss: entries (0,n-2), (0,n-1), (1,n-2) positive,
// (1,n-1) negative, (i,i-2) positive for i >= 2, rows 0..1 of columns
// 0..n-3 free, every other entry zero. Each member is full rank (the
// embedded 2x2 block has negative determinant), hence unreachable by any
// product of rank < n.
bool in_mf_unreachable_set(const DenseMatrix& p, double tol = 1e-12);

// A random point in the relative interior of that set: free entries uniform
// in [-1,1], signed entries with magnitude in [0.1,1].
DenseMatrix mf_unreachable_target(std::size_t n, Rng& rng);

// Sign-pattern set over pairwise interactions y_{ij} (0-based pairs, i<j)
// that d = d0-2 factorization-machine images provably miss: (0,j) positive
// for j in [1, d0-3], (0,d0-2) and (0,d0-1) sign-matched to the
// corresponding coefficient of a, every pair with i >= 1 zero. Requires
// d0 >= 3.
bool in_fm_unreachable_set(const std::vector<double>& y, const PairCoeffs& a,
                           double tol = 1e-12);

std::vector<double> fm_unreachable_target(const PairCoeffs& a, Rng& rng);

// ---- certificates ------------------------------------------------------------

// Case "ex-negative": the product-contrast composite is identically zero, so
// every gradient is zero, yet the chain-rule outer bound at the all-ones
// point has support 2 in direction (1/2)1. Checks |f| <= 1e-12 on `samples`
// random points, zero sampled gradients near the base point, and the
// support gap in directions +-(1/2)1.
CertificateReport certify_chainrule_gap(std::uint64_t seed,
                                        std::size_t samples = 100000,
                                        Exec exec = Exec::parallel);

// Case "mf-orthant": vec(x y^T) never enters the open orthant R+^3 x R-
// (three positive products force the fourth positive). Random-trial check
// (trials >= 1e4), the exhaustive 16-case sign enumeration, and a
// Monte-Carlo estimate of the ball fraction the orthant occupies
// (expected 1/16, accepted within 3 standard errors).
CertificateReport certify_mf_orthant(std::size_t trials, std::uint64_t seed,
                                     std::size_t mc_samples = 1000000,
                                     Exec exec = Exec::parallel);

// Case "mf-general": stress-tests unreachability of the n x n sign-pattern
// set at d = n-1. For each of `trials` targets in the relative interior,
// runs `restarts` gradient-descent minimizations of ||X^T Y - T||_F^2 from
// random unit-ball initializations. Confirmed iff every best residual stays
// at or above the per-target oracle floor sigma_min(T) (up to rounding
// slack), no iterate enters the set, and the control at d = n reaches the
// target to 1e-8. n < 2 -> DimensionError.
CertificateReport certify_mf_unreachable(std::size_t n, std::size_t trials,
                                         std::size_t restarts,
                                         std::uint64_t seed,
                                         Exec exec = Exec::parallel);

// Case "fm-general": same stress design for pairwise interactions at
// d = d0-2, with the search projected onto a parameter ball (the
// unconstrained infimum is 0 along diverging factor norms, so a bounded
// ball is what unreachability-near-the-origin actually quantifies over).
// No oracle floor exists here; the empirical floor is reported and must
// clear a fixed distinguishability cutoff. Control runs at d = d0-1.
// d0 < 3 -> DimensionError; zero coefficient -> InvariantError.
CertificateReport certify_fm_unreachable(std::size_t d0, const PairCoeffs& a,
                                         std::size_t trials,
                                         std::size_t restarts,
                                         std::uint64_t seed,
                                         Exec exec = Exec::parallel);

// Case "neumf-defect": the two-tower output satisfies the exchange identity
// out[i,i,k] + out[j,j,k] = out[i,j,k] + out[j,i,k] for every parameter
// point, so the annihilating functionals vanish on the whole range and any
// target with nonzero functional value is unreachable. Checks the identity
// to 1e-10 on `trials` random points and emits the functionals.
// min(m, n) < 2 -> DimensionError (the defect needs two shared indices).
CertificateReport certify_neumf_defect(std::size_t m, std::size_t n,
                                       std::size_t h, std::size_t trials,
                                       std::uint64_t seed,
                                       Exec exec = Exec::parallel);

// ---- phase sweep -------------------------------------------------------------

struct PhaseSweepConfig {
  MapId map = MapId::mf;
  std::size_t m = 2;   // mf sizes
  std::size_t n = 2;
  std::size_t d0 = 3;  // fm size
  std::size_t d_lo = 1;
  std::size_t d_hi = 2;
  std::size_t trials = 20;
  std::size_t restarts = 20;  // stress restarts below the threshold
  std::uint64_t seed = 0;
};

struct PhaseSweepRow {
  std::size_t d = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double rate = 0.0;  // successes / trials, success = residual <= 1e-8
  bool at_or_above_threshold = false;
};

struct PhaseSweepTable {
  MapId map = MapId::mf;
  std::size_t threshold = 0;  // min(m,n) for mf, d0-1 for fm
  std::uint64_t seed = 0;
  std::vector<PhaseSweepRow> rows;
};

// For each d in [d_lo, d_hi]: at or above the threshold, constructs
// preimages of random targets with the exact origin solvers; below it,
// stress-tests the adversarial sign-pattern targets. The at-threshold row
// doubles as the control run.
PhaseSweepTable phase_sweep(const PhaseSweepConfig& cfg,
                            Exec exec = Exec::parallel);

}  // namespace subchain
