#pragma once

#include <variant>
#include <vector>

#include "subchain/maps.hpp"
#include "subchain/types.hpp"

namespace subchain {

// strict refuses targets outside the certified radius; best_effort constructs
// anyway (the constructions are exact for any target once the dimension
// condition holds) and reports guaranteed=false.
enum class SolveMode { strict, best_effort };

struct PreimageSolution {
  std::variant<FactorPoint, FMPoint, CPPoint, CPDaggerPoint> point;
  double residual = 0.0;           // image minus target, Frobenius/Euclidean
  double perturbation_norm = 0.0;  // distance from the base point
  double t = 0.0;                  // trust radius the caller asked for
  double certified_radius = 0.0;   // admissible target radius at this t
  bool guaranteed = false;
};

// Orthonormal basis of the orthogonal complement of given columns, read off
// the full Q factor of a column-pivoted QR. basis has ambient_dim rows.
struct SubspaceBasis {
  std::size_t ambient_dim = 0;
  std::size_t input_rank = 0;
  DenseMatrix basis;  // ambient_dim x (ambient_dim - input_rank)
};

// columns: ambient_dim x k (k may be 0 for the trivial span)
SubspaceBasis complement_basis(const DenseMatrix& columns,
                               std::size_t ambient_dim);

// Numerical rank with threshold max(rows, cols) * sigma_max * 1e-12.
std::size_t numerical_rank(const DenseMatrix& m);

// dim span(columns of X and Y) + min{m,n} <= d
bool dim_condition_mf(const FactorPoint& base);
// rank X == rank Y == rank X^T Y
bool rank_condition(const FactorPoint& base);

// Product factorization hits `target` from the origin inside the trust ball
// of radius t whenever ||target||_F <= t^2/sqrt(4mn). d >= min{m,n} required.
PreimageSolution solve_mf_origin(const DenseMatrix& target, std::size_t d,
                                 double t, SolveMode mode);

// From a general base (X, Y): perturbs both factors inside span-complement
// directions so the correction lands exactly; cross terms vanish by
// construction. Admissible gap: ||target - X^T Y||_F <= eps^2 with
// eps = min(t/sqrt(2m), t/sqrt(2n)). Needs d - dim span >= min{m,n}.
PreimageSolution solve_mf_at(const FactorPoint& base, const DenseMatrix& target,
                             double t, SolveMode mode);

// Triangular-support solution W* of the pairwise-product system
// a_(i,j) w_i^T w_j = y: column j supported on the first min(j, d0-1) rows
// (0-based: rows 0..j-1 plus the diagonal w_jj for j < d0-1). Exact for any
// y; the box bounds |w_kj| <= 1/sqrt(2)^(d0-k-1) hold when
// ||y||_inf <= rho = min|a| / 2^(d0-1).
DenseMatrix solve_fm_tower(const std::vector<double>& y, const PairCoeffs& a,
                           std::size_t dim_free);
double fm_tower_radius(const PairCoeffs& a);  // rho

// General-point pairwise solver: P' = P + eps * (complement-basis lift of the
// tower solution), eps = t/sqrt(2*d0). Admissible gap in sup norm: eps^2*rho.
PreimageSolution solve_fm_at(const FMPoint& base, const std::vector<double>& y,
                             double t, SolveMode mode);

// Order-3 product factorization at the origin. Modes are reordered so the
// excluded mode maximizes its size, the structured mode receives the
// block-indicator columns, and the remaining mode carries the per-slice
// corrections; d >= (structured size) * (block size) required. Certified
// Frobenius radius: eps^3 / (ns * sqrt(nb)), eps = t/sqrt(n1+n2+n3).
PreimageSolution solve_cp_origin(std::size_t n1, std::size_t n2, std::size_t n3,
                                 const DenseTensor3& target, std::size_t d,
                                 double t, SolveMode mode);

// Diagonal-core variant Y^T diag(x) Z = target at a general base. Zero x
// entries are first pushed into general position (sign-preserving, half the
// trust budget), then the problem reduces to the two-factor general-point
// solve in sqrt|x|-scaled coordinates. Certified radius scales by min|x'_i|
// and the certificate ball is centered on the post-general-position image
// Y^T diag(x') Z (identical to the base image when x has full support); the
// returned point's x field is x'.
PreimageSolution solve_cp_dagger_at(const CPDaggerPoint& base,
                                    const DenseMatrix& target, double t,
                                    SolveMode mode);

}  // namespace subchain
