#pragma once

#include <string>
#include <variant>
#include <vector>

#include "subchain/linop.hpp"
#include "subchain/types.hpp"

namespace subchain {

// Factorization-map catalog. Latent dimension d is the row count of every
// factor matrix; columns are the latent vectors.
enum class MapId { mf, fm, cp, cpdagger, hofm, neufm, neumf, gmf };

MapId parse_map_id(const std::string& name);
std::string map_name(MapId id);

// (X, Y) -> X^T Y
struct FactorPoint {
  DenseMatrix X;  // d x m
  DenseMatrix Y;  // d x n
  void validate() const;
  std::size_t d() const { return X.rows; }
};

// Full lexicographic pairwise coefficients a_(i,j), i<j, all nonzero.
struct PairCoeffs {
  std::size_t d0 = 0;
  std::vector<double> values;  // length d0*(d0-1)/2, lexicographic

  static PairCoeffs ones(std::size_t d0);
  static PairCoeffs constant(std::size_t d0, double value);
  double at(std::size_t i, std::size_t j) const;  // 0-based, i<j
  double min_abs() const;
  void validate() const;  // zero coefficient -> InvariantError
};

// P -> (a_(i,j) p_i^T p_j)_(i<j), flattened lexicographically
struct FMPoint {
  DenseMatrix P;  // d x d0
  PairCoeffs a;
  void validate() const;
  std::size_t d() const { return P.rows; }
  std::size_t d0() const { return P.cols; }
};

// (X, Y, Z) -> sum_s x_i[s] y_j[s] z_k[s] over (i,j,k)
struct CPPoint {
  DenseMatrix X;  // d x n1
  DenseMatrix Y;  // d x n2
  DenseMatrix Z;  // d x n3
  void validate() const;
  std::size_t d() const { return X.rows; }
};

// (x, Y, Z) -> Y^T diag(x) Z
struct CPDaggerPoint {
  std::vector<double> x;  // length d
  DenseMatrix Y;          // d x n2
  DenseMatrix Z;          // d x n3
  void validate() const;
  std::size_t d() const { return x.size(); }
};

struct TripleCoeffs {
  std::size_t d0 = 0;
  std::vector<double> values;  // lexicographic over i<j<k, all nonzero

  static TripleCoeffs ones(std::size_t d0);
  void validate() const;
};

// P -> (a_(i,j,k) <p_i, p_j, p_k>)_(i<j<k)
struct HOFMPoint {
  DenseMatrix P;  // d x d0, d0 >= 3
  TripleCoeffs a;
  void validate() const;
};

// (P, H) -> (a_(i,j) <h_s, p_i, p_j>)_(s, i<j), s-major
struct NeuFMPoint {
  DenseMatrix P;  // d x d0
  DenseMatrix H;  // d x h
  PairCoeffs a;
  void validate() const;
};

// (W, X, S, Y, b) -> out[i,j,k] = w_k^T x_i + s_k^T y_j + b_k
struct NeuMFPoint {
  DenseMatrix W;  // d x h
  DenseMatrix X;  // d x m
  DenseMatrix S;  // d x h
  DenseMatrix Y;  // d x n
  std::vector<double> b;  // length h
  void validate() const;
};

// (v, h, P, Q) with observed index set D; the map part is
// (h, P, Q) -> (<h, p_i, q_j>)_((i,j) in D). v rides along for the
// subdifferential assembly.
struct GMFPoint {
  double v = 0.0;
  std::vector<double> h;  // length d
  DenseMatrix P;          // d x m
  DenseMatrix Q;          // d x n
  std::vector<std::pair<std::size_t, std::size_t>> observed;  // 0-based (i,j)

  static std::vector<std::pair<std::size_t, std::size_t>> full_grid(
      std::size_t m, std::size_t n);
  void validate() const;
};

using MapPoint = std::variant<FactorPoint, FMPoint, CPPoint, CPDaggerPoint,
                              HOFMPoint, NeuFMPoint, NeuMFPoint, GMFPoint>;

DenseMatrix eval_mf(const FactorPoint& p);
std::vector<double> eval_fm(const FMPoint& p);
DenseTensor3 eval_cp(const CPPoint& p);
DenseMatrix eval_cp_dagger(const CPDaggerPoint& p);
std::vector<double> eval_hofm(const HOFMPoint& p);
std::vector<double> eval_neufm(const NeuFMPoint& p);
DenseTensor3 eval_neumf(const NeuMFPoint& p);
std::vector<double> eval_gmf(const GMFPoint& p);

LinearOperator jacobian_mf(const FactorPoint& p);
LinearOperator jacobian_fm(const FMPoint& p);
LinearOperator jacobian_cp(const CPPoint& p);
LinearOperator jacobian_cp_dagger(const CPDaggerPoint& p);
LinearOperator jacobian_hofm(const HOFMPoint& p);
LinearOperator jacobian_neufm(const NeuFMPoint& p);
LinearOperator jacobian_neumf(const NeuMFPoint& p);
LinearOperator jacobian_gmf(const GMFPoint& p);

// Uniform access used by the CLI and by gradient sampling. Point coordinates
// flatten in field order, matrices column-stacked.
std::size_t input_dim(const MapPoint& p);
std::size_t output_dim(const MapPoint& p);
std::vector<double> flatten_point(const MapPoint& p);
MapPoint unflatten_point(const MapPoint& shape_like,
                         const std::vector<double>& flat);
std::vector<double> eval_flat(const MapPoint& p);
LinearOperator jacobian(const MapPoint& p);
MapId map_id_of(const MapPoint& p);

}  // namespace subchain
