#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace subchain {

// Error taxonomy. Shape mismatches and non-finite input are construction-time
// failures; the others mark contract violations of individual operations.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AdmissibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct QualificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedLossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateSamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix. Deliberately a plain container: every problem here
// is desk-scale, and the serialized layout (rows, cols, row-major data) is
// part of the file-format contract.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, rows*cols entries

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static DenseMatrix identity(std::size_t n);

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return rows * cols; }
  bool empty() const { return rows == 0 || cols == 0; }

  std::vector<double> col(std::size_t j) const;
  void set_col(std::size_t j, const std::vector<double>& v);

  // Columns stacked first-to-last (the latent vectors, one after another).
  std::vector<double> flatten_columns() const;
  static DenseMatrix from_flat_columns(std::size_t r, std::size_t c,
                                       const double* flat);

  void validate(const std::string& what) const;  // finite entries, size match
};

DenseMatrix transpose(const DenseMatrix& m);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a^T * b without forming the transpose
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scaled(const DenseMatrix& m, double s);
double frobenius_norm(const DenseMatrix& m);
double max_abs(const DenseMatrix& m);

// Dense order-3 tensor, mode-1-major storage: entry (i,j,k) sits at
// ((i*n2)+j)*n3+k.
struct DenseTensor3 {
  std::size_t n1 = 0, n2 = 0, n3 = 0;
  std::vector<double> data;

  DenseTensor3() = default;
  DenseTensor3(std::size_t a, std::size_t b, std::size_t c, double fill = 0.0)
      : n1(a), n2(b), n3(c), data(a * b * c, fill) {}

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * n2 + j) * n3 + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * n2 + j) * n3 + k];
  }
  std::size_t size() const { return n1 * n2 * n3; }

  void validate(const std::string& what) const;
};

double frobenius_norm(const DenseTensor3& t);
double max_abs(const DenseTensor3& t);

double norm2(const std::vector<double>& v);
double max_abs(const std::vector<double>& v);

// Lexicographic bijection between pairs (i,j), i<j, and flat positions.
// Indices are 0-based in memory; serialization shifts to 1-based.
class PairIndexer {
 public:
  using Pair = std::pair<std::size_t, std::size_t>;

  PairIndexer() = default;
  explicit PairIndexer(std::size_t d0);             // full pair set
  PairIndexer(std::size_t d0, std::vector<Pair> pairs);  // restricted subset

  std::size_t flat(std::size_t i, std::size_t j) const;
  Pair pair(std::size_t flat_index) const;
  bool contains(std::size_t i, std::size_t j) const;

  std::size_t size() const { return pairs_.size(); }
  std::size_t d0() const { return d0_; }
  const std::vector<Pair>& pairs() const { return pairs_; }

 private:
  std::size_t d0_ = 0;
  std::vector<Pair> pairs_;
  std::vector<std::ptrdiff_t> table_;  // d0*d0 lookup, -1 = absent
  void build_table();
};

// Same for triples (i,j,k), i<j<k, full set only.
class TripleIndexer {
 public:
  struct Triple {
    std::size_t i, j, k;
  };

  TripleIndexer() = default;
  explicit TripleIndexer(std::size_t d0);

  std::size_t flat(std::size_t i, std::size_t j, std::size_t k) const;
  Triple triple(std::size_t flat_index) const;
  std::size_t size() const { return triples_.size(); }
  std::size_t d0() const { return d0_; }

 private:
  std::size_t d0_ = 0;
  std::vector<Triple> triples_;
};

}  // namespace subchain
