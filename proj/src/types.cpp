#include "subchain/types.hpp"

#include <algorithm>
#include <cmath>

namespace subchain {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

std::vector<double> DenseMatrix::col(std::size_t j) const {
  std::vector<double> v(rows);
  for (std::size_t i = 0; i < rows; ++i) v[i] = at(i, j);
  return v;
}

void DenseMatrix::set_col(std::size_t j, const std::vector<double>& v) {
  if (v.size() != rows) throw ShapeError("set_col: length mismatch");
  for (std::size_t i = 0; i < rows; ++i) at(i, j) = v[i];
}

std::vector<double> DenseMatrix::flatten_columns() const {
  std::vector<double> flat(rows * cols);
  std::size_t p = 0;
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) flat[p++] = at(i, j);
  return flat;
}

DenseMatrix DenseMatrix::from_flat_columns(std::size_t r, std::size_t c,
                                           const double* flat) {
  DenseMatrix m(r, c);
  std::size_t p = 0;
  for (std::size_t j = 0; j < c; ++j)
    for (std::size_t i = 0; i < r; ++i) m.at(i, j) = flat[p++];
  return m;
}

void DenseMatrix::validate(const std::string& what) const {
  if (data.size() != rows * cols)
    throw ShapeError(what + ": data length does not match rows*cols");
  for (double v : data)
    if (!std::isfinite(v)) throw ShapeError(what + ": non-finite entry");
}

DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
  return t;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimension mismatch");
  DenseMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j)
        c.at(i, j) += aik * b.at(k, j);
    }
  return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows)
    throw ShapeError("matmul_at_b: leading dimension mismatch");
  DenseMatrix c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k)
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = a.at(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j)
        c.at(i, j) += aki * b.at(k, j);
    }
  return c;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ShapeError("add: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ShapeError("sub: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

DenseMatrix scaled(const DenseMatrix& m, double s) {
  DenseMatrix c = m;
  for (double& v : c.data) v *= s;
  return c;
}

double frobenius_norm(const DenseMatrix& m) { return norm2(m.data); }
double max_abs(const DenseMatrix& m) { return max_abs(m.data); }

void DenseTensor3::validate(const std::string& what) const {
  if (data.size() != n1 * n2 * n3)
    throw ShapeError(what + ": data length does not match shape");
  for (double v : data)
    if (!std::isfinite(v)) throw ShapeError(what + ": non-finite entry");
}

double frobenius_norm(const DenseTensor3& t) { return norm2(t.data); }
double max_abs(const DenseTensor3& t) { return max_abs(t.data); }

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

PairIndexer::PairIndexer(std::size_t d0) : d0_(d0) {
  pairs_.reserve(d0 * (d0 - 1) / 2);
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = i + 1; j < d0; ++j) pairs_.emplace_back(i, j);
  build_table();
}

PairIndexer::PairIndexer(std::size_t d0, std::vector<Pair> pairs)
    : d0_(d0), pairs_(std::move(pairs)) {
  std::sort(pairs_.begin(), pairs_.end());
  for (const auto& [i, j] : pairs_)
    if (j <= i || j >= d0)
      throw InvariantError("PairIndexer: pair out of range or not i<j");
  for (std::size_t k = 1; k < pairs_.size(); ++k)
    if (pairs_[k] == pairs_[k - 1])
      throw InvariantError("PairIndexer: duplicate pair");
  build_table();
}

void PairIndexer::build_table() {
  table_.assign(d0_ * d0_, -1);
  for (std::size_t f = 0; f < pairs_.size(); ++f)
    table_[pairs_[f].first * d0_ + pairs_[f].second] =
        static_cast<std::ptrdiff_t>(f);
}

std::size_t PairIndexer::flat(std::size_t i, std::size_t j) const {
  if (i >= d0_ || j >= d0_ || i >= j)
    throw InvariantError("PairIndexer::flat: bad pair");
  const std::ptrdiff_t f = table_[i * d0_ + j];
  if (f < 0) throw InvariantError("PairIndexer::flat: pair not in index");
  return static_cast<std::size_t>(f);
}

PairIndexer::Pair PairIndexer::pair(std::size_t flat_index) const {
  if (flat_index >= pairs_.size())
    throw InvariantError("PairIndexer::pair: flat index out of range");
  return pairs_[flat_index];
}

bool PairIndexer::contains(std::size_t i, std::size_t j) const {
  if (i >= d0_ || j >= d0_ || i >= j) return false;
  return table_[i * d0_ + j] >= 0;
}

TripleIndexer::TripleIndexer(std::size_t d0) : d0_(d0) {
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = i + 1; j < d0; ++j)
      for (std::size_t k = j + 1; k < d0; ++k)
        triples_.push_back(Triple{i, j, k});
}

std::size_t TripleIndexer::flat(std::size_t i, std::size_t j,
                                std::size_t k) const {
  if (!(i < j && j < k && k < d0_))
    throw InvariantError("TripleIndexer::flat: bad triple");
  for (std::size_t a = 0; a < triples_.size(); ++a) {
    const Triple& t = triples_[a];
    if (t.i == i && t.j == j && t.k == k) return a;
  }
  throw InvariantError("TripleIndexer::flat: triple not found");
}

TripleIndexer::Triple TripleIndexer::triple(std::size_t flat_index) const {
  if (flat_index >= triples_.size())
    throw InvariantError("TripleIndexer::triple: flat index out of range");
  return triples_[flat_index];
}

}  // namespace subchain
