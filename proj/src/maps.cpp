#include "subchain/maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace subchain {

MapId parse_map_id(const std::string& name) {
  if (name == "mf") return MapId::mf;
  if (name == "fm") return MapId::fm;
  if (name == "cp") return MapId::cp;
  if (name == "cpdagger") return MapId::cpdagger;
  if (name == "hofm") return MapId::hofm;
  if (name == "neufm") return MapId::neufm;
  if (name == "neumf") return MapId::neumf;
  if (name == "gmf") return MapId::gmf;
  throw SchemaError("unknown map: " + name);
}

std::string map_name(MapId id) {
  switch (id) {
    case MapId::mf: return "mf";
    case MapId::fm: return "fm";
    case MapId::cp: return "cp";
    case MapId::cpdagger: return "cpdagger";
    case MapId::hofm: return "hofm";
    case MapId::neufm: return "neufm";
    case MapId::neumf: return "neumf";
    case MapId::gmf: return "gmf";
  }
  throw SchemaError("bad map id");
}

void FactorPoint::validate() const {
  X.validate("FactorPoint.X");
  Y.validate("FactorPoint.Y");
  if (X.rows != Y.rows)
    throw ShapeError("FactorPoint: factors disagree on latent dimension");
}

PairCoeffs PairCoeffs::ones(std::size_t d0) { return constant(d0, 1.0); }

PairCoeffs PairCoeffs::constant(std::size_t d0, double value) {
  PairCoeffs a;
  a.d0 = d0;
  a.values.assign(d0 * (d0 - 1) / 2, value);
  return a;
}

double PairCoeffs::at(std::size_t i, std::size_t j) const {
  if (!(i < j && j < d0)) throw InvariantError("PairCoeffs::at: bad pair");
  // flat position of (i,j) in the full lexicographic order
  const std::size_t before = i * d0 - i * (i + 1) / 2;
  return values[before + (j - i - 1)];
}

double PairCoeffs::min_abs() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : values) m = std::min(m, std::abs(v));
  return m;
}

void PairCoeffs::validate() const {
  if (values.size() != d0 * (d0 - 1) / 2)
    throw ShapeError("PairCoeffs: length does not match d0");
  for (double v : values) {
    if (!std::isfinite(v)) throw ShapeError("PairCoeffs: non-finite value");
    if (v == 0.0)
      throw InvariantError("PairCoeffs: zero pairwise coefficient");
  }
}

void FMPoint::validate() const {
  P.validate("FMPoint.P");
  a.validate();
  if (a.d0 != P.cols)
    throw ShapeError("FMPoint: coefficient order does not match column count");
}

void CPPoint::validate() const {
  X.validate("CPPoint.X");
  Y.validate("CPPoint.Y");
  Z.validate("CPPoint.Z");
  if (X.rows != Y.rows || Y.rows != Z.rows)
    throw ShapeError("CPPoint: factors disagree on latent dimension");
}

void CPDaggerPoint::validate() const {
  Y.validate("CPDaggerPoint.Y");
  Z.validate("CPDaggerPoint.Z");
  for (double v : x)
    if (!std::isfinite(v)) throw ShapeError("CPDaggerPoint: non-finite x");
  if (Y.rows != x.size() || Z.rows != x.size())
    throw ShapeError("CPDaggerPoint: factors disagree on latent dimension");
}

TripleCoeffs TripleCoeffs::ones(std::size_t d0) {
  TripleCoeffs a;
  a.d0 = d0;
  a.values.assign(d0 * (d0 - 1) * (d0 - 2) / 6, 1.0);
  return a;
}

void TripleCoeffs::validate() const {
  if (values.size() != d0 * (d0 - 1) * (d0 - 2) / 6)
    throw ShapeError("TripleCoeffs: length does not match d0");
  for (double v : values) {
    if (!std::isfinite(v)) throw ShapeError("TripleCoeffs: non-finite value");
    if (v == 0.0) throw InvariantError("TripleCoeffs: zero coefficient");
  }
}

void HOFMPoint::validate() const {
  P.validate("HOFMPoint.P");
  a.validate();
  if (P.cols < 3) throw ShapeError("HOFMPoint: needs at least 3 columns");
  if (a.d0 != P.cols)
    throw ShapeError("HOFMPoint: coefficient order does not match columns");
}

void NeuFMPoint::validate() const {
  P.validate("NeuFMPoint.P");
  H.validate("NeuFMPoint.H");
  a.validate();
  if (P.rows != H.rows)
    throw ShapeError("NeuFMPoint: factors disagree on latent dimension");
  if (a.d0 != P.cols)
    throw ShapeError("NeuFMPoint: coefficient order does not match columns");
}

void NeuMFPoint::validate() const {
  W.validate("NeuMFPoint.W");
  X.validate("NeuMFPoint.X");
  S.validate("NeuMFPoint.S");
  Y.validate("NeuMFPoint.Y");
  for (double v : b)
    if (!std::isfinite(v)) throw ShapeError("NeuMFPoint: non-finite bias");
  const std::size_t d = W.rows;
  if (X.rows != d || S.rows != d || Y.rows != d)
    throw ShapeError("NeuMFPoint: factors disagree on latent dimension");
  if (S.cols != W.cols || b.size() != W.cols)
    throw ShapeError("NeuMFPoint: output width mismatch across W, S, b");
}

std::vector<std::pair<std::size_t, std::size_t>> GMFPoint::full_grid(
    std::size_t m, std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> d;
  d.reserve(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) d.emplace_back(i, j);
  return d;
}

void GMFPoint::validate() const {
  P.validate("GMFPoint.P");
  Q.validate("GMFPoint.Q");
  if (!std::isfinite(v)) throw ShapeError("GMFPoint: non-finite v");
  for (double t : h)
    if (!std::isfinite(t)) throw ShapeError("GMFPoint: non-finite h");
  if (P.rows != h.size() || Q.rows != h.size())
    throw ShapeError("GMFPoint: factors disagree on latent dimension");
  for (const auto& [i, j] : observed)
    if (i >= P.cols || j >= Q.cols)
      throw ShapeError("GMFPoint: observed index out of range");
}

DenseMatrix eval_mf(const FactorPoint& p) {
  p.validate();
  return matmul_at_b(p.X, p.Y);
}

namespace {

double col_dot(const DenseMatrix& a, std::size_t ca, const DenseMatrix& b,
               std::size_t cb) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows; ++r) s += a.at(r, ca) * b.at(r, cb);
  return s;
}

double col_triple(const std::vector<double>& h, const DenseMatrix& a,
                  std::size_t ca, const DenseMatrix& b, std::size_t cb) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows; ++r)
    s += h[r] * a.at(r, ca) * b.at(r, cb);
  return s;
}

double col_triple3(const DenseMatrix& a, std::size_t ca, const DenseMatrix& b,
                   std::size_t cb, const DenseMatrix& c, std::size_t cc) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows; ++r)
    s += a.at(r, ca) * b.at(r, cb) * c.at(r, cc);
  return s;
}

}  // namespace

std::vector<double> eval_fm(const FMPoint& p) {
  p.validate();
  const std::size_t d0 = p.d0();
  std::vector<double> out;
  out.reserve(d0 * (d0 - 1) / 2);
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = i + 1; j < d0; ++j)
      out.push_back(p.a.at(i, j) * col_dot(p.P, i, p.P, j));
  return out;
}

DenseTensor3 eval_cp(const CPPoint& p) {
  p.validate();
  DenseTensor3 t(p.X.cols, p.Y.cols, p.Z.cols);
  for (std::size_t i = 0; i < p.X.cols; ++i)
    for (std::size_t j = 0; j < p.Y.cols; ++j)
      for (std::size_t k = 0; k < p.Z.cols; ++k)
        t.at(i, j, k) = col_triple3(p.X, i, p.Y, j, p.Z, k);
  return t;
}

DenseMatrix eval_cp_dagger(const CPDaggerPoint& p) {
  p.validate();
  DenseMatrix out(p.Y.cols, p.Z.cols);
  for (std::size_t j = 0; j < p.Y.cols; ++j)
    for (std::size_t k = 0; k < p.Z.cols; ++k)
      out.at(j, k) = col_triple(p.x, p.Y, j, p.Z, k);
  return out;
}

std::vector<double> eval_hofm(const HOFMPoint& p) {
  p.validate();
  const std::size_t d0 = p.P.cols;
  const TripleIndexer tix(d0);
  std::vector<double> out(tix.size());
  for (std::size_t f = 0; f < tix.size(); ++f) {
    const auto t = tix.triple(f);
    out[f] = p.a.values[f] * col_triple3(p.P, t.i, p.P, t.j, p.P, t.k);
  }
  return out;
}

std::vector<double> eval_neufm(const NeuFMPoint& p) {
  p.validate();
  const std::size_t d0 = p.P.cols, h = p.H.cols;
  std::vector<double> out;
  out.reserve(h * d0 * (d0 - 1) / 2);
  for (std::size_t s = 0; s < h; ++s) {
    const std::vector<double> hs = p.H.col(s);
    for (std::size_t i = 0; i < d0; ++i)
      for (std::size_t j = i + 1; j < d0; ++j)
        out.push_back(p.a.at(i, j) * col_triple(hs, p.P, i, p.P, j));
  }
  return out;
}

DenseTensor3 eval_neumf(const NeuMFPoint& p) {
  p.validate();
  const std::size_t m = p.X.cols, n = p.Y.cols, h = p.W.cols;
  DenseTensor3 out(m, n, h);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < h; ++k)
        out.at(i, j, k) =
            col_dot(p.W, k, p.X, i) + col_dot(p.S, k, p.Y, j) + p.b[k];
  return out;
}

std::vector<double> eval_gmf(const GMFPoint& p) {
  p.validate();
  std::vector<double> out;
  out.reserve(p.observed.size());
  for (const auto& [i, j] : p.observed)
    out.push_back(col_triple(p.h, p.P, i, p.Q, j));
  return out;
}

// ---- jacobians -------------------------------------------------------------
//
// Flat layout per point type (matrices column-stacked, fields in declaration
// order):
//   mf        [vec X | vec Y]
//   fm        [vec P]
//   cp        [vec X | vec Y | vec Z]
//   cpdagger  [x | vec Y | vec Z]
//   hofm      [vec P]
//   neufm     [vec P | vec H]
//   neumf     [vec W | vec X | vec S | vec Y | b]
//   gmf       [h | vec P | vec Q]          (v is not a map coordinate)

LinearOperator jacobian_mf(const FactorPoint& p) {
  p.validate();
  const std::size_t d = p.d(), m = p.X.cols, n = p.Y.cols;
  LinearOperator op;
  op.in_dim = d * (m + n);
  op.out_dim = m * n;
  const FactorPoint base = p;
  op.apply = [base, d, m, n](const std::vector<double>& v) {
    const DenseMatrix dx = DenseMatrix::from_flat_columns(d, m, v.data());
    const DenseMatrix dy =
        DenseMatrix::from_flat_columns(d, n, v.data() + d * m);
    const DenseMatrix r = add(matmul_at_b(dx, base.Y), matmul_at_b(base.X, dy));
    return r.flatten_columns();  // vec of r, columns stacked
  };
  op.apply_adjoint = [base, d, m, n](const std::vector<double>& w) {
    // w is vec(W) for an m x n matrix W; gradient pieces Y W^T and X W
    DenseMatrix wm(m, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) wm.at(i, j) = w[j * m + i];
    const DenseMatrix gx = matmul(base.Y, transpose(wm));
    const DenseMatrix gy = matmul(base.X, wm);
    std::vector<double> out = gx.flatten_columns();
    const std::vector<double> tail = gy.flatten_columns();
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
  };
  return op;
}

LinearOperator jacobian_fm(const FMPoint& p) {
  p.validate();
  const std::size_t d = p.d(), d0 = p.d0();
  const PairIndexer pix(d0);
  LinearOperator op;
  op.in_dim = d * d0;
  op.out_dim = pix.size();
  const FMPoint base = p;
  op.apply = [base, d, d0, pix](const std::vector<double>& v) {
    const DenseMatrix dp = DenseMatrix::from_flat_columns(d, d0, v.data());
    std::vector<double> out(pix.size());
    for (std::size_t f = 0; f < pix.size(); ++f) {
      const auto [i, j] = pix.pair(f);
      out[f] = base.a.values[f] *
               (col_dot(dp, i, base.P, j) + col_dot(base.P, i, dp, j));
    }
    return out;
  };
  op.apply_adjoint = [base, d, d0, pix](const std::vector<double>& w) {
    DenseMatrix g(d, d0);
    for (std::size_t f = 0; f < pix.size(); ++f) {
      const auto [i, j] = pix.pair(f);
      const double c = w[f] * base.a.values[f];
      for (std::size_t r = 0; r < d; ++r) {
        g.at(r, i) += c * base.P.at(r, j);
        g.at(r, j) += c * base.P.at(r, i);
      }
    }
    return g.flatten_columns();
  };
  return op;
}

LinearOperator jacobian_cp(const CPPoint& p) {
  p.validate();
  const std::size_t d = p.d(), n1 = p.X.cols, n2 = p.Y.cols, n3 = p.Z.cols;
  LinearOperator op;
  op.in_dim = d * (n1 + n2 + n3);
  op.out_dim = n1 * n2 * n3;
  const CPPoint base = p;
  op.apply = [base, d, n1, n2, n3](const std::vector<double>& v) {
    const DenseMatrix dx = DenseMatrix::from_flat_columns(d, n1, v.data());
    const DenseMatrix dy =
        DenseMatrix::from_flat_columns(d, n2, v.data() + d * n1);
    const DenseMatrix dz =
        DenseMatrix::from_flat_columns(d, n3, v.data() + d * (n1 + n2));
    std::vector<double> out(n1 * n2 * n3);
    std::size_t t = 0;
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j)
        for (std::size_t k = 0; k < n3; ++k, ++t) {
          double s = 0.0;
          for (std::size_t r = 0; r < d; ++r)
            s += dx.at(r, i) * base.Y.at(r, j) * base.Z.at(r, k) +
                 base.X.at(r, i) * dy.at(r, j) * base.Z.at(r, k) +
                 base.X.at(r, i) * base.Y.at(r, j) * dz.at(r, k);
          out[t] = s;
        }
    return out;
  };
  op.apply_adjoint = [base, d, n1, n2, n3](const std::vector<double>& w) {
    DenseMatrix gx(d, n1), gy(d, n2), gz(d, n3);
    std::size_t t = 0;
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j)
        for (std::size_t k = 0; k < n3; ++k, ++t) {
          const double c = w[t];
          if (c == 0.0) continue;
          for (std::size_t r = 0; r < d; ++r) {
            gx.at(r, i) += c * base.Y.at(r, j) * base.Z.at(r, k);
            gy.at(r, j) += c * base.X.at(r, i) * base.Z.at(r, k);
            gz.at(r, k) += c * base.X.at(r, i) * base.Y.at(r, j);
          }
        }
    std::vector<double> out = gx.flatten_columns();
    const std::vector<double> ty = gy.flatten_columns();
    const std::vector<double> tz = gz.flatten_columns();
    out.insert(out.end(), ty.begin(), ty.end());
    out.insert(out.end(), tz.begin(), tz.end());
    return out;
  };
  return op;
}

LinearOperator jacobian_cp_dagger(const CPDaggerPoint& p) {
  p.validate();
  const std::size_t d = p.d(), n2 = p.Y.cols, n3 = p.Z.cols;
  LinearOperator op;
  op.in_dim = d + d * (n2 + n3);
  op.out_dim = n2 * n3;
  const CPDaggerPoint base = p;
  op.apply = [base, d, n2, n3](const std::vector<double>& v) {
    const double* dx = v.data();
    const DenseMatrix dy = DenseMatrix::from_flat_columns(d, n2, v.data() + d);
    const DenseMatrix dz =
        DenseMatrix::from_flat_columns(d, n3, v.data() + d + d * n2);
    std::vector<double> out(n2 * n3);
    // output order mirrors eval_flat: the n2 x n3 matrix columns-stacked
    std::size_t t = 0;
    for (std::size_t k = 0; k < n3; ++k)
      for (std::size_t j = 0; j < n2; ++j, ++t) {
        double s = 0.0;
        for (std::size_t r = 0; r < d; ++r)
          s += dx[r] * base.Y.at(r, j) * base.Z.at(r, k) +
               base.x[r] * dy.at(r, j) * base.Z.at(r, k) +
               base.x[r] * base.Y.at(r, j) * dz.at(r, k);
        out[t] = s;
      }
    return out;
  };
  op.apply_adjoint = [base, d, n2, n3](const std::vector<double>& w) {
    std::vector<double> gx(d, 0.0);
    DenseMatrix gy(d, n2), gz(d, n3);
    std::size_t t = 0;
    for (std::size_t k = 0; k < n3; ++k)
      for (std::size_t j = 0; j < n2; ++j, ++t) {
        const double c = w[t];
        if (c == 0.0) continue;
        for (std::size_t r = 0; r < d; ++r) {
          gx[r] += c * base.Y.at(r, j) * base.Z.at(r, k);
          gy.at(r, j) += c * base.x[r] * base.Z.at(r, k);
          gz.at(r, k) += c * base.x[r] * base.Y.at(r, j);
        }
      }
    std::vector<double> out = gx;
    const std::vector<double> ty = gy.flatten_columns();
    const std::vector<double> tz = gz.flatten_columns();
    out.insert(out.end(), ty.begin(), ty.end());
    out.insert(out.end(), tz.begin(), tz.end());
    return out;
  };
  return op;
}

LinearOperator jacobian_hofm(const HOFMPoint& p) {
  p.validate();
  const std::size_t d = p.P.rows, d0 = p.P.cols;
  const TripleIndexer tix(d0);
  LinearOperator op;
  op.in_dim = d * d0;
  op.out_dim = tix.size();
  const HOFMPoint base = p;
  op.apply = [base, d, d0, tix](const std::vector<double>& v) {
    const DenseMatrix dp = DenseMatrix::from_flat_columns(d, d0, v.data());
    std::vector<double> out(tix.size());
    for (std::size_t f = 0; f < tix.size(); ++f) {
      const auto t = tix.triple(f);
      double s = 0.0;
      for (std::size_t r = 0; r < d; ++r)
        s += dp.at(r, t.i) * base.P.at(r, t.j) * base.P.at(r, t.k) +
             base.P.at(r, t.i) * dp.at(r, t.j) * base.P.at(r, t.k) +
             base.P.at(r, t.i) * base.P.at(r, t.j) * dp.at(r, t.k);
      out[f] = base.a.values[f] * s;
    }
    return out;
  };
  op.apply_adjoint = [base, d, d0, tix](const std::vector<double>& w) {
    DenseMatrix g(d, d0);
    for (std::size_t f = 0; f < tix.size(); ++f) {
      const auto t = tix.triple(f);
      const double c = w[f] * base.a.values[f];
      if (c == 0.0) continue;
      for (std::size_t r = 0; r < d; ++r) {
        g.at(r, t.i) += c * base.P.at(r, t.j) * base.P.at(r, t.k);
        g.at(r, t.j) += c * base.P.at(r, t.i) * base.P.at(r, t.k);
        g.at(r, t.k) += c * base.P.at(r, t.i) * base.P.at(r, t.j);
      }
    }
    return g.flatten_columns();
  };
  return op;
}

LinearOperator jacobian_neufm(const NeuFMPoint& p) {
  p.validate();
  const std::size_t d = p.P.rows, d0 = p.P.cols, h = p.H.cols;
  const PairIndexer pix(d0);
  LinearOperator op;
  op.in_dim = d * (d0 + h);
  op.out_dim = h * pix.size();
  const NeuFMPoint base = p;
  op.apply = [base, d, d0, h, pix](const std::vector<double>& v) {
    const DenseMatrix dp = DenseMatrix::from_flat_columns(d, d0, v.data());
    const DenseMatrix dh =
        DenseMatrix::from_flat_columns(d, h, v.data() + d * d0);
    std::vector<double> out(h * pix.size());
    std::size_t t = 0;
    for (std::size_t s = 0; s < h; ++s)
      for (std::size_t f = 0; f < pix.size(); ++f, ++t) {
        const auto [i, j] = pix.pair(f);
        double acc = 0.0;
        for (std::size_t r = 0; r < d; ++r)
          acc += dh.at(r, s) * base.P.at(r, i) * base.P.at(r, j) +
                 base.H.at(r, s) * dp.at(r, i) * base.P.at(r, j) +
                 base.H.at(r, s) * base.P.at(r, i) * dp.at(r, j);
        out[t] = base.a.values[f] * acc;
      }
    return out;
  };
  op.apply_adjoint = [base, d, d0, h, pix](const std::vector<double>& w) {
    DenseMatrix gp(d, d0), gh(d, h);
    std::size_t t = 0;
    for (std::size_t s = 0; s < h; ++s)
      for (std::size_t f = 0; f < pix.size(); ++f, ++t) {
        const auto [i, j] = pix.pair(f);
        const double c = w[t] * base.a.values[f];
        if (c == 0.0) continue;
        for (std::size_t r = 0; r < d; ++r) {
          gh.at(r, s) += c * base.P.at(r, i) * base.P.at(r, j);
          gp.at(r, i) += c * base.H.at(r, s) * base.P.at(r, j);
          gp.at(r, j) += c * base.H.at(r, s) * base.P.at(r, i);
        }
      }
    std::vector<double> out = gp.flatten_columns();
    const std::vector<double> th = gh.flatten_columns();
    out.insert(out.end(), th.begin(), th.end());
    return out;
  };
  return op;
}

LinearOperator jacobian_neumf(const NeuMFPoint& p) {
  p.validate();
  const std::size_t d = p.W.rows, h = p.W.cols, m = p.X.cols, n = p.Y.cols;
  LinearOperator op;
  op.in_dim = d * (2 * h + m + n) + h;
  op.out_dim = m * n * h;
  const NeuMFPoint base = p;
  op.apply = [base, d, h, m, n](const std::vector<double>& v) {
    const DenseMatrix dw = DenseMatrix::from_flat_columns(d, h, v.data());
    const DenseMatrix dx =
        DenseMatrix::from_flat_columns(d, m, v.data() + d * h);
    const DenseMatrix ds =
        DenseMatrix::from_flat_columns(d, h, v.data() + d * (h + m));
    const DenseMatrix dy =
        DenseMatrix::from_flat_columns(d, n, v.data() + d * (2 * h + m));
    const double* db = v.data() + d * (2 * h + m + n);
    std::vector<double> out(m * n * h);
    std::size_t t = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < h; ++k, ++t)
          out[t] = col_dot(dw, k, base.X, i) + col_dot(base.W, k, dx, i) +
                   col_dot(ds, k, base.Y, j) + col_dot(base.S, k, dy, j) +
                   db[k];
    return out;
  };
  op.apply_adjoint = [base, d, h, m, n](const std::vector<double>& w) {
    DenseMatrix gw(d, h), gx(d, m), gs(d, h), gy(d, n);
    std::vector<double> gb(h, 0.0);
    std::size_t t = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < h; ++k, ++t) {
          const double c = w[t];
          if (c == 0.0) continue;
          for (std::size_t r = 0; r < d; ++r) {
            gw.at(r, k) += c * base.X.at(r, i);
            gx.at(r, i) += c * base.W.at(r, k);
            gs.at(r, k) += c * base.Y.at(r, j);
            gy.at(r, j) += c * base.S.at(r, k);
          }
          gb[k] += c;
        }
    std::vector<double> out = gw.flatten_columns();
    for (const auto& part :
         {gx.flatten_columns(), gs.flatten_columns(), gy.flatten_columns(), gb})
      out.insert(out.end(), part.begin(), part.end());
    return out;
  };
  return op;
}

LinearOperator jacobian_gmf(const GMFPoint& p) {
  p.validate();
  const std::size_t d = p.h.size(), m = p.P.cols, n = p.Q.cols;
  LinearOperator op;
  op.in_dim = d * (1 + m + n);
  op.out_dim = p.observed.size();
  const GMFPoint base = p;
  op.apply = [base, d](const std::vector<double>& v) {
    const double* dh = v.data();
    const DenseMatrix dp =
        DenseMatrix::from_flat_columns(d, base.P.cols, v.data() + d);
    const DenseMatrix dq = DenseMatrix::from_flat_columns(
        d, base.Q.cols, v.data() + d + d * base.P.cols);
    std::vector<double> out(base.observed.size());
    for (std::size_t t = 0; t < base.observed.size(); ++t) {
      const auto [i, j] = base.observed[t];
      double s = 0.0;
      for (std::size_t r = 0; r < d; ++r)
        s += dh[r] * base.P.at(r, i) * base.Q.at(r, j) +
             base.h[r] * dp.at(r, i) * base.Q.at(r, j) +
             base.h[r] * base.P.at(r, i) * dq.at(r, j);
      out[t] = s;
    }
    return out;
  };
  op.apply_adjoint = [base, d](const std::vector<double>& w) {
    std::vector<double> gh(d, 0.0);
    DenseMatrix gp(d, base.P.cols), gq(d, base.Q.cols);
    for (std::size_t t = 0; t < base.observed.size(); ++t) {
      const auto [i, j] = base.observed[t];
      const double c = w[t];
      if (c == 0.0) continue;
      for (std::size_t r = 0; r < d; ++r) {
        gh[r] += c * base.P.at(r, i) * base.Q.at(r, j);
        gp.at(r, i) += c * base.h[r] * base.Q.at(r, j);
        gq.at(r, j) += c * base.h[r] * base.P.at(r, i);
      }
    }
    std::vector<double> out = gh;
    const std::vector<double> tp = gp.flatten_columns();
    const std::vector<double> tq = gq.flatten_columns();
    out.insert(out.end(), tp.begin(), tp.end());
    out.insert(out.end(), tq.begin(), tq.end());
    return out;
  };
  return op;
}

// ---- uniform access --------------------------------------------------------

namespace {

std::vector<double> concat(std::initializer_list<std::vector<double>> parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

std::size_t input_dim(const MapPoint& p) {
  return flatten_point(p).size();
}

std::size_t output_dim(const MapPoint& p) {
  return std::visit(
      [](const auto& pt) -> std::size_t {
        using T = std::decay_t<decltype(pt)>;
        if constexpr (std::is_same_v<T, FactorPoint>)
          return pt.X.cols * pt.Y.cols;
        else if constexpr (std::is_same_v<T, FMPoint>)
          return pt.d0() * (pt.d0() - 1) / 2;
        else if constexpr (std::is_same_v<T, CPPoint>)
          return pt.X.cols * pt.Y.cols * pt.Z.cols;
        else if constexpr (std::is_same_v<T, CPDaggerPoint>)
          return pt.Y.cols * pt.Z.cols;
        else if constexpr (std::is_same_v<T, HOFMPoint>)
          return TripleIndexer(pt.P.cols).size();
        else if constexpr (std::is_same_v<T, NeuFMPoint>)
          return pt.H.cols * pt.P.cols * (pt.P.cols - 1) / 2;
        else if constexpr (std::is_same_v<T, NeuMFPoint>)
          return pt.X.cols * pt.Y.cols * pt.W.cols;
        else
          return pt.observed.size();
      },
      p);
}

std::vector<double> flatten_point(const MapPoint& p) {
  return std::visit(
      [](const auto& pt) -> std::vector<double> {
        using T = std::decay_t<decltype(pt)>;
        if constexpr (std::is_same_v<T, FactorPoint>)
          return concat({pt.X.flatten_columns(), pt.Y.flatten_columns()});
        else if constexpr (std::is_same_v<T, FMPoint>)
          return pt.P.flatten_columns();
        else if constexpr (std::is_same_v<T, CPPoint>)
          return concat({pt.X.flatten_columns(), pt.Y.flatten_columns(),
                         pt.Z.flatten_columns()});
        else if constexpr (std::is_same_v<T, CPDaggerPoint>)
          return concat({pt.x, pt.Y.flatten_columns(), pt.Z.flatten_columns()});
        else if constexpr (std::is_same_v<T, HOFMPoint>)
          return pt.P.flatten_columns();
        else if constexpr (std::is_same_v<T, NeuFMPoint>)
          return concat({pt.P.flatten_columns(), pt.H.flatten_columns()});
        else if constexpr (std::is_same_v<T, NeuMFPoint>)
          return concat({pt.W.flatten_columns(), pt.X.flatten_columns(),
                         pt.S.flatten_columns(), pt.Y.flatten_columns(), pt.b});
        else
          return concat({pt.h, pt.P.flatten_columns(), pt.Q.flatten_columns()});
      },
      p);
}

MapPoint unflatten_point(const MapPoint& shape_like,
                         const std::vector<double>& flat) {
  MapPoint out = shape_like;
  std::visit(
      [&flat](auto& pt) {
        using T = std::decay_t<decltype(pt)>;
        const double* v = flat.data();
        if constexpr (std::is_same_v<T, FactorPoint>) {
          const std::size_t d = pt.X.rows;
          pt.X = DenseMatrix::from_flat_columns(d, pt.X.cols, v);
          pt.Y = DenseMatrix::from_flat_columns(d, pt.Y.cols, v + d * pt.X.cols);
        } else if constexpr (std::is_same_v<T, FMPoint>) {
          pt.P = DenseMatrix::from_flat_columns(pt.P.rows, pt.P.cols, v);
        } else if constexpr (std::is_same_v<T, CPPoint>) {
          const std::size_t d = pt.X.rows;
          pt.X = DenseMatrix::from_flat_columns(d, pt.X.cols, v);
          pt.Y = DenseMatrix::from_flat_columns(d, pt.Y.cols, v + d * pt.X.cols);
          pt.Z = DenseMatrix::from_flat_columns(
              d, pt.Z.cols, v + d * (pt.X.cols + pt.Y.cols));
        } else if constexpr (std::is_same_v<T, CPDaggerPoint>) {
          const std::size_t d = pt.x.size();
          pt.x.assign(v, v + d);
          pt.Y = DenseMatrix::from_flat_columns(d, pt.Y.cols, v + d);
          pt.Z = DenseMatrix::from_flat_columns(d, pt.Z.cols,
                                                v + d + d * pt.Y.cols);
        } else if constexpr (std::is_same_v<T, HOFMPoint>) {
          pt.P = DenseMatrix::from_flat_columns(pt.P.rows, pt.P.cols, v);
        } else if constexpr (std::is_same_v<T, NeuFMPoint>) {
          const std::size_t d = pt.P.rows;
          pt.P = DenseMatrix::from_flat_columns(d, pt.P.cols, v);
          pt.H = DenseMatrix::from_flat_columns(d, pt.H.cols, v + d * pt.P.cols);
        } else if constexpr (std::is_same_v<T, NeuMFPoint>) {
          const std::size_t d = pt.W.rows;
          std::size_t off = 0;
          pt.W = DenseMatrix::from_flat_columns(d, pt.W.cols, v + off);
          off += d * pt.W.cols;
          pt.X = DenseMatrix::from_flat_columns(d, pt.X.cols, v + off);
          off += d * pt.X.cols;
          pt.S = DenseMatrix::from_flat_columns(d, pt.S.cols, v + off);
          off += d * pt.S.cols;
          pt.Y = DenseMatrix::from_flat_columns(d, pt.Y.cols, v + off);
          off += d * pt.Y.cols;
          pt.b.assign(v + off, v + off + pt.b.size());
        } else {  // GMFPoint
          const std::size_t d = pt.h.size();
          pt.h.assign(v, v + d);
          pt.P = DenseMatrix::from_flat_columns(d, pt.P.cols, v + d);
          pt.Q = DenseMatrix::from_flat_columns(d, pt.Q.cols,
                                                v + d + d * pt.P.cols);
        }
      },
      out);
  return out;
}

std::vector<double> eval_flat(const MapPoint& p) {
  return std::visit(
      [](const auto& pt) -> std::vector<double> {
        using T = std::decay_t<decltype(pt)>;
        if constexpr (std::is_same_v<T, FactorPoint>) {
          // vec of the m x n product, columns stacked
          return eval_mf(pt).flatten_columns();
        } else if constexpr (std::is_same_v<T, FMPoint>)
          return eval_fm(pt);
        else if constexpr (std::is_same_v<T, CPPoint>)
          return eval_cp(pt).data;
        else if constexpr (std::is_same_v<T, CPDaggerPoint>) {
          return eval_cp_dagger(pt).flatten_columns();
        } else if constexpr (std::is_same_v<T, HOFMPoint>)
          return eval_hofm(pt);
        else if constexpr (std::is_same_v<T, NeuFMPoint>)
          return eval_neufm(pt);
        else if constexpr (std::is_same_v<T, NeuMFPoint>)
          return eval_neumf(pt).data;
        else
          return eval_gmf(pt);
      },
      p);
}

LinearOperator jacobian(const MapPoint& p) {
  return std::visit(
      [](const auto& pt) -> LinearOperator {
        using T = std::decay_t<decltype(pt)>;
        if constexpr (std::is_same_v<T, FactorPoint>)
          return jacobian_mf(pt);
        else if constexpr (std::is_same_v<T, FMPoint>)
          return jacobian_fm(pt);
        else if constexpr (std::is_same_v<T, CPPoint>)
          return jacobian_cp(pt);
        else if constexpr (std::is_same_v<T, CPDaggerPoint>)
          return jacobian_cp_dagger(pt);
        else if constexpr (std::is_same_v<T, HOFMPoint>)
          return jacobian_hofm(pt);
        else if constexpr (std::is_same_v<T, NeuFMPoint>)
          return jacobian_neufm(pt);
        else if constexpr (std::is_same_v<T, NeuMFPoint>)
          return jacobian_neumf(pt);
        else
          return jacobian_gmf(pt);
      },
      p);
}

MapId map_id_of(const MapPoint& p) {
  return std::visit(
      [](const auto& pt) -> MapId {
        using T = std::decay_t<decltype(pt)>;
        if constexpr (std::is_same_v<T, FactorPoint>) return MapId::mf;
        else if constexpr (std::is_same_v<T, FMPoint>) return MapId::fm;
        else if constexpr (std::is_same_v<T, CPPoint>) return MapId::cp;
        else if constexpr (std::is_same_v<T, CPDaggerPoint>)
          return MapId::cpdagger;
        else if constexpr (std::is_same_v<T, HOFMPoint>) return MapId::hofm;
        else if constexpr (std::is_same_v<T, NeuFMPoint>) return MapId::neufm;
        else if constexpr (std::is_same_v<T, NeuMFPoint>) return MapId::neumf;
        else return MapId::gmf;
      },
      p);
}

}  // namespace subchain
