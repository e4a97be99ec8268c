#include "subchain/preimage.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace subchain {

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) e(i, j) = m.at(i, j);
  return e;
}

DenseMatrix from_eigen(const Eigen::MatrixXd& e) {
  DenseMatrix m(static_cast<std::size_t>(e.rows()),
                static_cast<std::size_t>(e.cols()));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      m.at(i, j) = e(static_cast<Eigen::Index>(i),
                     static_cast<Eigen::Index>(j));
  return m;
}

// A^T B = g exactly, with the min{rows,cols}-side factor put on scaled basis
// columns of norm s and the other side carrying g's rows divided by s. This
// is the one-shot split every origin solver reduces to.
std::pair<DenseMatrix, DenseMatrix> product_split(const DenseMatrix& g,
                                                  std::size_t d, double s) {
  const std::size_t m = g.rows, n = g.cols;
  if (m < n) {
    auto [bt, at] = product_split(transpose(g), d, s);
    return {at, bt};
  }
  if (d < n)
    throw DimensionError("product split needs latent dimension >= " +
                         std::to_string(n));
  DenseMatrix a(d, m), b(d, n);
  for (std::size_t j = 0; j < n; ++j) b.at(j, j) = s;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a.at(j, i) = g.at(i, j) / s;
  return {a, b};
}

// Rounding at the certified boundary can land the perturbation a few ulp past
// t; pull it back onto the ball. The image correction scales by alpha^2 (or
// alpha^3 for order-3 factors), a residual change of order 1e-15 * target.
double ball_clamp_alpha(double pnorm, double t) {
  if (!(pnorm > t) || pnorm > t * (1.0 + 1e-10)) return 1.0;
  return (t / pnorm) * (1.0 - 4e-16);
}

void require_positive_t(double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw AdmissibilityError("trust radius t must be positive and finite");
}

double pair_norm(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace

SubspaceBasis complement_basis(const DenseMatrix& columns,
                               std::size_t ambient_dim) {
  if (!columns.empty() && columns.rows != ambient_dim)
    throw ShapeError("complement_basis: column length != ambient dimension");
  SubspaceBasis out;
  out.ambient_dim = ambient_dim;
  if (columns.empty()) {
    out.input_rank = 0;
    out.basis = DenseMatrix::identity(ambient_dim);
    return out;
  }
  columns.validate("complement_basis input");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(to_eigen(columns));
  qr.setThreshold(1e-12 *
                  static_cast<double>(std::max(columns.rows, columns.cols)));
  const std::size_t rank = static_cast<std::size_t>(qr.rank());
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(ambient_dim, ambient_dim);
  out.input_rank = rank;
  out.basis = from_eigen(q.rightCols(ambient_dim - rank));
  return out;
}

std::size_t numerical_rank(const DenseMatrix& m) {
  if (m.empty()) return 0;
  const Eigen::MatrixXd e = to_eigen(m);
  const Eigen::VectorXd sv = e.jacobiSvd().singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff =
      static_cast<double>(std::max(m.rows, m.cols)) * sv(0) * 1e-12;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++r;
  return r;
}

namespace {

DenseMatrix stack_columns(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix s(a.rows, a.cols + b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) s.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < b.cols; ++j) s.at(i, a.cols + j) = b.at(i, j);
  }
  return s;
}

}  // namespace

bool dim_condition_mf(const FactorPoint& base) {
  base.validate();
  const std::size_t dim_v = numerical_rank(stack_columns(base.X, base.Y));
  return base.d() >= dim_v + std::min(base.X.cols, base.Y.cols);
}

bool rank_condition(const FactorPoint& base) {
  base.validate();
  const std::size_t rx = numerical_rank(base.X);
  const std::size_t ry = numerical_rank(base.Y);
  const std::size_t rp = numerical_rank(eval_mf(base));
  return rx == ry && ry == rp;
}

PreimageSolution solve_mf_origin(const DenseMatrix& target, std::size_t d,
                                 double t, SolveMode mode) {
  target.validate("solve_mf_origin target");
  require_positive_t(t);
  const std::size_t m = target.rows, n = target.cols;
  if (m == 0 || n == 0) throw ShapeError("solve_mf_origin: empty target");
  const std::size_t k = std::min(m, n);
  if (d < k)
    throw DimensionError("solve_mf_origin: needs d >= min(m,n) = " +
                         std::to_string(k));

  const double radius =
      t * t / (2.0 * std::sqrt(static_cast<double>(m) * static_cast<double>(n)));
  const double tnorm = frobenius_norm(target);
  const bool admissible = tnorm <= radius * (1.0 + 1e-12);
  if (mode == SolveMode::strict && !admissible)
    throw AdmissibilityError(
        "solve_mf_origin: target norm exceeds certified radius");

  const double s = t / std::sqrt(2.0 * static_cast<double>(k));
  auto [x, y] = product_split(target, d, s);
  double pnorm = pair_norm(frobenius_norm(x), frobenius_norm(y));
  if (admissible) {
    const double alpha = ball_clamp_alpha(pnorm, t);
    if (alpha != 1.0) {
      x = scaled(x, alpha);
      y = scaled(y, alpha);
      pnorm = pair_norm(frobenius_norm(x), frobenius_norm(y));
    }
  }

  PreimageSolution sol;
  FactorPoint pt{std::move(x), std::move(y)};
  sol.residual = frobenius_norm(sub(eval_mf(pt), target));
  sol.point = std::move(pt);
  sol.perturbation_norm = pnorm;
  sol.t = t;
  sol.certified_radius = radius;
  sol.guaranteed = admissible && pnorm <= t;
  return sol;
}

PreimageSolution solve_mf_at(const FactorPoint& base, const DenseMatrix& target,
                             double t, SolveMode mode) {
  base.validate();
  target.validate("solve_mf_at target");
  require_positive_t(t);
  const std::size_t m = base.X.cols, n = base.Y.cols, d = base.d();
  if (target.rows != m || target.cols != n)
    throw ShapeError("solve_mf_at: target shape does not match factors");
  const std::size_t k = std::min(m, n);

  const SubspaceBasis comp = complement_basis(stack_columns(base.X, base.Y), d);
  const std::size_t d_free = comp.basis.cols;
  if (d_free < k)
    throw DimensionError(
        "solve_mf_at: needs d - dim span(factors) >= min(m,n)");

  const double eps = std::min(t / std::sqrt(2.0 * static_cast<double>(m)),
                              t / std::sqrt(2.0 * static_cast<double>(n)));
  const double radius = eps * eps;
  const DenseMatrix gap = sub(target, eval_mf(base));
  const double gnorm = frobenius_norm(gap);
  const bool admissible = gnorm <= radius * (1.0 + 1e-12);
  if (mode == SolveMode::strict && !admissible)
    throw AdmissibilityError("solve_mf_at: target gap exceeds eps^2 radius");

  auto [wc, zc] = product_split(scaled(gap, 1.0 / (eps * eps)), d_free, 1.0);
  DenseMatrix dw = scaled(matmul(comp.basis, wc), eps);
  DenseMatrix dz = scaled(matmul(comp.basis, zc), eps);
  double pnorm = pair_norm(frobenius_norm(dw), frobenius_norm(dz));
  if (admissible) {
    const double alpha = ball_clamp_alpha(pnorm, t);
    if (alpha != 1.0) {
      dw = scaled(dw, alpha);
      dz = scaled(dz, alpha);
      pnorm = pair_norm(frobenius_norm(dw), frobenius_norm(dz));
    }
  }

  PreimageSolution sol;
  FactorPoint pt{add(base.X, dw), add(base.Y, dz)};
  sol.residual = frobenius_norm(sub(eval_mf(pt), target));
  sol.point = std::move(pt);
  sol.perturbation_norm = pnorm;
  sol.t = t;
  sol.certified_radius = radius;
  sol.guaranteed = admissible && pnorm <= t;
  return sol;
}

DenseMatrix solve_fm_tower(const std::vector<double>& y, const PairCoeffs& a,
                           std::size_t dim_free) {
  a.validate();
  const std::size_t d0 = a.d0;
  if (d0 < 2) throw ShapeError("solve_fm_tower: needs at least two columns");
  if (y.size() != d0 * (d0 - 1) / 2)
    throw ShapeError("solve_fm_tower: target length mismatch");
  if (dim_free + 1 < d0)
    throw DimensionError("solve_fm_tower: needs free dimension >= d0 - 1");

  const PairIndexer pix(d0);
  DenseMatrix w(dim_free, d0);
  for (std::size_t i = 0; i + 1 < d0; ++i)
    w.at(i, i) = std::pow(std::sqrt(0.5), static_cast<double>(d0 - 1 - i));
  // column j solves pair (i,j) against the already fixed columns below it
  for (std::size_t j = 1; j < d0; ++j)
    for (std::size_t i = 0; i < j; ++i) {
      const double aij = a.at(i, j);
      double cross = 0.0;
      for (std::size_t r = 0; r < i; ++r) cross += w.at(r, i) * w.at(r, j);
      w.at(i, j) = (y[pix.flat(i, j)] - aij * cross) / (aij * w.at(i, i));
    }
  return w;
}

double fm_tower_radius(const PairCoeffs& a) {
  return a.min_abs() / std::pow(2.0, static_cast<double>(a.d0 - 1));
}

PreimageSolution solve_fm_at(const FMPoint& base, const std::vector<double>& y,
                             double t, SolveMode mode) {
  base.validate();
  require_positive_t(t);
  const std::size_t d0 = base.d0(), d = base.d();
  if (y.size() != d0 * (d0 - 1) / 2)
    throw ShapeError("solve_fm_at: target length mismatch");
  for (double v : y)
    if (!std::isfinite(v)) throw ShapeError("solve_fm_at: non-finite target");

  const SubspaceBasis comp = complement_basis(base.P, d);
  const std::size_t d_free = comp.basis.cols;
  if (d_free + 1 < d0)
    throw DimensionError("solve_fm_at: needs d - dim span(columns) >= d0 - 1");

  const double eps = t / std::sqrt(2.0 * static_cast<double>(d0));
  const double rho = fm_tower_radius(base.a);
  const double radius = eps * eps * rho;  // sup-norm bound on the gap

  const std::vector<double> image = eval_fm(base);
  std::vector<double> gap(y.size());
  for (std::size_t f = 0; f < y.size(); ++f) gap[f] = y[f] - image[f];
  const bool admissible = max_abs(gap) <= radius * (1.0 + 1e-12);
  if (mode == SolveMode::strict && !admissible)
    throw AdmissibilityError("solve_fm_at: target gap exceeds eps^2*rho");

  std::vector<double> scaled_gap(gap.size());
  for (std::size_t f = 0; f < gap.size(); ++f)
    scaled_gap[f] = gap[f] / (eps * eps);
  const DenseMatrix wc = solve_fm_tower(scaled_gap, base.a, d_free);
  DenseMatrix dp = scaled(matmul(comp.basis, wc), eps);
  double pnorm = frobenius_norm(dp);
  if (admissible) {
    const double alpha = ball_clamp_alpha(pnorm, t);
    if (alpha != 1.0) {
      dp = scaled(dp, alpha);
      pnorm = frobenius_norm(dp);
    }
  }

  PreimageSolution sol;
  FMPoint pt{add(base.P, dp), base.a};
  const std::vector<double> out = eval_fm(pt);
  double rsq = 0.0;
  for (std::size_t f = 0; f < y.size(); ++f) {
    const double e = out[f] - y[f];
    rsq += e * e;
  }
  sol.residual = std::sqrt(rsq);
  sol.point = std::move(pt);
  sol.perturbation_norm = pnorm;
  sol.t = t;
  sol.certified_radius = radius;
  sol.guaranteed = admissible && pnorm <= t;
  return sol;
}

PreimageSolution solve_cp_origin(std::size_t n1, std::size_t n2,
                                 std::size_t n3, const DenseTensor3& target,
                                 std::size_t d, double t, SolveMode mode) {
  target.validate("solve_cp_origin target");
  require_positive_t(t);
  if (target.n1 != n1 || target.n2 != n2 || target.n3 != n3)
    throw ShapeError("solve_cp_origin: target shape mismatch");
  if (n1 == 0 || n2 == 0 || n3 == 0)
    throw ShapeError("solve_cp_origin: empty mode");

  // Exclude the largest mode: that minimizes the product of the other two.
  const std::size_t sizes[3] = {n1, n2, n3};
  std::size_t excluded = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (sizes[i] > sizes[excluded]) excluded = i;
  const std::size_t rest[2] = {excluded == 0 ? 1u : 0u,
                               excluded == 2 ? 1u : 2u};
  const std::size_t structured = rest[0], block = rest[1];
  const std::size_t ns = sizes[structured], ne = sizes[excluded],
                    nb = sizes[block];
  if (d < ns * nb)
    throw DimensionError("solve_cp_origin: needs d >= " +
                         std::to_string(ns * nb));

  const double eps = t / std::sqrt(static_cast<double>(n1 + n2 + n3));
  const double radius =
      eps * eps * eps /
      (static_cast<double>(ns) * std::sqrt(static_cast<double>(nb)));
  const double tnorm = frobenius_norm(target);
  const bool admissible = tnorm <= radius * (1.0 + 1e-12);
  if (mode == SolveMode::strict && !admissible)
    throw AdmissibilityError(
        "solve_cp_origin: target norm exceeds certified radius");

  // entry of `target` at permuted indices (structured, excluded, block)
  auto target_at = [&](std::size_t is, std::size_t ie,
                       std::size_t ib) -> double {
    std::size_t idx[3];
    idx[structured] = is;
    idx[excluded] = ie;
    idx[block] = ib;
    return target.at(idx[0], idx[1], idx[2]);
  };

  DenseMatrix fa(d, ns), fb(d, ne), fc(d, nb);
  const double inv_sqrt_nb = 1.0 / std::sqrt(static_cast<double>(nb));
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t r = 0; r < nb; ++r) fa.at(i * nb + r, i) = inv_sqrt_nb;

  const double cap = 1.0 / std::sqrt(static_cast<double>(ns));
  const double cube = eps * eps * eps;
  for (std::size_t i = 0; i < ns; ++i) {
    DenseMatrix slice(ne, nb);
    for (std::size_t j = 0; j < ne; ++j)
      for (std::size_t r = 0; r < nb; ++r)
        slice.at(j, r) = std::sqrt(static_cast<double>(nb)) *
                         target_at(i, j, r) / cube;
    auto [bi, ci] = product_split(slice, nb, cap);
    for (std::size_t j = 0; j < ne; ++j)
      for (std::size_t r = 0; r < nb; ++r)
        fb.at(i * nb + r, j) = bi.at(r, j);
    for (std::size_t kk = 0; kk < nb; ++kk)
      for (std::size_t r = 0; r < nb; ++r)
        fc.at(i * nb + r, kk) = ci.at(r, kk);
  }

  DenseMatrix scaled_parts[3];
  scaled_parts[structured] = scaled(fa, eps);
  scaled_parts[excluded] = scaled(fb, eps);
  scaled_parts[block] = scaled(fc, eps);

  double pnorm = std::sqrt(
      std::pow(frobenius_norm(scaled_parts[0]), 2) +
      std::pow(frobenius_norm(scaled_parts[1]), 2) +
      std::pow(frobenius_norm(scaled_parts[2]), 2));
  if (admissible) {
    const double alpha = ball_clamp_alpha(pnorm, t);
    if (alpha != 1.0) {
      for (auto& p : scaled_parts) p = scaled(p, alpha);
      pnorm = std::sqrt(std::pow(frobenius_norm(scaled_parts[0]), 2) +
                        std::pow(frobenius_norm(scaled_parts[1]), 2) +
                        std::pow(frobenius_norm(scaled_parts[2]), 2));
    }
  }

  PreimageSolution sol;
  CPPoint pt{scaled_parts[0], scaled_parts[1], scaled_parts[2]};
  DenseTensor3 image = eval_cp(pt);
  double rsq = 0.0;
  for (std::size_t q = 0; q < image.data.size(); ++q) {
    const double e = image.data[q] - target.data[q];
    rsq += e * e;
  }
  sol.residual = std::sqrt(rsq);
  sol.point = std::move(pt);
  sol.perturbation_norm = pnorm;
  sol.t = t;
  sol.certified_radius = radius;
  sol.guaranteed = admissible && pnorm <= t;
  return sol;
}

PreimageSolution solve_cp_dagger_at(const CPDaggerPoint& base,
                                    const DenseMatrix& target, double t,
                                    SolveMode mode) {
  base.validate();
  target.validate("solve_cp_dagger_at target");
  require_positive_t(t);
  const std::size_t d = base.d(), n2 = base.Y.cols, n3 = base.Z.cols;
  if (target.rows != n2 || target.cols != n3)
    throw ShapeError("solve_cp_dagger_at: target shape mismatch");

  // Stage 1: push zero diagonal entries into general position. Signs of the
  // existing entries are untouched and at most half the budget is spent.
  std::vector<double> xg = base.x;
  std::size_t zero_count = 0;
  double min_nonzero = std::numeric_limits<double>::infinity();
  for (double v : xg) {
    if (v == 0.0)
      ++zero_count;
    else
      min_nonzero = std::min(min_nonzero, std::abs(v));
  }
  double stage1_norm = 0.0;
  double t2 = t;
  if (zero_count > 0) {
    const double delta = std::min(t / 2.0, min_nonzero / 2.0) /
                         std::sqrt(static_cast<double>(zero_count));
    for (double& v : xg)
      if (v == 0.0) v = delta;
    stage1_norm = delta * std::sqrt(static_cast<double>(zero_count));
    t2 = t / 2.0;
  }

  double kappa_sq = std::numeric_limits<double>::infinity();
  for (double v : xg) kappa_sq = std::min(kappa_sq, std::abs(v));
  const double kappa = std::sqrt(kappa_sq);

  // sqrt|x|-scaled coordinates turn the diagonal core into a plain product.
  DenseMatrix yp(d, n2), zp(d, n3);
  std::vector<double> root(d), signed_root(d);
  for (std::size_t r = 0; r < d; ++r) {
    root[r] = std::sqrt(std::abs(xg[r]));
    signed_root[r] = (xg[r] < 0.0 ? -root[r] : root[r]);
    for (std::size_t j = 0; j < n2; ++j) yp.at(r, j) = root[r] * base.Y.at(r, j);
    for (std::size_t k = 0; k < n3; ++k)
      zp.at(r, k) = signed_root[r] * base.Z.at(r, k);
  }

  const SubspaceBasis comp = complement_basis(stack_columns(yp, zp), d);
  const std::size_t d_free = comp.basis.cols;
  if (d_free < std::min(n2, n3))
    throw DimensionError(
        "solve_cp_dagger_at: needs d - dim span(scaled factors) >= min(n2,n3)");

  const double eps =
      kappa * std::min(t2 / std::sqrt(2.0 * static_cast<double>(n2)),
                       t2 / std::sqrt(2.0 * static_cast<double>(n3)));
  const double radius = eps * eps;
  const DenseMatrix gap = sub(target, matmul_at_b(yp, zp));
  const bool admissible = frobenius_norm(gap) <= radius * (1.0 + 1e-12);
  if (mode == SolveMode::strict && !admissible)
    throw AdmissibilityError(
        "solve_cp_dagger_at: target gap exceeds scaled radius");

  auto [wc, zc] = product_split(scaled(gap, 1.0 / (eps * eps)), d_free, 1.0);
  const DenseMatrix bp = scaled(matmul(comp.basis, wc), eps);
  const DenseMatrix cp = scaled(matmul(comp.basis, zc), eps);

  // undo the sqrt|x| scaling
  DenseMatrix db(d, n2), dc(d, n3);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t j = 0; j < n2; ++j) db.at(r, j) = bp.at(r, j) / root[r];
    for (std::size_t k = 0; k < n3; ++k)
      dc.at(r, k) = cp.at(r, k) / signed_root[r];
  }
  double pert_factors = pair_norm(frobenius_norm(db), frobenius_norm(dc));
  double pnorm = pair_norm(stage1_norm, pert_factors);
  if (admissible) {
    const double alpha = ball_clamp_alpha(pnorm, t);
    if (alpha != 1.0) {
      db = scaled(db, alpha);
      dc = scaled(dc, alpha);
      pert_factors = pair_norm(frobenius_norm(db), frobenius_norm(dc));
      pnorm = pair_norm(stage1_norm, pert_factors);
    }
  }

  PreimageSolution sol;
  CPDaggerPoint pt{xg, add(base.Y, db), add(base.Z, dc)};
  sol.residual = frobenius_norm(sub(eval_cp_dagger(pt), target));
  sol.point = std::move(pt);
  sol.perturbation_norm = pnorm;
  sol.t = t;
  sol.certified_radius = radius;
  sol.guaranteed = admissible && pnorm <= t;
  return sol;
}

}  // namespace subchain
