#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "oracles.hpp"
#include "subchain/maps.hpp"
#include "subchain/rng.hpp"
#include "subchain/types.hpp"

using namespace subchain;

namespace {

DenseMatrix mat(std::size_t r, std::size_t c, std::vector<double> data) {
  DenseMatrix m(r, c);
  m.data = std::move(data);
  return m;
}

DenseMatrix random_mat(Rng& rng, std::size_t r, std::size_t c) {
  DenseMatrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// One random point of every map, sized so nothing is square or degenerate.
std::vector<MapPoint> map_zoo(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<MapPoint> zoo;
  zoo.push_back(FactorPoint{random_mat(rng, 3, 2), random_mat(rng, 3, 4)});
  zoo.push_back(FMPoint{random_mat(rng, 2, 4), PairCoeffs::constant(4, 1.5)});
  zoo.push_back(CPPoint{random_mat(rng, 2, 2), random_mat(rng, 2, 3),
                        random_mat(rng, 2, 2)});
  zoo.push_back(
      CPDaggerPoint{random_vec(rng, 3), random_mat(rng, 3, 2), random_mat(rng, 3, 4)});
  zoo.push_back(HOFMPoint{random_mat(rng, 2, 4), TripleCoeffs::ones(4)});
  zoo.push_back(NeuFMPoint{random_mat(rng, 2, 3), random_mat(rng, 2, 2),
                           PairCoeffs::ones(3)});
  zoo.push_back(NeuMFPoint{random_mat(rng, 2, 2), random_mat(rng, 2, 3),
                           random_mat(rng, 2, 2), random_mat(rng, 2, 4),
                           random_vec(rng, 2)});
  GMFPoint g;
  g.v = rng.uniform(-1.0, 1.0);
  g.h = random_vec(rng, 2);
  g.P = random_mat(rng, 2, 3);
  g.Q = random_mat(rng, 2, 3);
  g.observed = GMFPoint::full_grid(3, 3);
  zoo.push_back(std::move(g));
  return zoo;
}

}  // namespace

TEST_CASE("two-factor product evaluates to X^T Y") {
  FactorPoint p{mat(2, 2, {1, 2, 3, 4}), mat(2, 2, {5, 6, 7, 8})};
  const DenseMatrix out = eval_mf(p);
  CHECK(out.rows == 2);
  CHECK(out.cols == 2);
  CHECK(out.at(0, 0) == doctest::Approx(26.0));
  CHECK(out.at(0, 1) == doctest::Approx(30.0));
  CHECK(out.at(1, 0) == doctest::Approx(38.0));
  CHECK(out.at(1, 1) == doctest::Approx(44.0));
}

TEST_CASE("pairwise interactions evaluate lexicographically") {
  // columns p_0=(1,0), p_1=(0,1), p_2=(2,1)
  FMPoint p{mat(2, 3, {1, 0, 2, 0, 1, 1}), PairCoeffs::ones(3)};
  const std::vector<double> y = eval_fm(p);
  REQUIRE(y.size() == 3);
  CHECK(y[0] == doctest::Approx(0.0));  // (0,1)
  CHECK(y[1] == doctest::Approx(2.0));  // (0,2)
  CHECK(y[2] == doctest::Approx(1.0));  // (1,2)

  FMPoint scaled = p;
  scaled.a = PairCoeffs::constant(3, -2.0);
  const std::vector<double> ys = eval_fm(scaled);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(ys[k] == doctest::Approx(-2.0 * y[k]));
}

TEST_CASE("order-3 product sums rank-one slices") {
  CPPoint p{mat(1, 2, {1, 2}), mat(1, 2, {3, 4}), mat(1, 2, {5, 6})};
  const DenseTensor3 t = eval_cp(p);
  CHECK(t.at(0, 0, 0) == doctest::Approx(15.0));
  CHECK(t.at(0, 0, 1) == doctest::Approx(18.0));
  CHECK(t.at(0, 1, 0) == doctest::Approx(20.0));
  CHECK(t.at(1, 1, 1) == doctest::Approx(48.0));

  // two latent slices add
  CPPoint q{mat(2, 1, {1, 1}), mat(2, 1, {1, 1}), mat(2, 1, {2, 3})};
  CHECK(eval_cp(q).at(0, 0, 0) == doctest::Approx(5.0));
}

TEST_CASE("diagonal-core product evaluates to Y^T diag(x) Z") {
  CPDaggerPoint p{{2.0, -1.0}, mat(2, 2, {1, 0, 0, 1}), mat(2, 2, {3, 4, 5, 6})};
  const DenseMatrix out = eval_cp_dagger(p);
  CHECK(out.at(0, 0) == doctest::Approx(6.0));
  CHECK(out.at(0, 1) == doctest::Approx(8.0));
  CHECK(out.at(1, 0) == doctest::Approx(-5.0));
  CHECK(out.at(1, 1) == doctest::Approx(-6.0));
}

TEST_CASE("third-order interactions evaluate per triple") {
  // d=1 keeps the triple products scalar: p = (2, 3, 4, 5)
  HOFMPoint p{mat(1, 4, {2, 3, 4, 5}), TripleCoeffs::ones(4)};
  const std::vector<double> y = eval_hofm(p);
  REQUIRE(y.size() == 4);  // triples of 4 indices
  CHECK(y[0] == doctest::Approx(24.0));   // (0,1,2)
  CHECK(y[1] == doctest::Approx(30.0));   // (0,1,3)
  CHECK(y[2] == doctest::Approx(40.0));   // (0,2,3)
  CHECK(y[3] == doctest::Approx(60.0));   // (1,2,3)
}

TEST_CASE("tower-weighted interactions are s-major") {
  // d=1: P = (2, 3), H columns h_0 = 10, h_1 = 100; single pair (0,1)
  NeuFMPoint p{mat(1, 2, {2, 3}), mat(1, 2, {10, 100}), PairCoeffs::ones(2)};
  const std::vector<double> y = eval_neufm(p);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == doctest::Approx(60.0));
  CHECK(y[1] == doctest::Approx(600.0));
}

TEST_CASE("two-tower sums obey the exchange identity") {
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    NeuMFPoint p{random_mat(rng, 3, 4), random_mat(rng, 3, 4),
                 random_mat(rng, 3, 4), random_mat(rng, 3, 4),
                 random_vec(rng, 4)};
    const DenseTensor3 out = eval_neumf(p);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        for (std::size_t k = 0; k < 4; ++k) {
          const double gap = out.at(i, i, k) + out.at(j, j, k) -
                             out.at(i, j, k) - out.at(j, i, k);
          CHECK(std::abs(gap) <= 1e-12);
        }
  }
}

TEST_CASE("generalized product evaluates observed cells only") {
  GMFPoint g;
  g.v = 3.0;  // must not affect the map output
  g.h = {1.0, 2.0};
  g.P = mat(2, 2, {1, 0, 0, 1});  // p_0=(1,0), p_1=(0,1)
  g.Q = mat(2, 2, {5, 6, 7, 8});  // q_0=(5,7), q_1=(6,8)
  g.observed = {{0, 0}, {1, 1}};
  const std::vector<double> y = eval_gmf(g);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == doctest::Approx(5.0));   // 1*1*5 + 2*0*7
  CHECK(y[1] == doctest::Approx(16.0));  // 1*0*6 + 2*1*8

  GMFPoint g2 = g;
  g2.v = -100.0;
  CHECK(oracles::max_abs_diff(eval_gmf(g2), y) == 0.0);
}

TEST_CASE("flatten and unflatten round-trip every map") {
  for (const MapPoint& p : map_zoo(7)) {
    const std::vector<double> w = flatten_point(p);
    CHECK(w.size() == input_dim(p));
    const MapPoint q = unflatten_point(p, w);
    CHECK(map_id_of(q) == map_id_of(p));
    CHECK(oracles::max_abs_diff(flatten_point(q), w) == 0.0);
    CHECK(oracles::max_abs_diff(eval_flat(q), eval_flat(p)) == 0.0);
    CHECK(eval_flat(p).size() == output_dim(p));
  }
}

TEST_CASE("jacobians match central differences in random directions") {
  Rng rng(11);
  for (const MapPoint& p : map_zoo(23)) {
    const LinearOperator jac = jacobian(p);
    CHECK(jac.in_dim == input_dim(p));
    CHECK(jac.out_dim == output_dim(p));
    const std::vector<double> w = flatten_point(p);
    for (int rep = 0; rep < 8; ++rep) {
      const std::vector<double> v = rng.unit_vector(jac.in_dim);
      const std::vector<double> jv = jac.apply(v);
      const std::vector<double> cd = oracles::central_diff_direction(p, w, v);
      double diff = 0.0, ref = 1.0;
      for (std::size_t k = 0; k < jv.size(); ++k) {
        diff += (jv[k] - cd[k]) * (jv[k] - cd[k]);
        ref += jv[k] * jv[k];
      }
      CHECK(std::sqrt(diff / ref) <= 1e-7);
    }
  }
}

TEST_CASE("jacobian adjoints satisfy <Jv,u> == <v,J^T u>") {
  Rng rng(13);
  for (const MapPoint& p : map_zoo(29)) {
    const LinearOperator jac = jacobian(p);
    for (int rep = 0; rep < 8; ++rep) {
      const std::vector<double> v = rng.unit_vector(jac.in_dim);
      const std::vector<double> u = rng.unit_vector(jac.out_dim);
      const double lhs = oracles::dot(jac.apply(v), u);
      const double rhs = oracles::dot(v, jac.apply_adjoint(u));
      CHECK(oracles::rel_err(lhs, rhs) <= 1e-12);
    }
  }
}

TEST_CASE("map names round-trip and reject unknowns") {
  for (MapId id : {MapId::mf, MapId::fm, MapId::cp, MapId::cpdagger,
                   MapId::hofm, MapId::neufm, MapId::neumf, MapId::gmf})
    CHECK(parse_map_id(map_name(id)) == id);
  CHECK_THROWS_AS(parse_map_id("nope"), SchemaError);
}

TEST_CASE("validate rejects inconsistent shapes") {
  CHECK_THROWS_AS(
      (FactorPoint{mat(2, 2, {1, 2, 3, 4}), mat(3, 2, {1, 2, 3, 4, 5, 6})})
          .validate(),
      ShapeError);
  FMPoint fm{mat(2, 3, {1, 0, 2, 0, 1, 1}), PairCoeffs::ones(4)};
  CHECK_THROWS_AS(fm.validate(), ShapeError);
  PairCoeffs zero = PairCoeffs::ones(3);
  zero.values[1] = 0.0;
  CHECK_THROWS_AS(zero.validate(), InvariantError);
  NeuMFPoint nm{mat(2, 2, {1, 2, 3, 4}), mat(2, 2, {1, 2, 3, 4}),
                mat(2, 2, {1, 2, 3, 4}), mat(2, 2, {1, 2, 3, 4}), {1.0}};
  CHECK_THROWS_AS(nm.validate(), ShapeError);
  GMFPoint g;
  g.h = {1.0, 2.0};
  g.P = mat(2, 2, {1, 0, 0, 1});
  g.Q = mat(2, 2, {1, 0, 0, 1});
  g.observed = {{2, 0}};  // row index out of range
  CHECK_THROWS_AS(g.validate(), ShapeError);
}

TEST_CASE("pair indexer is a lexicographic bijection") {
  const PairIndexer ix(5);
  REQUIRE(ix.size() == 10);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j, ++flat) {
      CHECK(ix.flat(i, j) == flat);
      CHECK(ix.pair(flat).first == i);
      CHECK(ix.pair(flat).second == j);
      CHECK(ix.contains(i, j));
    }
  CHECK_FALSE(ix.contains(2, 2));

  const PairIndexer sub(4, {{0, 2}, {1, 3}});
  CHECK(sub.size() == 2);
  CHECK(sub.flat(1, 3) == 1);
  CHECK_FALSE(sub.contains(0, 1));
}

TEST_CASE("triple indexer is a lexicographic bijection") {
  const TripleIndexer ix(5);
  REQUIRE(ix.size() == 10);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j)
      for (std::size_t k = j + 1; k < 5; ++k, ++flat) {
        CHECK(ix.flat(i, j, k) == flat);
        const TripleIndexer::Triple t = ix.triple(flat);
        CHECK(t.i == i);
        CHECK(t.j == j);
        CHECK(t.k == k);
      }
}

TEST_CASE("dense matrix helpers agree with definitions") {
  const DenseMatrix a = mat(2, 3, {1, 2, 3, 4, 5, 6});
  const DenseMatrix at = transpose(a);
  CHECK(at.rows == 3);
  CHECK(at.at(2, 1) == doctest::Approx(6.0));
  const DenseMatrix b = mat(3, 2, {1, 0, 0, 1, 1, 1});
  const DenseMatrix ab = matmul(a, b);
  CHECK(ab.at(0, 0) == doctest::Approx(4.0));
  CHECK(ab.at(1, 1) == doctest::Approx(11.0));
  const DenseMatrix atb = matmul_at_b(at, b);  // (a^T)^T b = a b
  CHECK(oracles::max_abs_diff(atb.data, ab.data) == 0.0);

  const std::vector<double> flat = a.flatten_columns();
  CHECK(flat == std::vector<double>{1, 4, 2, 5, 3, 6});
  const DenseMatrix back = DenseMatrix::from_flat_columns(2, 3, flat.data());
  CHECK(oracles::max_abs_diff(back.data, a.data) == 0.0);
}
