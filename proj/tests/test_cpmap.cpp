#include <qflow/cpmap.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace qflow;
using Catch::Approx;
using testutil::random_channel;

namespace {

// Definitional oracle: build the Choi matrix column by column by applying the
// map to every matrix unit, independent of the library's vectorized path.
cmat choi_by_application(const block_map& e) {
  long n = e.in_dim(), m = e.out_dim();
  cmat c = czero(m * n, m * n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      cmat eij = czero(n, n);
      eij(i, j) = 1.0;
      cmat img = e.apply_s(eij);
      for (long a = 0; a < m; ++a)
        for (long b = 0; b < m; ++b) c(a * n + i, b * n + j) = img(a, b);
    }
  return c;
}

const cmat e00 = (cmat(2, 2) << 1, 0, 0, 0).finished();
const cmat e11 = (cmat(2, 2) << 0, 0, 0, 1).finished();

block_map transpose_map(long n) {
  // not CP; built Choi-first since it has no Kraus form
  cmat c(n * n, n * n);
  c.setZero();
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      // E(e_ij) = e_ji, so C[(a,i),(b,j)] = δ_{a,j} δ_{b,i}
      c(j * n + i, i * n + j) = 1.0;
    }
  return block_map::from_choi(n, n, c);
}

}  // namespace

TEST_CASE("choi of the identity channel on M2 has the frozen entry pattern", "[cpmap]") {
  auto id2 = block_map::identity(2);
  const cmat& c = id2.choi();
  REQUIRE(c.rows() == 4);
  for (long r = 0; r < 4; ++r)
    for (long col = 0; col < 4; ++col) {
      bool corner = (r == 0 || r == 3) && (col == 0 || col == 3);
      CHECK(c(r, col) == (corner ? cplx(1) : cplx(0)));
    }
  CHECK(entry_dist(c, choi_by_application(id2)) == 0.0);
}

TEST_CASE("choi matches the definitional oracle on random maps", "[cpmap]") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 30; ++t) {
    long in = 1 + t % 3, out = 1 + (t / 3) % 3;
    auto e = random_channel(in, out, 1 + t % 4, rng);
    CHECK(entry_dist(e.choi(), choi_by_application(e)) < 1e-12);
  }
}

TEST_CASE("dephasing channel's choi is the diagonal projection pattern", "[cpmap]") {
  auto deph = block_map::from_kraus(2, 2, {e00, e11});
  cmat expect = czero(4, 4);
  expect(0, 0) = 1.0;
  expect(3, 3) = 1.0;
  CHECK(entry_dist(deph.choi(), expect) == 0.0);
  CHECK(deph.is_cp());
  CHECK(trace_preserving(deph));
}

TEST_CASE("transpose map: not CP, min choi eigenvalue -1 (oracle-checked)", "[cpmap]") {
  auto tp = transpose_map(2);
  CHECK_FALSE(tp.is_cp());
  double lib_min = min_eigenvalue(tp.choi());
  double ref_min = oracle::jacobi_min_eigenvalue(tp.choi());
  CHECK(lib_min == Approx(-1.0).margin(1e-12));
  CHECK(ref_min == Approx(-1.0).margin(1e-12));
  // it still transposes when applied through the Choi path
  cmat x = (cmat(2, 2) << 1, cplx(2, 1), cplx(0, -3), 4).finished();
  CHECK(entry_dist(tp.apply_s(x), x.transpose()) < 1e-14);
}

TEST_CASE("amplitude damping closed forms", "[cpmap]") {
  double gamma = 0.25;
  cmat a0 = (cmat(2, 2) << 1, 0, 0, std::sqrt(1 - gamma)).finished();
  cmat a1 = (cmat(2, 2) << 0, std::sqrt(gamma), 0, 0).finished();
  auto ad = block_map::from_kraus(2, 2, {a0, a1});
  CHECK(trace_preserving(ad));
  cmat out = ad.apply_s(e11);
  CHECK(out(0, 0).real() == Approx(gamma));
  CHECK(out(1, 1).real() == Approx(1 - gamma));
  // Heisenberg action on the excited-state effect
  cmat pre = ad.apply_h(e11);
  CHECK(pre(1, 1).real() == Approx(1 - gamma));
  CHECK(std::abs(pre(0, 0)) < 1e-14);
}

TEST_CASE("duality pairing holds on random subunital maps", "[cpmap]") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.3, 1.0);
  for (int t = 0; t < 40; ++t) {
    long in = 1 + t % 4, out = 1 + (t * 7) % 4;
    auto e = random_channel(in, out, 1 + t % 3, rng, u(rng));
    for (int p = 0; p < 5; ++p) {
      cmat s = oracle::random_hermitian(out, rng);
      cmat tmat = oracle::random_density(in, rng);
      CHECK(duality_residual(e, s, tmat) < 1e-12);
    }
  }
}

TEST_CASE("compose agrees with sequential application; associative", "[cpmap]") {
  std::mt19937_64 rng(31);
  auto f = random_channel(2, 3, 2, rng);
  auto g = random_channel(3, 2, 2, rng);
  auto h = random_channel(2, 2, 1, rng);
  auto gf = compose(g, f);
  for (int t = 0; t < 10; ++t) {
    cmat rho = oracle::random_density(2, rng);
    CHECK(entry_dist(gf.apply_s(rho), g.apply_s(f.apply_s(rho))) < 1e-12);
  }
  CHECK(choi_distance(compose(h, gf), compose(compose(h, g), f)) < 1e-12);
  CHECK(choi_distance(compose(g, block_map::identity(3)), g) < 1e-14);
  CHECK(choi_distance(compose(block_map::identity(2), g), g) < 1e-14);
}

TEST_CASE("tensor acts factorwise and matches kron of choi actions", "[cpmap]") {
  std::mt19937_64 rng(37);
  auto f = random_channel(2, 2, 2, rng);
  auto g = random_channel(3, 2, 1, rng);
  auto fg = tensor(f, g);
  CHECK(fg.in_dim() == 6);
  CHECK(fg.out_dim() == 4);
  for (int t = 0; t < 10; ++t) {
    cmat r1 = oracle::random_density(2, rng), r2 = oracle::random_density(3, rng);
    CHECK(entry_dist(fg.apply_s(kron(r1, r2)), kron(f.apply_s(r1), g.apply_s(r2))) < 1e-12);
  }
  // bifunctoriality (interchange with composition)
  auto f2 = random_channel(2, 2, 2, rng);
  auto g2 = random_channel(2, 3, 2, rng);
  CHECK(choi_distance(compose(tensor(f2, g2), tensor(f, g)),
                      tensor(compose(f2, f), compose(g2, g))) < 1e-10);
}

TEST_CASE("dualize is an exact involution and swaps the pictures", "[cpmap]") {
  std::mt19937_64 rng(41);
  auto e = random_channel(2, 3, 2, rng);
  auto dd = e.dual().dual();
  REQUIRE(dd.kraus_count() == e.kraus_count());
  for (long k = 0; k < e.kraus_count(); ++k)
    CHECK((dd.kraus_ops()[k] - e.kraus_ops()[k]).cwiseAbs().maxCoeff() == 0.0);  // bit-exact
  // dual's Schrödinger action is the original's Heisenberg action
  cmat x = oracle::random_hermitian(3, rng);
  CHECK(entry_dist(e.dual().apply_s(x), e.apply_h(x)) < 1e-13);
}

TEST_CASE("choi-backed maps: application, duality, dual choi relation", "[cpmap]") {
  std::mt19937_64 rng(43);
  auto e = random_channel(3, 2, 2, rng, 0.9);
  auto cb = block_map::from_choi(3, 2, e.choi());
  REQUIRE(cb.choi_backed());
  cmat rho = oracle::random_density(3, rng);
  cmat x = oracle::random_hermitian(2, rng);
  CHECK(entry_dist(cb.apply_s(rho), e.apply_s(rho)) < 1e-12);
  CHECK(entry_dist(cb.apply_h(x), e.apply_h(x)) < 1e-12);
  CHECK(entry_dist(cb.unit_image(), e.unit_image()) < 1e-12);
  // dual of the choi-backed map has the dual's choi
  CHECK(choi_distance(cb.dual(), e.dual()) < 1e-12);
  // canonical kraus reconstructs the same map with at most in*out operators
  auto comp = cb.compressed();
  CHECK_FALSE(comp.choi_backed());
  CHECK(comp.kraus_count() <= 6);
  CHECK(choi_distance(comp, e) < 1e-10);
}

TEST_CASE("kraus representation independence: unitary remixing keeps the choi", "[cpmap]") {
  std::mt19937_64 rng(47);
  auto e = random_channel(2, 2, 3, rng);
  cmat u = oracle::random_unitary(3, rng);
  std::vector<cmat> mixed(3, czero(2, 2));
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) mixed[j] += u(j, k) * e.kraus_ops()[k];
  auto e2 = block_map::from_kraus(2, 2, mixed);
  CHECK(choi_distance(e, e2) < 1e-12);
}

TEST_CASE("cp order: zero is bottom, sums dominate, antisymmetry", "[cpmap]") {
  std::mt19937_64 rng(53);
  auto f = random_channel(2, 2, 1, rng, 0.5);
  auto g = random_channel(2, 2, 2, rng, 0.4);
  auto z = block_map::zero(2, 2);
  CHECK(cp_leq(z, f));
  CHECK(cp_leq(f, add(f, g)));
  CHECK_FALSE(cp_leq(add(f, g), f));
  CHECK((cp_leq(f, f) && cp_leq(g, g)));
  // antisymmetry within tolerance
  auto f2 = f.scaled(1.0);
  CHECK((cp_leq(f, f2) && cp_leq(f2, f)));
  CHECK(choi_distance(f, f2) < 1e-14);
}

TEST_CASE("scaling and addition act linearly on the choi", "[cpmap]") {
  std::mt19937_64 rng(59);
  auto f = random_channel(2, 3, 2, rng);
  CHECK(entry_dist(f.scaled(0.25).choi(), 0.25 * f.choi()) < 1e-12);
  CHECK_THROWS_AS(f.scaled(-1.0), std::invalid_argument);
  auto g = random_channel(2, 3, 1, rng);
  CHECK(entry_dist(add(f, g).choi(), f.choi() + g.choi()) < 1e-12);
}

TEST_CASE("zero map behaviors", "[cpmap]") {
  auto z = block_map::zero(2, 3);
  CHECK(z.is_zero());
  CHECK(max_abs(z.choi()) == 0.0);
  CHECK(z.is_cp());
  CHECK(trace_nonincreasing(z));
  CHECK_FALSE(trace_preserving(z));
  auto f = block_map::identity(3);
  CHECK(compose(f, z).is_zero());
  std::mt19937_64 rng(61);
  CHECK(entry_dist(z.apply_s(oracle::random_density(2, rng)), czero(3, 3)) == 0.0);
}

TEST_CASE("unit_image equals the Heisenberg image of the identity", "[cpmap]") {
  std::mt19937_64 rng(67);
  for (int t = 0; t < 10; ++t) {
    auto e = random_channel(1 + t % 3, 1 + (t / 2) % 3, 1 + t % 3, rng);
    CHECK(entry_dist(e.unit_image(), e.apply_h(cidentity(e.out_dim()))) < 1e-13);
  }
}

TEST_CASE("shape violations throw", "[cpmap]") {
  CHECK_THROWS_AS(block_map::from_kraus(2, 2, {czero(2, 3)}), std::invalid_argument);
  CHECK_THROWS_AS(block_map::from_choi(2, 2, czero(3, 3)), std::invalid_argument);
  auto f = block_map::identity(2);
  auto g = block_map::identity(3);
  CHECK_THROWS_AS(compose(g, f), std::invalid_argument);
  CHECK_THROWS_AS(add(f, g), std::invalid_argument);
  CHECK_THROWS_AS(cp_leq(f, g), std::invalid_argument);
  CHECK_THROWS_AS(f.apply_s(czero(3, 3)), std::invalid_argument);
}

TEST_CASE("canonical kraus refuses non-CP maps", "[cpmap]") {
  CHECK_THROWS_AS(transpose_map(2).canonical_kraus(), std::invalid_argument);
}
