#include <qflow/arrow.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace qflow;
using Catch::Approx;
using testutil::random_channel;
using testutil::random_effect;
using testutil::random_state;
using testutil::random_subnormal_arrow;

namespace {

// Independent oracle for the whole block-matrix calculus: amalgamate an
// arrow into ONE channel on the direct-sum space ⊕_j C^{d_j}, with Kraus
// operators ι_i ∘ A ∘ π_j for every Kraus operator A of every block (i,j).
// Applying it to a block-diagonal density matrix must reproduce the
// blockwise action exactly.
std::vector<long> offsets_of(const signature& s) {
  std::vector<long> off{0};
  for (long d : s.finite_dims()) off.push_back(off.back() + d);
  return off;
}

std::vector<cmat> amalgamated_kraus(const qarrow& f) {
  auto so = offsets_of(f.source()), to = offsets_of(f.target());
  long ds = so.back(), dt = to.back();
  std::vector<cmat> big;
  for (long i = 0; i < f.target().comp_count(); ++i)
    for (long j = 0; j < f.source().comp_count(); ++j) {
      const block_map& bm = f.block(i, j);
      if (bm.is_zero()) continue;
      auto ops = bm.choi_backed() ? bm.canonical_kraus() : bm.kraus_ops();
      for (const cmat& a : ops) {
        cmat full = czero(dt, ds);
        full.block(to[i], so[j], a.rows(), a.cols()) = a;
        big.push_back(full);
      }
    }
  return big;
}

cmat embed_state(const state_vector& v) {
  auto off = offsets_of(v.sig);
  cmat rho = czero(off.back(), off.back());
  for (const auto& [loc, m] : v.parts) rho.block(off[loc.comp], off[loc.comp], m.rows(), m.cols()) = m;
  return rho;
}

}  // namespace

TEST_CASE("blockwise application matches the amalgamated direct-sum channel", "[arrow][oracle]") {
  std::mt19937_64 rng(101);
  signature src = signature::finite({2, 1, 3});
  signature tgt = signature::finite({2, 2});
  for (int t = 0; t < 10; ++t) {
    qarrow f = random_subnormal_arrow(src, tgt, rng, 0.9);
    state_vector s = random_state(src, rng);
    cmat big_in = embed_state(s);
    cmat big_out = czero(4, 4);
    for (const cmat& b : amalgamated_kraus(f)) big_out += b * big_in * b.adjoint();

    state_vector out = apply(f, s);
    cmat blockwise = embed_state(out);
    CHECK(entry_dist(big_out, blockwise) < 1e-12);
    // Everything off the diagonal blocks of the amalgamated output vanishes.
    auto off = offsets_of(tgt);
    cmat mask = big_out;
    for (long c = 0; c < tgt.comp_count(); ++c)
      mask.block(off[c], off[c], tgt.dim(c), tgt.dim(c)).setZero();
    CHECK(max_abs(mask) < 1e-14);
  }
}

TEST_CASE("column subnormalization equals subunitality of the amalgamated channel",
          "[arrow][oracle]") {
  std::mt19937_64 rng(102);
  signature src = signature::finite({2, 2});
  signature tgt = signature::finite({1, 2, 1});
  qarrow ok = random_subnormal_arrow(src, tgt, rng, 1.0);
  qarrow bad = random_subnormal_arrow(src, tgt, rng, 1.25);
  CHECK(arrow_trace_nonincreasing(ok));
  CHECK_FALSE(arrow_trace_nonincreasing(bad));

  auto unit_of = [](const qarrow& f) {
    auto ops = amalgamated_kraus(f);
    cmat u = czero(4, 4);
    for (const cmat& b : ops) u += b.adjoint() * b;
    return u;
  };
  CHECK(loewner_leq(unit_of(ok), cidentity(4)));
  CHECK_FALSE(loewner_leq(unit_of(bad), cidentity(4)));
}

TEST_CASE("identity and composition satisfy the category laws", "[arrow]") {
  std::mt19937_64 rng(103);
  signature a = signature::finite({2, 1});
  signature b = signature::finite({1, 2});
  signature c = signature::finite({3});
  signature d = signature::finite({2, 2});
  qarrow f = random_subnormal_arrow(a, b, rng, 0.95);
  qarrow g = random_subnormal_arrow(b, c, rng, 0.9);
  qarrow h = random_subnormal_arrow(c, d, rng, 0.85);

  CHECK(arrow_entry_dist(compose(identity(b), f), f) < 1e-14);
  CHECK(arrow_entry_dist(compose(f, identity(a)), f) < 1e-14);
  CHECK(arrow_entry_dist(compose(compose(h, g), f), compose(h, compose(g, f))) < 1e-12);
  CHECK_THROWS_AS(compose(f, g), std::invalid_argument);

  // Composition preserves the trace-nonincrease invariant.
  CHECK(arrow_trace_nonincreasing(compose(g, f)));
}

TEST_CASE("injections and copairing satisfy the coproduct laws", "[arrow]") {
  std::mt19937_64 rng(104);
  signature a = signature::finite({2});
  signature b = signature::finite({1, 2});
  signature tgt = signature::finite({2, 1});
  qarrow f = random_subnormal_arrow(a, tgt, rng, 0.9);
  qarrow g = random_subnormal_arrow(b, tgt, rng, 0.9);

  qarrow pair = copair({f, g});
  CHECK(pair.source() == direct_sum(a, b));
  CHECK(arrow_entry_dist(compose(pair, injection({a, b}, 0)), f) < 1e-14);
  CHECK(arrow_entry_dist(compose(pair, injection({a, b}, 1)), g) < 1e-14);

  // Uniqueness: any h out of the sum is the copairing of its restrictions.
  qarrow h = random_subnormal_arrow(direct_sum(a, b), tgt, rng, 0.8);
  qarrow rebuilt = copair({compose(h, injection({a, b}, 0)), compose(h, injection({a, b}, 1))});
  CHECK(arrow_entry_dist(rebuilt, h) < 1e-14);

  signature other = signature::finite({3});
  qarrow k = random_subnormal_arrow(a, other, rng, 0.9);
  CHECK_THROWS_AS(copair({f, k}), std::invalid_argument);
}

TEST_CASE("block-diagonal sums place components on the diagonal", "[arrow]") {
  std::mt19937_64 rng(105);
  signature a = signature::finite({2});
  signature b = signature::finite({1, 2});
  qarrow f = random_subnormal_arrow(a, a, rng, 0.9);
  qarrow g = random_subnormal_arrow(b, b, rng, 0.9);
  qarrow s = dsum_arrow({f, g});
  CHECK(s.source() == direct_sum(a, b));
  CHECK(s.target() == direct_sum(a, b));
  CHECK(choi_distance(s.block(0, 0), f.block(0, 0)) < 1e-14);
  CHECK(choi_distance(s.block(1, 1), g.block(0, 0)) < 1e-14);
  CHECK(choi_distance(s.block(2, 2), g.block(1, 1)) < 1e-14);
  CHECK(s.block(0, 1).is_zero());
  CHECK(s.block(1, 0).is_zero());
  CHECK(s.block(2, 0).is_zero());
}

TEST_CASE("tensor of arrows is factorwise and satisfies interchange", "[arrow]") {
  std::mt19937_64 rng(106);
  signature a = signature::finite({2, 1});
  signature b = signature::finite({2});
  signature c = signature::finite({1, 1});
  qarrow f = random_subnormal_arrow(a, b, rng, 0.9);
  qarrow f2 = random_subnormal_arrow(b, b, rng, 0.9);
  qarrow g = random_subnormal_arrow(c, b, rng, 0.9);
  qarrow g2 = random_subnormal_arrow(b, c, rng, 0.9);

  qarrow fg = tensor_arrow(f, g);
  CHECK(fg.source() == tensor(a, c));
  CHECK(fg.target() == tensor(b, b));
  // Block ((0,0) , (1,1)) of f⊗g is f_{0,1} ⊗ g_{0,1} in the a-major layout.
  CHECK(choi_distance(fg.block(0, 1 * 2 + 1), tensor(f.block(0, 1), g.block(0, 1))) < 1e-13);

  qarrow lhs = compose(tensor_arrow(f2, g2), fg);
  qarrow rhs = tensor_arrow(compose(f2, f), compose(g2, g));
  CHECK(arrow_entry_dist(lhs, rhs) < 1e-11);

  CHECK(arrow_entry_dist(tensor_arrow(identity(a), identity(c)), identity(tensor(a, c))) < 1e-14);
  signature unit = signature::unit();
  CHECK(arrow_entry_dist(tensor_arrow(f, identity(unit)), f) < 1e-14);
}

TEST_CASE("dualization is involutive and contravariant", "[arrow]") {
  std::mt19937_64 rng(107);
  signature a = signature::finite({2, 1});
  signature b = signature::finite({2});
  signature c = signature::finite({1, 2});
  qarrow f = random_subnormal_arrow(a, b, rng, 0.9);
  qarrow g = random_subnormal_arrow(b, c, rng, 0.9);

  CHECK(arrow_entry_dist(dualize(dualize(f)), f) < 1e-14);
  CHECK(dualize(f).source() == b);
  CHECK(dualize(f).target() == a);
  CHECK(arrow_entry_dist(dualize(compose(g, f)), compose(dualize(f), dualize(g))) < 1e-12);
  CHECK(arrow_entry_dist(dualize(identity(a)), identity(a)) < 1e-14);
}

TEST_CASE("state flow and effect flow price every experiment identically", "[arrow]") {
  std::mt19937_64 rng(108);
  signature src = signature::finite({2, 3});
  signature tgt = signature::finite({1, 2});
  for (int t = 0; t < 20; ++t) {
    qarrow f = random_subnormal_arrow(src, tgt, rng, 0.97);
    state_vector s = random_state(src, rng);
    effect_vector e = random_effect(tgt, rng);
    CHECK(arrow_duality_residual(f, e, s) < 1e-11);
    // The weakest precondition of the unit effect is the column unit image.
    effect_vector pre = wp(f, effect_vector::identity(tgt));
    for (long j = 0; j < src.comp_count(); ++j)
      CHECK(entry_dist(pre.parts.at(floc(j)), column_unit_image(f, floc(j))) < 1e-13);
  }
}

TEST_CASE("bit embeds into qbit as a retract", "[arrow]") {
  auto q = qbit_structure();
  CHECK(arrow_entry_dist(compose(q.p, q.iota), identity(q.bit)) == 0.0);

  qarrow deph = compose(q.iota, q.p);
  cmat expect = czero(4, 4);
  expect(0, 0) = 1.0;
  expect(3, 3) = 1.0;
  CHECK(entry_dist(deph.block(0, 0).choi(), expect) == 0.0);
  CHECK(arrow_trace_preserving(q.p));
  CHECK(arrow_trace_preserving(q.iota));

  // Measuring |+⟩ gives the uniform distribution over the two summands.
  cmat plus = cmat::Constant(2, 2, cplx(0.5, 0.0));
  auto out = apply(q.p, state_vector::of_block(q.qbit, floc(0), plus));
  CHECK(out.parts.at(floc(0))(0, 0).real() == Approx(0.5));
  CHECK(out.parts.at(floc(1))(0, 0).real() == Approx(0.5));
}

TEST_CASE("permutation arrows realize the coherence isomorphisms", "[arrow]") {
  signature a = signature::finite({1, 1});
  signature b = signature::finite({1});
  signature c = signature::finite({1});
  block_permutation dist = distributivity_iso(a, b, c);
  qarrow d = permutation_arrow(dist);
  qarrow dinv = permutation_arrow(dist.inverse());
  CHECK(arrow_entry_dist(compose(dinv, d), identity(d.source())) == 0.0);
  CHECK(arrow_entry_dist(compose(d, dinv), identity(d.target())) == 0.0);

  // Symmetry swap on a two-part sum moves state mass across.
  signature x = signature::finite({2});
  signature y = signature::finite({3, 1});
  block_permutation swap{direct_sum(x, y), direct_sum(y, x), {2, 0, 1}};
  qarrow sw = permutation_arrow(swap);
  state_vector s = state_vector::point(direct_sum(x, y), floc(0));
  auto moved = apply(sw, s);
  CHECK(moved.parts.count(floc(2)) == 1);
  CHECK(moved.parts.at(floc(2)).trace().real() == Approx(1.0));
}

TEST_CASE("unitary lifts validate their argument", "[arrow]") {
  cmat h = (cmat(2, 2) << 1, 1, 1, -1).finished() / std::sqrt(2.0);
  qarrow hh = unitary_lift(h);
  CHECK(arrow_trace_preserving(hh));
  auto out = apply(hh, state_vector::of_block(hh.source(), floc(0),
                                             (cmat(2, 2) << 1, 0, 0, 0).finished()));
  CHECK(out.parts.at(floc(0))(0, 1).real() == Approx(0.5));
  CHECK_THROWS_AS(unitary_lift(1.1 * h), std::invalid_argument);
  CHECK_THROWS_AS(unitary_lift(czero(2, 3)), std::invalid_argument);
}

TEST_CASE("ascending chains are validated and their limit flagged", "[arrow]") {
  std::mt19937_64 rng(109);
  signature s = signature::finite({2});
  qarrow f = random_subnormal_arrow(s, s, rng, 1.0);

  auto scaled_arrow = [&](double c) {
    return qarrow::from_dense(s, s, {f.block(0, 0).scaled(c)});
  };
  std::vector<qarrow> chain;
  for (int k = 0; k <= 45; ++k) chain.push_back(scaled_arrow(1.0 - std::pow(2.0, -k)));
  qarrow lim = lub_chain(chain);
  CHECK(lim.meta().converged);
  CHECK(lim.meta().iterations == 46);
  CHECK(arrow_entry_dist(lim, chain.back()) == 0.0);

  std::vector<qarrow> shortchain(chain.begin(), chain.begin() + 5);
  CHECK_FALSE(lub_chain(shortchain).meta().converged);

  std::vector<qarrow> descending{scaled_arrow(0.9), scaled_arrow(0.5)};
  CHECK_THROWS_AS(lub_chain(descending), std::invalid_argument);
}

TEST_CASE("nat-indexed arrows expose lazy, cached, column-finite structure", "[arrow]") {
  signature nat = signature::nat();

  qarrow idn = identity(nat);
  auto col = idn.column({0, {7}});
  REQUIRE(col.size() == 1);
  CHECK(col[0].first == block_loc{0, {7}});
  CHECK(choi_distance(col[0].second, block_map::identity(1)) == 0.0);
  CHECK_FALSE(idn.finite());
  CHECK_THROWS_AS(idn.block(0, 0), std::logic_error);

  // The successor arrow shifts point masses up by one.
  qarrow succ = qarrow::from_columns(nat, nat, [](const block_loc& j) -> col_t {
    return {{{0, {j.nat[0] + 1}}, block_map::identity(1)}};
  });
  auto s3 = state_vector::point(nat, {0, {3}});
  auto s4 = apply(succ, s3);
  CHECK(s4.parts.count(block_loc{0, {4}}) == 1);
  CHECK(s4.total_trace() == Approx(1.0));
  CHECK(column_trace_nonincreasing(succ, {0, {3}}));

  // Columns are memoized: repeated access returns the identical data.
  auto c1 = succ.column({0, {9}});
  auto c2 = succ.column({0, {9}});
  REQUIRE(c1.size() == 1);
  CHECK(c1[0].first == c2[0].first);

  // Finite-only operations refuse nat arrows loudly.
  CHECK_THROWS_AS(dualize(succ), std::invalid_argument);
  CHECK_THROWS_AS(arrow_trace_nonincreasing(succ), std::invalid_argument);
  CHECK_THROWS_AS(wp(succ, effect_vector{nat, {}}), std::invalid_argument);
}

TEST_CASE("tensor with a nat factor splits coordinates by rank", "[arrow]") {
  signature nat = signature::nat();
  signature bit = signature::finite({1, 1});
  qarrow succ = qarrow::from_columns(nat, nat, [](const block_loc& j) -> col_t {
    return {{{0, {j.nat[0] + 1}}, block_map::identity(1)}};
  });

  qarrow bs = tensor_arrow(identity(bit), succ);
  CHECK(bs.source() == tensor(bit, nat));
  auto col = bs.column({1, {5}});
  REQUIRE(col.size() == 1);
  CHECK(col[0].first == block_loc{1, {6}});

  qarrow sb = tensor_arrow(succ, identity(bit));
  auto col2 = sb.column({1, {5}});
  REQUIRE(col2.size() == 1);
  CHECK(col2[0].first == block_loc{1, {6}});

  // A column whose function emits a malformed block is rejected on access.
  qarrow bad = qarrow::from_columns(nat, nat, [](const block_loc& j) -> col_t {
    return {{{0, j.nat}, block_map::identity(2)}};
  });
  CHECK_THROWS_AS(bad.column({0, {0}}), std::invalid_argument);
}

TEST_CASE("states and effects validate their contents", "[arrow]") {
  signature s = signature::finite({2, 1});
  state_vector good = state_vector::point(s, floc(0));
  good.validate();
  CHECK(good.total_trace() == Approx(1.0));

  state_vector heavy{s, {{floc(0), 2.0 * cidentity(2)}}};
  CHECK_THROWS_AS(heavy.validate(), std::invalid_argument);
  state_vector neg{s, {{floc(1), -0.5 * cidentity(1)}}};
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
  state_vector misshaped{s, {{floc(0), cidentity(3)}}};
  CHECK_THROWS_AS(misshaped.validate(), std::invalid_argument);

  effect_vector e = effect_vector::identity(s);
  e.validate();
  effect_vector toolarge{s, {{floc(0), 1.5 * cidentity(2)}}};
  CHECK_THROWS_AS(toolarge.validate(), std::invalid_argument);

  CHECK(pairing(e, good) == Approx(1.0));
  effect_vector half{s, {{floc(0), 0.5 * cidentity(2)}}};
  CHECK(pairing(half, good) == Approx(0.5));
}

TEST_CASE("dense construction rejects malformed block tables", "[arrow]") {
  signature a = signature::finite({2});
  signature b = signature::finite({1, 1});
  CHECK_THROWS_AS(qarrow::from_dense(a, b, {block_map::zero(2, 1)}), std::invalid_argument);
  CHECK_THROWS_AS(qarrow::from_dense(a, b, {block_map::zero(2, 1), block_map::zero(2, 2)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(qarrow::from_dense(signature::nat(), a, {}), std::invalid_argument);
}
