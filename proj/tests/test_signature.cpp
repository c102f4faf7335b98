#include <qflow/signature.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace qflow;

TEST_CASE("signature constructors and rendering", "[signature]") {
  CHECK(signature::unit().str() == "(1)");
  CHECK(signature::finite({2, 1, 3}).str() == "(2,1,3)");
  CHECK(signature::nat().str() == "nat");
  CHECK(signature::nat().is_nat());
  CHECK_FALSE(signature::nat().is_finite());
  CHECK(signature::finite({2}).is_finite());
  CHECK_THROWS_AS(signature::finite({}), std::invalid_argument);
  CHECK_THROWS_AS(signature::finite({0}), std::invalid_argument);
}

TEST_CASE("direct_sum concatenates block lists", "[signature]") {
  auto s = direct_sum(signature::finite({2, 1}), signature::finite({3}));
  CHECK(s == signature::finite({2, 1, 3}));
  // order matters: signatures are lists, not multisets
  CHECK_FALSE(direct_sum(signature::finite({1, 2}), signature::finite({3})) ==
              direct_sum(signature::finite({3}), signature::finite({1, 2})));
}

TEST_CASE("tensor is lexicographic with the left factor major", "[signature]") {
  auto t = tensor(signature::finite({2, 3}), signature::finite({1, 2}));
  CHECK(t == signature::finite({2, 4, 3, 6}));
  auto u = signature::unit();
  CHECK(tensor(u, t) == t);
  CHECK(tensor(t, u) == t);
}

TEST_CASE("tensor and direct_sum are associative on representations", "[signature]") {
  auto a = signature::finite({2}), b = signature::finite({1, 1}), c = signature::finite({3, 2});
  CHECK(tensor(tensor(a, b), c) == tensor(a, tensor(b, c)));
  CHECK(direct_sum(direct_sum(a, b), c) == direct_sum(a, direct_sum(b, c)));
}

TEST_CASE("total_dim sums squared block dims", "[signature]") {
  CHECK(signature::finite({2}).total_dim() == 4);
  CHECK(signature::finite({1, 1}).total_dim() == 2);
  CHECK(signature::finite({2, 3}).total_dim() == 13);
  CHECK_THROWS_AS(signature::nat().total_dim(), std::invalid_argument);
}

TEST_CASE("nat-bearing tensors and sums", "[signature]") {
  auto bit = signature::finite({1, 1});
  auto qbit = signature::finite({2});
  auto n = signature::nat();

  auto bn = tensor(bit, n);  // two nat-indexed scalar components
  REQUIRE(bn.comp_count() == 2);
  CHECK(bn.rank(0) == 1);
  CHECK(bn.dim(0) == 1);
  CHECK(bn.str() == "(nat,nat)");

  auto qn = tensor(qbit, n);
  REQUIRE(qn.comp_count() == 1);
  CHECK(qn.rank(0) == 1);
  CHECK(qn.dim(0) == 2);
  CHECK(qn.str() == "(2*nat)");

  auto nn = tensor(n, n);  // rank-2 index space, needed for binary built-ins
  REQUIRE(nn.comp_count() == 1);
  CHECK(nn.rank(0) == 2);
  CHECK(nn.str() == "(nat^2)");

  // loop bodies over nat contexts need sums of nat-bearing signatures
  auto loop = direct_sum(bn, bn);
  CHECK(loop.comp_count() == 4);
  CHECK_FALSE(loop.is_finite());
}

TEST_CASE("block_loc validation", "[signature]") {
  auto bn = tensor(signature::finite({1, 1}), signature::nat());
  CHECK_NOTHROW(check_loc(bn, {1, {5}}));
  CHECK_THROWS_AS(check_loc(bn, {2, {0}}), std::out_of_range);
  CHECK_THROWS_AS(check_loc(bn, {0, {}}), std::invalid_argument);   // missing coordinate
  CHECK_THROWS_AS(check_loc(bn, {0, {-1}}), std::invalid_argument);
  CHECK_NOTHROW(check_loc(signature::finite({2}), floc(0)));
  CHECK(block_loc{0, {1}} < block_loc{0, {2}});
  CHECK(block_loc{0, {2}} < block_loc{1, {0}});
}

TEST_CASE("distributivity iso gives the frozen permutation on ((1,1),(1),(1))", "[signature]") {
  auto p = distributivity_iso(signature::finite({1, 1}), signature::finite({1}),
                              signature::finite({1}));
  CHECK(p.map == std::vector<long>{0, 2, 1, 3});
  CHECK(p.source == signature::finite({1, 1, 1, 1}));
  CHECK(p.target == signature::finite({1, 1, 1, 1}));
}

TEST_CASE("distributivity iso preserves dims and inverts cleanly", "[signature]") {
  auto a = signature::finite({2, 1}), b = signature::finite({3}), c = signature::finite({1, 2});
  auto p = distributivity_iso(a, b, c);
  CHECK_NOTHROW(p.validate());
  CHECK(p.source == tensor(a, direct_sum(b, c)));
  CHECK(p.target == direct_sum(tensor(a, b), tensor(a, c)));
  auto q = p.inverse();
  CHECK_NOTHROW(q.validate());
  for (size_t j = 0; j < p.map.size(); ++j) CHECK(q.map[p.map[j]] == static_cast<long>(j));
}

TEST_CASE("block_permutation validation rejects malformed maps", "[signature]") {
  auto s = signature::finite({2, 1});
  block_permutation not_bij{s, s, {0, 0}};
  CHECK_THROWS_AS(not_bij.validate(), std::invalid_argument);
  block_permutation wrong_dims{s, signature::finite({1, 2}), {0, 1}};
  CHECK_THROWS_AS(wrong_dims.validate(), std::invalid_argument);
  CHECK_NOTHROW(identity_permutation(s).validate());
  // permutations on nat-bearing signatures are fine when shapes line up
  auto bn = tensor(signature::finite({1, 1}), signature::nat());
  block_permutation swap_comps{bn, bn, {1, 0}};
  CHECK_NOTHROW(swap_comps.validate());
}
