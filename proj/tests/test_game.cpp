#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"
#include "gqc/game.hpp"

using namespace gqc;
using namespace gqc::testing;

TEST_CASE("map codes round trip") {
  std::vector<int> m{2, -1, 0};
  CHECK(decode_map(encode_map(m, 3), 3, 3) == m);
  std::vector<int> empty{-1, -1};
  CHECK(decode_map(encode_map(empty, 5), 2, 5) == empty);
}

TEST_CASE("initial_system sizes") {
  RelStructure k3 = clique(3), k2 = clique(2);
  CHECK(initial_system(k3, k2, {2, 2, false, false, false}).member_count() == 13);
  RelStructure one = single_vertex();
  CHECK(initial_system(one, one, {1, 1, false, false, false}).member_count() == 2);

  // x_n = 1 with a loop on one side excludes the singleton on the loop vertex.
  RelStructure loopy = graph({"a"}, {});
  loopy.add_tuple(0, {0, 0});
  RelStructure plain = single_vertex();
  auto s = initial_system(loopy, plain, {1, 1, false, false, true});
  CHECK(s.member_count() == 1);  // only the empty map
}

TEST_CASE("forth_check basics") {
  RelStructure k2 = clique(2);
  GameVariant v{1, 2, false, false, false};
  auto s = initial_system(k2, k2, v);
  std::vector<int> empty{-1, -1};
  auto w = forth_check(empty, s, v);
  REQUIRE(w.has_value());
  CHECK(*w == std::vector<int>{0, 0});  // lexicographically least total map

  RelStructure one = single_vertex();
  GameVariant vi{1, 2, true, false, false};
  auto s2 = initial_system(k2, one, vi);
  CHECK(!forth_check(std::vector<int>{-1, -1}, s2, vi).has_value());

  CHECK_THROWS_AS(forth_check(std::vector<int>{0, 1}, s, v), PreconditionError);
}

TEST_CASE("duplicator_wins sanity") {
  RelStructure k2 = clique(2), k3 = clique(3), c6 = cycle(6),
               tt = two_triangles();
  CHECK(duplicator_wins(k2, k2, {1, 2, true, true, true}));
  CHECK(duplicator_wins(k2, k3, {1, 2, false, false, false}));
  CHECK(!duplicator_wins(k3, k2, {1, 2, true, false, false}));  // |A|>|B|, inj
  // 1-WL cannot distinguish 2-regular graphs.
  CHECK(duplicator_wins(c6, tt, {1, 2, true, true, true}));
  // Spoiler wins any game on non-isomorphic graphs with n,k >= 2.
  CHECK(!duplicator_wins(c6, tt, {2, 2, true, true, true}));
}

TEST_CASE("verdict cube monotone and oracle agreement on hand pairs") {
  RelStructure k3 = clique(3), k2 = clique(2), c6 = cycle(6),
               tt = two_triangles(), p3 = path(3);
  for (auto [a, b] : std::vector<std::pair<const RelStructure*, const RelStructure*>>{
           {&k3, &k2}, {&k2, &k3}, {&p3, &k2}, {&k2, &p3}, {&p3, &p3}}) {
    for (int n = 1; n <= 2; ++n)
      for (int k = n; k <= 2; ++k) {
        CubeVerdict cube = verdict_cube(*a, *b, n, k);
        CHECK(cube.monotone);
        for (int xi = 0; xi <= 1; ++xi)
          for (int xs = 0; xs <= 1; ++xs)
            for (int xn = 0; xn <= 1; ++xn) {
              GameVariant v{n, k, xi != 0, xs != 0, xn != 0};
              CHECK(cube.verdict[xi][xs][xn] ==
                    solve_by_position_graph(*a, *b, v));
            }
      }
  }
  // Larger pair at n=1 (oracle uses bijections only).
  CHECK(duplicator_wins(c6, tt, {1, 2, true, true, true}) ==
        solve_by_position_graph(c6, tt, {1, 2, true, true, true}));
}

TEST_CASE("strategy synthesis and verification") {
  RelStructure k2 = clique(2);
  GameVariant v{1, 2, true, true, true};
  auto s = canonical_system(k2, k2, v);
  auto strat = synthesize_strategy(s, v);
  CHECK(verify_strategy(s, strat, v).ok);
  // choice(empty) is the lexicographically least bijection = identity.
  std::vector<int> empty{-1, -1};
  CHECK(strat.choice.at(encode_map(empty, 2)) == std::vector<int>{0, 1});

  // Corrupt one choice: verification must fail.
  auto bad = strat;
  for (auto& [key, resp] : bad.choice) {
    resp = {resp[1], resp[0]};
    break;
  }
  CHECK(!verify_strategy(s, bad, v).ok);

  // Spoiler-winning instance: synthesis refuses.
  RelStructure k3 = clique(3);
  GameVariant vl{2, 2, false, false, false};
  auto sl = canonical_system(k3, k2, vl);
  CHECK_THROWS_AS(synthesize_strategy(sl, vl), PreconditionError);
}

TEST_CASE("elimination trace replays to the canonical system") {
  RelStructure k3 = clique(3), k2 = clique(2), c6 = cycle(6);
  for (GameVariant v : {GameVariant{1, 2, true, false, false},
                        GameVariant{2, 2, false, false, true},
                        GameVariant{1, 1, false, true, false}}) {
    auto trace = elimination_trace(k3, k2, v);
    auto expected = canonical_system(k3, k2, v);
    CHECK(replay_trace(k3, k2, v, trace, expected));
  }
  GameVariant v{2, 2, true, true, false};
  auto trace = elimination_trace(c6, two_triangles(), v);
  auto expected = canonical_system(c6, two_triangles(), v);
  CHECK(replay_trace(c6, two_triangles(), v, trace, expected));
}

TEST_CASE("refine is antitone and the fixpoint is stable") {
  RelStructure c5 = cycle(5), k3 = clique(3);
  GameVariant v{2, 3, false, false, true};
  auto s = initial_system(c5, k3, v);
  auto s1 = refine(s, v);
  for (size_t i = 0; i < s.alive.size(); ++i)
    if (s1.alive[i]) CHECK(s.alive[i]);
  auto fix = canonical_system(c5, k3, v);
  auto fix2 = refine(fix, v);
  CHECK(fix2.alive == fix.alive);
}

TEST_CASE("limited game value agrees with the fixpoint on small pairs") {
  RelStructure k2 = clique(2), p3 = path(3);
  for (GameVariant v : {GameVariant{1, 2, false, false, false},
                        GameVariant{2, 2, true, true, true},
                        GameVariant{1, 2, false, true, false}}) {
    // At horizon >= |Part| the finite-horizon value equals the fixpoint value.
    CHECK(limited_game_value(p3, k2, v, 30) == duplicator_wins(p3, k2, v));
    CHECK(limited_game_value(k2, p3, v, 30) == duplicator_wins(k2, p3, v));
  }
}

TEST_CASE("committed round order") {
  RelStructure k3 = clique(3), k2 = clique(2), p3 = path(3);
  // Committing the function before Spoiler's announcement costs Duplicator
  // the K3 -> K2 function game at n=1, k=2: the two pebble choices demand a
  // common neighbour of two adjacent K2 vertices.
  GameVariant v{1, 2, false, false, false};
  CHECK(duplicator_wins(k3, k2, v));
  CHECK(!duplicator_wins_committed(k3, k2, v));

  // Agreement with the committed position-graph oracle, and the committed
  // verdict never exceeds the standard one.
  for (auto [a, b] : std::vector<std::pair<const RelStructure*, const RelStructure*>>{
           {&k3, &k2}, {&k2, &k3}, {&p3, &k2}, {&k2, &p3}, {&p3, &p3}}) {
    for (int n = 1; n <= 2; ++n)
      for (int k = n; k <= 2; ++k)
        for (int xi = 0; xi <= 1; ++xi)
          for (int xs = 0; xs <= 1; ++xs)
            for (int xn = 0; xn <= 1; ++xn) {
              GameVariant g{n, k, xi != 0, xs != 0, xn != 0};
              bool cm = duplicator_wins_committed(*a, *b, g);
              CHECK(cm == solve_by_position_graph_committed(*a, *b, g));
              if (cm) CHECK(duplicator_wins(*a, *b, g));
            }
  }

  // Committed strategies carry a choice at every member, full ones included.
  auto s = canonical_system(k2, k2, {2, 2, true, true, true}, nullptr, true);
  REQUIRE(s.contains(encode_map(std::vector<int>{-1, -1}, 2)));
  auto strat = synthesize_strategy(s, {2, 2, true, true, true}, true);
  CHECK(verify_strategy(s, strat, {2, 2, true, true, true}, true).ok);
  CHECK(strat.choice.size() == s.member_count());
}

TEST_CASE("hom sufficiency") {
  RelStructure k2 = clique(2), k3 = clique(3), c5 = cycle(5);
  for (auto [a, b] : std::vector<std::pair<const RelStructure*, const RelStructure*>>{
           {&k2, &k3}, {&c5, &k3}, {&k2, &k2}}) {
    REQUIRE(hom_exists(*a, *b).has_value());
    for (int n = 1; n <= 3; ++n)
      for (int k = n; k <= 3; ++k)
        CHECK(duplicator_wins(*a, *b, {n, k, false, false, false}));
  }
}
