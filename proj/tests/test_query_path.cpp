#include <doctest.h>

#include <random>
#include <set>

#include "test_support.h"
#include "tokred/backbone.h"
#include "tokred/errors.h"
#include "tokred/kernels.h"
#include "tokred/query_path.h"

using namespace tokred;
using tokred::testing::random_matrix;

namespace {

// Global matching written from scratch: cyclic destinations indexed by the
// absolute frame number, exhaustive argmax over every patch destination.
MergeMap global_matching_oracle(const Matrix& x, std::size_t S, const FrameLayout& layout,
                                std::size_t r) {
  const std::size_t P = layout.tokens_per_frame();
  MergeMap m;
  m.n_total = S * P;
  m.tokens_per_frame = P;
  m.group_bounds = {{0, S * P}};
  std::vector<bool> is_dst(S * P, false);
  for (std::size_t f = 0; f < S; ++f)
    for (std::size_t slot = 0; slot < P; ++slot) {
      const std::size_t i = f * P + slot;
      if (slot < layout.special_count) {
        is_dst[i] = true;
      } else if ((slot - layout.special_count) % r == f % r) {
        is_dst[i] = true;
        m.targets.push_back(i);
      }
      if (is_dst[i]) m.dst_indices.push_back(i);
    }
  for (std::size_t s = 0; s < S * P; ++s) {
    if (is_dst[s]) continue;
    std::size_t best = 0;
    double best_sim = -INFINITY;
    for (std::size_t d : m.targets) {
      const double sim = cosine_sim(x.row(s), x.row(d));
      if (sim > best_sim) {
        best_sim = sim;
        best = d;
      }
    }
    m.src_assign.push_back({s, best});
  }
  return m;
}

}  // namespace

TEST_CASE("group_frames") {
  CHECK(group_frames(40, 20) == std::vector<IndexRange>{{0, 20}, {20, 40}});
  const auto g = group_frames(45, 20);
  REQUIRE(g.size() == 3);
  CHECK(g[0].size() == 20);
  CHECK(g[1].size() == 20);
  CHECK(g[2].size() == 5);
  CHECK(group_frames(1000, 20).size() == 50);
  CHECK(group_frames(7, 100) == std::vector<IndexRange>{{0, 7}});
  CHECK_THROWS_AS(group_frames(7, 0), InvalidInput);
}

TEST_CASE("length_adaptive_rq") {
  CHECK(length_adaptive_rq(1) == 1);
  CHECK(length_adaptive_rq(100) == 1);
  CHECK(length_adaptive_rq(101) == 2);
  CHECK(length_adaptive_rq(300) == 2);
  CHECK(length_adaptive_rq(301) == 3);
  CHECK(length_adaptive_rq(500) == 3);
  CHECK(length_adaptive_rq(501) == 4);
  CHECK(length_adaptive_rq(1000) == 4);
}

TEST_CASE("reduce_queries") {
  std::mt19937_64 rng(41);
  const FrameLayout layout{16, 5};
  const std::size_t P = layout.tokens_per_frame();

  SUBCASE("r_q = 1 is the identity") {
    const Matrix x = random_matrix(6 * P, 8, rng);
    const auto r = reduce_queries(x, 6, layout, {1, 20});
    CHECK(r.tokens == x);
    CHECK(r.map.is_identity());
    CHECK(r.stats.comparisons == 0);
  }

  SUBCASE("G = S reproduces global matching exactly") {
    for (std::size_t S : {3u, 8u, 11u}) {
      const Matrix x = random_matrix(S * P, 8, rng);
      const auto r = reduce_queries(x, S, layout, {2, S});
      const MergeMap oracle = global_matching_oracle(x, S, layout, 2);
      CHECK(r.map == oracle);
      CHECK(tokred::testing::max_rel_diff(r.tokens, merge(x, oracle)) < 1e-10);
    }
  }

  SUBCASE("row count follows the destination rule") {
    const Matrix x = random_matrix(40 * P, 8, rng);
    const auto r = reduce_queries(x, 40, layout, {2, 20});
    CHECK(r.tokens.rows() == 40 * (5 + 8));
    CHECK(query_path_length(40, layout, {2, 20}) == r.tokens.rows());
  }

  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(reduce_queries(Matrix(10, 4), 3, layout, {2, 20}), InvalidInput);
  }
}

TEST_CASE("reduce_queries invariants across group sizes") {
  std::mt19937_64 rng(42);
  const FrameLayout layout{6, 5};
  const std::size_t P = layout.tokens_per_frame();
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t S = 1 + rng() % 30;
    const std::size_t r = 1 + rng() % 5;
    const Matrix x = random_matrix(S * P, 4, rng);
    for (std::size_t G : {1u, 3u, 7u, 20u, 64u}) {
      const auto red = reduce_queries(x, S, layout, {r, G});
      red.map.validate();
      CHECK(red.tokens.rows() == query_path_length(S, layout, {r, G}));
      CHECK(red.stats.comparisons == query_match_comparisons(S, layout, {r, G}));
      if (!red.stats.distance_histogram.empty()) {
        CHECK(red.stats.distance_histogram.rbegin()->first <= G - 1);
      }
      for (const auto& a : red.map.src_assign) CHECK(!layout.is_special(a.src % P));
    }
  }
}

TEST_CASE("comparison counts scale linearly for fixed G and quadratically for G = S") {
  const FrameLayout layout{16, 5};
  const auto fixed = [&](std::size_t S) { return query_match_comparisons(S, layout, {2, 20}); };
  const auto global = [&](std::size_t S) { return query_match_comparisons(S, layout, {2, S}); };
  CHECK(fixed(200) == 2 * fixed(100));
  CHECK(fixed(400) == 2 * fixed(200));
  CHECK(static_cast<double>(global(200)) / static_cast<double>(global(100)) == doctest::Approx(4.0).epsilon(0.01));
  // Per group: |src| * |targets| <= (G*P) * (G*P), so total <= S*P*G*P.
  CHECK(fixed(1000) <= 1000ull * 21 * 20 * 21);
}

TEST_CASE("matches stay local on smoothly varying sequences") {
  const FrameLayout layout{16, 5};
  const std::size_t S = 40;
  const auto x = gen_synthetic_sequence(S, layout, 32, SequenceMode::SmoothWalk, 7);
  const auto r = reduce_queries(x.flat(), S, layout, {2, S});
  std::uint64_t near = 0;
  for (const auto& [dist, n] : r.stats.distance_histogram)
    if (dist <= 5) near += n;
  MESSAGE("pairs within 5 frames: " << near << " / " << r.stats.pair_count);
  CHECK(static_cast<double>(near) >= 0.8 * static_cast<double>(r.stats.pair_count));
}

TEST_CASE("matching_cost_probe: global matching is much slower at S = 512") {
  const FrameLayout layout{16, 5};
  const std::vector<std::size_t> frames{128, 256, 512};
  const auto rows = matching_cost_probe(frames, 20, layout, 32, 2, 3);
  REQUIRE(rows.size() == 6);
  const auto ratio = [&](std::size_t a, std::size_t b) {
    return static_cast<double>(rows[b].comparisons) / static_cast<double>(rows[a].comparisons);
  };
  CHECK(ratio(0, 2) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(ratio(2, 4) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(ratio(1, 3) == doctest::Approx(4.0).epsilon(0.01));
  const auto& intra = rows[4];
  const auto& global = rows[5];
  REQUIRE(intra.frames == 512);
  REQUIRE(global.global);
  MESSAGE("S=512 intra " << intra.seconds << " s, global " << global.seconds << " s");
  CHECK(global.seconds >= 5.0 * intra.seconds);
}
