#include <doctest.h>

#include <random>

#include "test_support.h"
#include "tokred/attention.h"
#include "tokred/errors.h"
#include "tokred/kernels.h"

using namespace tokred;
using tokred::testing::max_rel_diff;
using tokred::testing::naive_attention;
using tokred::testing::random_matrix;

namespace {

AttentionLayerParams random_params(std::size_t d, std::mt19937_64& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  return {random_matrix(d, d, rng, s), random_matrix(d, d, rng, s), random_matrix(d, d, rng, s),
          random_matrix(d, d, rng, s)};
}

TokenTensor random_tokens(std::size_t S, std::size_t P, std::size_t d, std::mt19937_64& rng) {
  return {S, P, random_matrix(S * P, d, rng)};
}

}  // namespace

TEST_CASE("sdpa with a single key returns the value") {
  const Matrix v{{0.25, -1.5, 3.0}};
  CHECK(sdpa(Matrix{{1, 2, 3}}, Matrix{{-4, 5, 0.5}}, v) == v);
}

TEST_CASE("sdpa over identical values returns that value") {
  const Matrix v{{1.0, 2.0}, {1.0, 2.0}};
  const Matrix out = sdpa(Matrix{{0.3, -0.7}}, Matrix{{1, 0}, {0, 1}}, v);
  CHECK(out(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(out(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("sdpa matches the explicit per-row oracle") {
  std::mt19937_64 rng(21);
  const Matrix q = random_matrix(6, 4, rng);
  const Matrix k = random_matrix(9, 4, rng);
  const Matrix v = random_matrix(9, 4, rng);
  const Matrix out = sdpa(q, k, v);
  CHECK(out.rows() == 6);
  CHECK(max_rel_diff(out, naive_attention(q, k, v)) < 1e-10);
}

TEST_CASE("sdpa output has one row per query") {
  std::mt19937_64 rng(22);
  for (std::size_t nq : {1u, 3u, 17u})
    for (std::size_t nkv : {1u, 5u, 40u}) {
      const Matrix out = sdpa(random_matrix(nq, 8, rng), random_matrix(nkv, 8, rng),
                              random_matrix(nkv, 8, rng));
      CHECK(out.rows() == nq);
    }
}

TEST_CASE("sdpa rejects inconsistent shapes") {
  CHECK_THROWS_AS(sdpa(Matrix(2, 3), Matrix(4, 3), Matrix(5, 3)), InvalidInput);
  CHECK_THROWS_AS(sdpa(Matrix(2, 3), Matrix(4, 2), Matrix(4, 2)), InvalidInput);
  CHECK_THROWS_AS(sdpa(Matrix(2, 3), Matrix(0, 3), Matrix(0, 3)), InvalidInput);
}

TEST_CASE("frame attention") {
  std::mt19937_64 rng(23);
  const std::size_t d = 6;
  const FrameLayout layout{3, 2};
  const std::size_t P = layout.tokens_per_frame();
  const auto params = random_params(d, rng);

  SUBCASE("single frame equals unreduced global attention") {
    const auto x = random_tokens(1, P, d, rng);
    CHECK(frame_attention(x, params) == global_attention_unreduced(x, params));
    CHECK(frame_attention(x, params) == global_attention(x, params, layout, {}, {}));
  }

  SUBCASE("zero weights leave the residual stream untouched") {
    const auto x = random_tokens(3, P, d, rng);
    CHECK(frame_attention(x, AttentionLayerParams::zeros(d)) == x);
  }

  SUBCASE("matches a per-frame loop oracle") {
    const auto x = random_tokens(3, P, d, rng);
    const auto y = frame_attention(x, params);
    for (std::size_t f = 0; f < 3; ++f) {
      const Matrix xf = x.frame(f);
      const Matrix attn = naive_attention(tokred::testing::naive_matmul(xf, params.w_q),
                                          tokred::testing::naive_matmul(xf, params.w_k),
                                          tokred::testing::naive_matmul(xf, params.w_v));
      Matrix expected = tokred::testing::naive_matmul(attn, params.w_o);
      for (std::size_t i = 0; i < expected.data().size(); ++i) expected.data()[i] += xf.data()[i];
      CHECK(max_rel_diff(y.frame(f), expected) < 1e-10);
    }
  }
}

TEST_CASE("global attention with identity reducers is the unreduced layer bit for bit") {
  std::mt19937_64 rng(24);
  const FrameLayout layout{8, 5};
  const auto params = random_params(8, rng);
  const auto x = random_tokens(7, layout.tokens_per_frame(), 8, rng);
  CHECK(global_attention(x, params, layout, QueryReducer{1, 20}, KvReducer{1}) ==
        global_attention_unreduced(x, params));
}

TEST_CASE("global attention: pruning duplicated frames changes nothing") {
  std::mt19937_64 rng(25);
  const FrameLayout layout{8, 5};
  const std::size_t P = layout.tokens_per_frame(), d = 8, S = 6;
  const auto params = random_params(d, rng);
  const Matrix frame = random_matrix(P, d, rng);
  Matrix flat(S * P, d);
  for (std::size_t f = 0; f < S; ++f)
    std::copy_n(frame.data().data(), P * d, flat.row(f * P).data());
  const TokenTensor x(S, P, flat);

  GlobalAttentionTrace trace;
  const auto reduced = global_attention(x, params, layout, {}, KvReducer{S}, &trace);
  CHECK(trace.kv_rows == P);
  CHECK(trace.query_rows == S * P);
  CHECK(max_rel_diff(reduced.flat(), global_attention_unreduced(x, params).flat()) < 1e-8);
}

TEST_CASE("global attention: G = S matches global matching, output keeps N rows") {
  std::mt19937_64 rng(26);
  const FrameLayout layout{8, 5};
  const std::size_t P = layout.tokens_per_frame(), d = 8, S = 5;
  const auto params = random_params(d, rng);
  const auto x = random_tokens(S, P, d, rng);

  GlobalAttentionTrace trace;
  const auto y = global_attention(x, params, layout, QueryReducer{2, S}, KvReducer{1}, &trace);
  REQUIRE(y.total_tokens() == S * P);

  // Oracle: one skeleton over all frames, merged, attended, unmerged by hand.
  const std::vector<IndexRange> one_group{{0, S}};
  const auto matched = bipartite_match(x.flat(), build_skeleton(one_group, layout, 2));
  const Matrix merged = merge(x.flat(), matched.map);
  const Matrix attn = naive_attention(tokred::testing::naive_matmul(merged, params.w_q),
                                      tokred::testing::naive_matmul(x.flat(), params.w_k),
                                      tokred::testing::naive_matmul(x.flat(), params.w_v));
  const Matrix out = tokred::testing::naive_matmul(attn, params.w_o);
  const auto rank = matched.map.representative_rank();
  Matrix expected = x.flat();
  for (std::size_t i = 0; i < S * P; ++i)
    for (std::size_t t = 0; t < d; ++t) expected(i, t) += out(rank[i], t);
  CHECK(trace.query_rows == merged.rows());
  CHECK(max_rel_diff(y.flat(), expected) < 1e-10);
}

TEST_CASE("global attention rejects a layout that does not match the tokens") {
  std::mt19937_64 rng(27);
  const auto x = random_tokens(2, 7, 4, rng);
  CHECK_THROWS_AS(global_attention(x, AttentionLayerParams::zeros(4), FrameLayout{16, 5}, {}, {}),
                  InvalidInput);
}
