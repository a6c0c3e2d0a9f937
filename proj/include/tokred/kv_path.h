#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tokred/matrix.h"
#include "tokred/token_reduction.h"
#include "tokred/token_tensor.h"

namespace tokred {

enum class KvMode { StridePrune, StrideMergeWithAverage, RandomTokenPrune };

std::string_view to_string(KvMode mode) noexcept;
std::optional<KvMode> parse_kv_mode(std::string_view name) noexcept;

struct KvReducer {
  std::size_t r_kv = 1;
  KvMode mode = KvMode::StridePrune;
  std::uint64_t seed = 0;  // RandomTokenPrune only

  bool is_identity() const noexcept { return r_kv == 1; }
};

struct KvReduction {
  Matrix tokens;
  std::vector<std::size_t> kept_frames;  // empty for RandomTokenPrune
  MatchStats stats;                      // comparisons stay 0 unless merging
};

// Frames kept by the temporal stride: 0, r, 2r, ...
std::vector<std::size_t> stride_frames(std::size_t frames, std::size_t r_kv);

// Keeps every token of every r_kv-th frame. No similarity is computed.
KvReduction stride_prune(const Matrix& x, std::size_t frames, std::size_t tokens_per_frame,
                         std::size_t r_kv);

// Same kept frames as stride_prune, but each dropped token is matched to its
// most similar kept token and averaged into it.
KvReduction stride_merge_with_average(const Matrix& x, std::size_t frames,
                                      std::size_t tokens_per_frame, std::size_t r_kv);

// Seeded uniform sample of ceil(S / r_kv) * P tokens, kept in sequence order.
KvReduction random_token_prune(const Matrix& x, std::size_t frames, std::size_t tokens_per_frame,
                               std::size_t r_kv, std::uint64_t seed);

KvReduction reduce_kv(const Matrix& x, std::size_t frames, std::size_t tokens_per_frame,
                      const KvReducer& reducer);

// 1 up to 100 frames, ceil(S / 40) beyond.
std::size_t length_adaptive_rkv(std::size_t frames);

// Rows left on the KV path, identical for all modes.
std::size_t kv_path_length(std::size_t frames, std::size_t tokens_per_frame, std::size_t r_kv);

}  // namespace tokred
