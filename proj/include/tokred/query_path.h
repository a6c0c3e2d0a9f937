#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tokred/matrix.h"
#include "tokred/token_reduction.h"
#include "tokred/token_tensor.h"

namespace tokred {

inline constexpr std::size_t kDefaultGroupSize = 20;

struct QueryReducer {
  std::size_t r_q = 1;
  std::size_t group_size = kDefaultGroupSize;

  bool is_identity() const noexcept { return r_q == 1; }
};

// ceil(S / G) contiguous frame ranges; the last one holds the remainder.
std::vector<IndexRange> group_frames(std::size_t frames, std::size_t group_size);

struct QueryReduction {
  Matrix tokens;
  MergeMap map;
  MatchStats stats;
};

// Intra-group merging of the flattened (S*P) x d token matrix.
QueryReduction reduce_queries(const Matrix& x, std::size_t frames, const FrameLayout& layout,
                              const QueryReducer& reducer);

// Query reduction factor as a function of input length:
// 1 up to 100 frames, 2 up to 300, 3 up to 500, 4 beyond.
std::size_t length_adaptive_rq(std::size_t frames);

// Exact merged query count, without running the matcher.
std::size_t query_path_length(std::size_t frames, const FrameLayout& layout,
                              const QueryReducer& reducer);

// Exact similarity comparisons the matcher performs (sum over groups of |src| * |targets|).
std::uint64_t query_match_comparisons(std::size_t frames, const FrameLayout& layout,
                                      const QueryReducer& reducer);

struct MatchingCostRow {
  std::size_t frames = 0;
  std::size_t group_size = 0;
  bool global = false;
  std::uint64_t comparisons = 0;
  double seconds = 0.0;
};

// Times intra-group (fixed G) against global (G = S) matching on seeded iid tokens.
std::vector<MatchingCostRow> matching_cost_probe(std::span<const std::size_t> frame_counts,
                                                 std::size_t group_size, const FrameLayout& layout,
                                                 std::size_t dim, std::size_t r_q,
                                                 std::uint64_t seed);

}  // namespace tokred
