#include "tokred/query_path.h"

#include <algorithm>
#include <chrono>
#include <string>

#include "tokred/backbone.h"
#include "tokred/errors.h"

namespace tokred {

std::vector<IndexRange> group_frames(std::size_t frames, std::size_t group_size) {
  if (group_size < 1) throw InvalidInput("group_frames: group size must be >= 1");
  std::vector<IndexRange> groups;
  groups.reserve((frames + group_size - 1) / group_size);
  for (std::size_t f = 0; f < frames; f += group_size) {
    groups.push_back({f, std::min(frames, f + group_size)});
  }
  return groups;
}

QueryReduction reduce_queries(const Matrix& x, std::size_t frames, const FrameLayout& layout,
                              const QueryReducer& reducer) {
  const std::size_t P = layout.tokens_per_frame();
  if (x.rows() != frames * P) {
    throw InvalidInput("reduce_queries: " + std::to_string(x.rows()) + " rows, expected " +
                       std::to_string(frames) + "x" + std::to_string(P));
  }
  if (reducer.r_q < 1) throw InvalidInput("reduce_queries: r_q must be >= 1");
  const auto groups = group_frames(frames, reducer.group_size);
  if (reducer.is_identity()) {
    // Every token is a destination; nothing to match.
    return {x, build_skeleton(groups, layout, 1), {}};
  }
  auto matched = bipartite_match(x, build_skeleton(groups, layout, reducer.r_q));
  Matrix merged = merge(x, matched.map);
  return {std::move(merged), std::move(matched.map), std::move(matched.stats)};
}

std::size_t length_adaptive_rq(std::size_t frames) {
  if (frames <= 100) return 1;
  if (frames <= 300) return 2;
  if (frames <= 500) return 3;
  return 4;
}

namespace {

struct GroupCounts {
  std::size_t destinations = 0;
  std::size_t targets = 0;
};

GroupCounts count_group(std::size_t group_frames_n, const FrameLayout& layout, std::size_t r) {
  GroupCounts c;
  for (std::size_t f = 0; f < group_frames_n; ++f) {
    const std::size_t patches = patch_destinations_in_frame(f, layout.patch_count, r);
    c.targets += patches;
    c.destinations += patches + layout.special_count;
  }
  return c;
}

}  // namespace

std::size_t query_path_length(std::size_t frames, const FrameLayout& layout,
                              const QueryReducer& reducer) {
  if (reducer.is_identity()) return frames * layout.tokens_per_frame();
  std::size_t total = 0;
  for (const auto& g : group_frames(frames, reducer.group_size)) {
    total += count_group(g.size(), layout, reducer.r_q).destinations;
  }
  return total;
}

std::uint64_t query_match_comparisons(std::size_t frames, const FrameLayout& layout,
                                      const QueryReducer& reducer) {
  if (reducer.is_identity()) return 0;
  std::uint64_t total = 0;
  for (const auto& g : group_frames(frames, reducer.group_size)) {
    const auto c = count_group(g.size(), layout, reducer.r_q);
    const std::uint64_t sources = g.size() * layout.tokens_per_frame() - c.destinations;
    total += sources * c.targets;
  }
  return total;
}

std::vector<MatchingCostRow> matching_cost_probe(std::span<const std::size_t> frame_counts,
                                                 std::size_t group_size, const FrameLayout& layout,
                                                 std::size_t dim, std::size_t r_q,
                                                 std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  std::vector<MatchingCostRow> rows;
  for (std::size_t S : frame_counts) {
    const auto x = gen_synthetic_sequence(S, layout, dim, SequenceMode::Iid, seed);
    for (bool global : {false, true}) {
      const QueryReducer reducer{r_q, global ? S : group_size};
      const auto t0 = Clock::now();
      const auto groups = group_frames(S, reducer.group_size);
      const auto matched = bipartite_match(x.flat(), build_skeleton(groups, layout, r_q));
      const auto t1 = Clock::now();
      rows.push_back({S, reducer.group_size, global, matched.stats.comparisons,
                      std::chrono::duration<double>(t1 - t0).count()});
    }
  }
  return rows;
}

}  // namespace tokred
