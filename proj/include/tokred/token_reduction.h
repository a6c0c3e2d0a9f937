#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "tokred/matrix.h"
#include "tokred/token_tensor.h"

namespace tokred {

// Half-open range of frame or token indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SourceAssignment {
  std::size_t src = 0;
  std::size_t dst = 0;
  friend bool operator==(const SourceAssignment&, const SourceAssignment&) = default;
};

// Destination/source partition of a flattened token sequence.
//
// `dst_indices` and the `src` keys of `src_assign` partition [0, n_total).
// `targets` is the subset of destinations that may absorb sources; the other
// destinations (special tokens) pass through untouched. Every assignment stays
// within one entry of `group_bounds` (token ranges).
struct MergeMap {
  std::size_t n_total = 0;
  std::size_t tokens_per_frame = 1;
  std::vector<std::size_t> dst_indices;     // ascending
  std::vector<std::size_t> targets;         // ascending, subset of dst_indices
  std::vector<SourceAssignment> src_assign;  // ascending by src
  std::vector<IndexRange> group_bounds;      // token ranges, contiguous

  static MergeMap identity(std::size_t n_total, std::size_t tokens_per_frame = 1);

  std::size_t reduced_size() const noexcept { return dst_indices.size(); }
  bool is_identity() const noexcept { return dst_indices.size() == n_total; }

  // Throws InvalidInput if any structural invariant is broken.
  void validate() const;

  // For every token position, the rank (row in the merged matrix) of the
  // destination that represents it.
  std::vector<std::size_t> representative_rank() const;

  friend bool operator==(const MergeMap&, const MergeMap&) = default;
};

inline constexpr std::size_t kSimilarityBuckets = 20;

struct MatchStats {
  std::uint64_t pair_count = 0;
  std::uint64_t comparisons = 0;
  std::map<std::size_t, std::uint64_t> distance_histogram;     // frames -> pairs
  std::array<std::uint64_t, kSimilarityBuckets> similarity_histogram{};  // width 0.1 over [-1, 1]

  void record(std::size_t frame_distance, double similarity);
  void absorb(const MatchStats& other);

  static std::size_t similarity_bucket(double similarity) noexcept;
  static double bucket_lower_edge(std::size_t bucket) noexcept;
};

// CSV: "distance,count" rows ascending by distance.
void write_distance_csv(std::ostream& os, const MatchStats& stats);
// CSV: "sim_bucket,count" with the bucket's lower edge.
void write_similarity_csv(std::ostream& os, const MatchStats& stats);

// Destination token indices for frames [frames.begin, frames.end) under the
// cyclic rule: in the f-th frame of the group, patch position p is a
// destination iff p % r == f % r. Special tokens are always destinations.
std::vector<std::size_t> select_destinations(IndexRange frames, const FrameLayout& layout,
                                             std::size_t r);

// Number of patch destinations produced by the cyclic rule for the f-th frame of a group.
std::size_t patch_destinations_in_frame(std::size_t frame_in_group, std::size_t patch_count,
                                        std::size_t r) noexcept;

// Skeleton (no assignments) for frames split into `frame_groups`.
MergeMap build_skeleton(std::span<const IndexRange> frame_groups, const FrameLayout& layout,
                        std::size_t r);

struct MatchResult {
  MergeMap map;
  MatchStats stats;
};

// Assigns every source to its most cosine-similar target within its group.
// Ties go to the lowest destination index.
MatchResult bipartite_match(const Matrix& tokens, const MergeMap& skeleton);

// Averages each destination with its sources (running mean, dst first then
// sources by ascending index); output rows follow dst_indices.
Matrix merge(const Matrix& tokens, const MergeMap& map);

// Copies every destination row back to itself and its sources.
Matrix unmerge(const Matrix& reduced, const MergeMap& map);

}  // namespace tokred
