#include "tokred/token_reduction.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "tokred/errors.h"
#include "tokred/kernels.h"

namespace tokred {

MergeMap MergeMap::identity(std::size_t n_total, std::size_t tokens_per_frame) {
  MergeMap map;
  map.n_total = n_total;
  map.tokens_per_frame = tokens_per_frame;
  map.dst_indices.resize(n_total);
  for (std::size_t i = 0; i < n_total; ++i) map.dst_indices[i] = i;
  map.targets = map.dst_indices;
  map.group_bounds.push_back({0, n_total});
  return map;
}

void MergeMap::validate() const {
  if (tokens_per_frame == 0) throw InvalidInput("merge map: tokens_per_frame is 0");
  std::vector<unsigned char> role(n_total, 0);  // 1 = dst, 2 = src
  for (std::size_t i = 0; i < dst_indices.size(); ++i) {
    const std::size_t d = dst_indices[i];
    if (d >= n_total) throw InvalidInput("merge map: destination out of range");
    if (i > 0 && dst_indices[i - 1] >= d) throw InvalidInput("merge map: destinations not ascending");
    role[d] = 1;
  }
  if (!std::includes(dst_indices.begin(), dst_indices.end(), targets.begin(), targets.end())) {
    throw InvalidInput("merge map: targets not a subset of destinations");
  }

  std::vector<std::size_t> group_of(n_total, 0);
  std::size_t cursor = 0;
  for (std::size_t g = 0; g < group_bounds.size(); ++g) {
    if (group_bounds[g].begin != cursor || group_bounds[g].end < cursor) {
      throw InvalidInput("merge map: group bounds not contiguous");
    }
    for (std::size_t i = group_bounds[g].begin; i < group_bounds[g].end; ++i) group_of[i] = g;
    cursor = group_bounds[g].end;
  }
  if (cursor != n_total) throw InvalidInput("merge map: group bounds do not cover all tokens");

  for (std::size_t i = 0; i < src_assign.size(); ++i) {
    const auto [s, d] = src_assign[i];
    if (s >= n_total || d >= n_total) throw InvalidInput("merge map: assignment out of range");
    if (i > 0 && src_assign[i - 1].src >= s) throw InvalidInput("merge map: sources not ascending");
    if (role[s] != 0) throw InvalidInput("merge map: token " + std::to_string(s) + " is both source and destination");
    role[s] = 2;
    if (!std::binary_search(targets.begin(), targets.end(), d)) {
      throw InvalidInput("merge map: source " + std::to_string(s) + " assigned to non-target " + std::to_string(d));
    }
    if (group_of[s] != group_of[d]) {
      throw InvalidInput("merge map: assignment " + std::to_string(s) + "->" + std::to_string(d) + " crosses a group boundary");
    }
  }
  if (std::find(role.begin(), role.end(), 0) != role.end()) {
    throw InvalidInput("merge map: tokens are neither destination nor source");
  }
}

std::vector<std::size_t> MergeMap::representative_rank() const {
  std::vector<std::size_t> rank(n_total, 0);
  for (std::size_t r = 0; r < dst_indices.size(); ++r) rank[dst_indices[r]] = r;
  for (const auto& a : src_assign) rank[a.src] = rank[a.dst];
  return rank;
}

std::size_t MatchStats::similarity_bucket(double similarity) noexcept {
  const double clamped = std::clamp(similarity, -1.0, 1.0);
  const auto b = static_cast<std::size_t>(std::floor((clamped + 1.0) * 10.0));
  return std::min(b, kSimilarityBuckets - 1);
}

double MatchStats::bucket_lower_edge(std::size_t bucket) noexcept {
  return -1.0 + 0.1 * static_cast<double>(bucket);
}

void MatchStats::record(std::size_t frame_distance, double similarity) {
  ++pair_count;
  ++distance_histogram[frame_distance];
  ++similarity_histogram[similarity_bucket(similarity)];
}

void MatchStats::absorb(const MatchStats& other) {
  pair_count += other.pair_count;
  comparisons += other.comparisons;
  for (const auto& [dist, n] : other.distance_histogram) distance_histogram[dist] += n;
  for (std::size_t b = 0; b < kSimilarityBuckets; ++b) {
    similarity_histogram[b] += other.similarity_histogram[b];
  }
}

void write_distance_csv(std::ostream& os, const MatchStats& stats) {
  os << "distance,count\n";
  for (const auto& [dist, n] : stats.distance_histogram) os << dist << ',' << n << '\n';
}

void write_similarity_csv(std::ostream& os, const MatchStats& stats) {
  os << "sim_bucket,count\n";
  char buf[32];
  for (std::size_t b = 0; b < kSimilarityBuckets; ++b) {
    std::snprintf(buf, sizeof buf, "%.1f", MatchStats::bucket_lower_edge(b));
    os << buf << ',' << stats.similarity_histogram[b] << '\n';
  }
}

std::size_t patch_destinations_in_frame(std::size_t frame_in_group, std::size_t patch_count,
                                        std::size_t r) noexcept {
  const std::size_t offset = frame_in_group % r;
  if (offset >= patch_count) return 0;
  return (patch_count - offset + r - 1) / r;
}

std::vector<std::size_t> select_destinations(IndexRange frames, const FrameLayout& layout,
                                             std::size_t r) {
  if (r < 1) throw InvalidInput("select_destinations: reduction factor must be >= 1");
  const std::size_t P = layout.tokens_per_frame();
  std::vector<std::size_t> dst;
  for (std::size_t f = frames.begin; f < frames.end; ++f) {
    const std::size_t base = f * P;
    const std::size_t offset = (f - frames.begin) % r;
    for (std::size_t s = 0; s < layout.special_count; ++s) dst.push_back(base + s);
    for (std::size_t p = offset; p < layout.patch_count; p += r) {
      dst.push_back(base + layout.special_count + p);
    }
  }
  return dst;
}

MergeMap build_skeleton(std::span<const IndexRange> frame_groups, const FrameLayout& layout,
                        std::size_t r) {
  const std::size_t P = layout.tokens_per_frame();
  MergeMap map;
  map.tokens_per_frame = P;
  for (const auto& g : frame_groups) {
    auto dst = select_destinations(g, layout, r);
    for (std::size_t idx : dst) {
      map.dst_indices.push_back(idx);
      if (!layout.is_special(idx % P)) map.targets.push_back(idx);
    }
    map.group_bounds.push_back({g.begin * P, g.end * P});
    map.n_total = g.end * P;
  }
  return map;
}

MatchResult bipartite_match(const Matrix& tokens, const MergeMap& skeleton) {
  if (tokens.rows() != skeleton.n_total) {
    throw InvalidInput("bipartite_match: " + std::to_string(tokens.rows()) +
                       " tokens for a map over " + std::to_string(skeleton.n_total));
  }
  MatchResult result{skeleton, {}};
  result.map.src_assign.clear();
  const std::size_t P = skeleton.tokens_per_frame;

  std::vector<unsigned char> is_dst(skeleton.n_total, 0);
  for (std::size_t d : skeleton.dst_indices) is_dst[d] = 1;

  std::vector<double> norms(tokens.rows());
  for (std::size_t i = 0; i < tokens.rows(); ++i) norms[i] = l2_norm(tokens.row(i));

  const std::span<const std::size_t> all_targets(skeleton.targets);
  std::size_t next_target = 0;
  for (const auto& group : skeleton.group_bounds) {
    const std::size_t first = next_target;
    while (next_target < all_targets.size() && all_targets[next_target] < group.end) ++next_target;
    const auto group_targets = all_targets.subspan(first, next_target - first);

    for (std::size_t s = group.begin; s < group.end; ++s) {
      if (is_dst[s]) continue;
      if (group_targets.empty()) {
        throw ConfigError("bipartite_match: group [" + std::to_string(group.begin) + ", " +
                          std::to_string(group.end) + ") has sources but no destinations");
      }
      const auto src_row = tokens.row(s);
      std::size_t best = group_targets.front();
      double best_sim = -2.0;
      for (std::size_t d : group_targets) {
        const double sim = cosine_from_norms(dot(src_row, tokens.row(d)), norms[s], norms[d]);
        if (sim > best_sim) {
          best_sim = sim;
          best = d;
        }
      }
      result.stats.comparisons += group_targets.size();
      result.map.src_assign.push_back({s, best});
      const std::size_t fs = s / P;
      const std::size_t fd = best / P;
      result.stats.record(fs > fd ? fs - fd : fd - fs, best_sim);
    }
  }
  thread_mac_tally().similarity += result.stats.comparisons;
  return result;
}

Matrix merge(const Matrix& tokens, const MergeMap& map) {
  if (tokens.rows() != map.n_total) {
    throw InvalidInput("merge: " + std::to_string(tokens.rows()) + " tokens for a map over " +
                       std::to_string(map.n_total));
  }
  const std::size_t d = tokens.cols();
  Matrix out = gather_rows(tokens, map.dst_indices);
  if (map.src_assign.empty()) return out;

  std::vector<std::size_t> rank(map.n_total, map.n_total);
  for (std::size_t r = 0; r < map.dst_indices.size(); ++r) rank[map.dst_indices[r]] = r;
  std::vector<std::size_t> members(map.dst_indices.size(), 1);

  for (const auto& [s, dst] : map.src_assign) {
    if (s >= map.n_total || dst >= map.n_total || rank[dst] == map.n_total) {
      throw InvalidInput("merge: assignment " + std::to_string(s) + "->" + std::to_string(dst) +
                         " does not target a destination");
    }
    const std::size_t r = rank[dst];
    const double n = static_cast<double>(++members[r]);
    double* acc = out.row(r).data();
    const double* x = tokens.row(s).data();
    for (std::size_t j = 0; j < d; ++j) acc[j] += (x[j] - acc[j]) / n;
  }
  return out;
}

Matrix unmerge(const Matrix& reduced, const MergeMap& map) {
  if (reduced.rows() != map.dst_indices.size()) {
    throw InvalidInput("unmerge: " + std::to_string(reduced.rows()) + " rows for " +
                       std::to_string(map.dst_indices.size()) + " destinations");
  }
  const auto rank = map.representative_rank();
  return gather_rows(reduced, rank);
}

}  // namespace tokred
