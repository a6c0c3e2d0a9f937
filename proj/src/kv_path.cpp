#include "tokred/kv_path.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "tokred/errors.h"
#include "tokred/kernels.h"

namespace tokred {

std::string_view to_string(KvMode mode) noexcept {
  switch (mode) {
    case KvMode::StridePrune: return "stride_prune";
    case KvMode::StrideMergeWithAverage: return "stride_merge";
    case KvMode::RandomTokenPrune: return "random_prune";
  }
  return "unknown";
}

std::optional<KvMode> parse_kv_mode(std::string_view name) noexcept {
  for (KvMode m : {KvMode::StridePrune, KvMode::StrideMergeWithAverage, KvMode::RandomTokenPrune}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

namespace {

void check_shape(const Matrix& x, std::size_t frames, std::size_t P, std::size_t r_kv,
                 const char* op) {
  if (r_kv < 1) throw InvalidInput(std::string(op) + ": r_kv must be >= 1");
  if (x.rows() != frames * P) {
    throw InvalidInput(std::string(op) + ": " + std::to_string(x.rows()) + " rows, expected " +
                       std::to_string(frames) + "x" + std::to_string(P));
  }
}

std::vector<std::size_t> kept_token_indices(const std::vector<std::size_t>& kept, std::size_t P) {
  std::vector<std::size_t> idx;
  idx.reserve(kept.size() * P);
  for (std::size_t f : kept)
    for (std::size_t t = 0; t < P; ++t) idx.push_back(f * P + t);
  return idx;
}

}  // namespace

std::vector<std::size_t> stride_frames(std::size_t frames, std::size_t r_kv) {
  if (r_kv < 1) throw InvalidInput("stride_frames: r_kv must be >= 1");
  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < frames; f += r_kv) kept.push_back(f);
  return kept;
}

KvReduction stride_prune(const Matrix& x, std::size_t frames, std::size_t tokens_per_frame,
                         std::size_t r_kv) {
  check_shape(x, frames, tokens_per_frame, r_kv, "stride_prune");
  KvReduction out;
  out.kept_frames = stride_frames(frames, r_kv);
  out.tokens = gather_rows(x, kept_token_indices(out.kept_frames, tokens_per_frame));
  return out;
}

KvReduction stride_merge_with_average(const Matrix& x, std::size_t frames,
                                      std::size_t tokens_per_frame, std::size_t r_kv) {
  check_shape(x, frames, tokens_per_frame, r_kv, "stride_merge_with_average");
  KvReduction out;
  out.kept_frames = stride_frames(frames, r_kv);

  MergeMap skeleton;
  skeleton.n_total = x.rows();
  skeleton.tokens_per_frame = tokens_per_frame;
  skeleton.dst_indices = kept_token_indices(out.kept_frames, tokens_per_frame);
  skeleton.targets = skeleton.dst_indices;
  skeleton.group_bounds.push_back({0, x.rows()});

  auto matched = bipartite_match(x, skeleton);
  out.tokens = merge(x, matched.map);
  out.stats = std::move(matched.stats);
  return out;
}

KvReduction random_token_prune(const Matrix& x, std::size_t frames, std::size_t tokens_per_frame,
                               std::size_t r_kv, std::uint64_t seed) {
  check_shape(x, frames, tokens_per_frame, r_kv, "random_token_prune");
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> keep;
  const std::size_t budget = kv_path_length(frames, tokens_per_frame, r_kv);
  keep.reserve(budget);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(keep), budget, rng);
  return {gather_rows(x, keep), {}, {}};
}

KvReduction reduce_kv(const Matrix& x, std::size_t frames, std::size_t tokens_per_frame,
                      const KvReducer& reducer) {
  switch (reducer.mode) {
    case KvMode::StridePrune:
      return stride_prune(x, frames, tokens_per_frame, reducer.r_kv);
    case KvMode::StrideMergeWithAverage:
      return stride_merge_with_average(x, frames, tokens_per_frame, reducer.r_kv);
    case KvMode::RandomTokenPrune:
      return random_token_prune(x, frames, tokens_per_frame, reducer.r_kv, reducer.seed);
  }
  throw InvalidInput("reduce_kv: unknown mode");
}

std::size_t length_adaptive_rkv(std::size_t frames) {
  if (frames <= 100) return 1;
  return (frames + 39) / 40;
}

std::size_t kv_path_length(std::size_t frames, std::size_t tokens_per_frame, std::size_t r_kv) {
  if (r_kv < 1) throw InvalidInput("kv_path_length: r_kv must be >= 1");
  return ((frames + r_kv - 1) / r_kv) * tokens_per_frame;
}

}  // namespace tokred
