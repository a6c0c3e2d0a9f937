#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tokred/attention.h"
#include "tokred/backbone.h"

namespace tokred {

// Closed-form FLOPs (2 per multiply-accumulate) of one attention layer.
struct LayerFlops {
  std::size_t layer = 0;  // backbone layer index
  LayerKind kind = LayerKind::Frame;
  std::uint64_t query_rows = 0;
  std::uint64_t kv_rows = 0;
  std::uint64_t score_flops = 0;
  std::uint64_t value_flops = 0;
  std::uint64_t projection_flops = 0;
  std::uint64_t match_comparisons = 0;

  std::uint64_t attention_flops() const noexcept { return score_flops + value_flops; }
  std::uint64_t total() const noexcept { return score_flops + value_flops + projection_flops; }
};

// Global layer: score = value = 2 Nq Nkv d; projections 2 d^2 (2 Nq + 2 Nkv).
LayerFlops global_layer_flops(std::uint64_t query_rows, std::uint64_t kv_rows, std::size_t dim);
// Frame layer over S frames of P tokens: per-frame attention, 4 projections on all S*P rows.
LayerFlops frame_layer_flops(std::size_t frames, std::size_t tokens_per_frame, std::size_t dim);

struct FlopReport {
  std::vector<LayerFlops> layers;
  std::uint64_t score_total = 0;
  std::uint64_t value_total = 0;
  std::uint64_t projection_total = 0;
  std::uint64_t total = 0;
  std::uint64_t match_comparisons = 0;
  double speedup_vs_unreduced = 1.0;
};

FlopReport count_flops(const BackboneSpec& spec, std::size_t frames, const ReductionPlan& plan);
FlopReport count_flops_unreduced(const BackboneSpec& spec, std::size_t frames);

// CSV columns: layer,kind,query_rows,kv_rows,score_flops,value_flops,projection_flops
void write_flop_csv(std::ostream& os, const FlopReport& report);

}  // namespace tokred
