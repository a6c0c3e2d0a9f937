#include "tokred/flops.h"

#include <ostream>

#include "tokred/errors.h"

namespace tokred {

LayerFlops global_layer_flops(std::uint64_t query_rows, std::uint64_t kv_rows, std::size_t dim) {
  LayerFlops f;
  f.kind = LayerKind::Global;
  f.query_rows = query_rows;
  f.kv_rows = kv_rows;
  f.score_flops = 2 * query_rows * kv_rows * dim;
  f.value_flops = 2 * query_rows * kv_rows * dim;
  f.projection_flops = 2 * static_cast<std::uint64_t>(dim) * dim * (2 * query_rows + 2 * kv_rows);
  return f;
}

LayerFlops frame_layer_flops(std::size_t frames, std::size_t tokens_per_frame, std::size_t dim) {
  const std::uint64_t S = frames;
  const std::uint64_t P = tokens_per_frame;
  LayerFlops f;
  f.kind = LayerKind::Frame;
  f.query_rows = S * P;
  f.kv_rows = S * P;
  f.score_flops = 2 * S * P * P * dim;
  f.value_flops = 2 * S * P * P * dim;
  f.projection_flops = 2 * static_cast<std::uint64_t>(dim) * dim * 4 * S * P;
  return f;
}

namespace {

void finish(FlopReport& r) {
  r.score_total = r.value_total = r.projection_total = r.total = r.match_comparisons = 0;
  for (const auto& l : r.layers) {
    r.score_total += l.score_flops;
    r.value_total += l.value_flops;
    r.projection_total += l.projection_flops;
    r.total += l.total();
    r.match_comparisons += l.match_comparisons;
  }
}

}  // namespace

FlopReport count_flops(const BackboneSpec& spec, std::size_t frames, const ReductionPlan& plan) {
  spec.validate();
  if (plan.global_layers.size() != spec.global_layer_count()) {
    throw ConfigError("count_flops: plan does not match the model's global layers");
  }
  const std::size_t P = spec.layout.tokens_per_frame();
  FlopReport report;
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < spec.n_layers; ++i) {
    LayerFlops f;
    if (spec.layer_kinds[i] == LayerKind::Frame) {
      f = frame_layer_flops(frames, P, spec.dim);
    } else {
      const auto& lp = plan.global_layers[ordinal++];
      f = global_layer_flops(query_path_length(frames, spec.layout, lp.query),
                             kv_path_length(frames, P, lp.kv.r_kv), spec.dim);
      f.match_comparisons = query_match_comparisons(frames, spec.layout, lp.query);
      if (lp.kv.mode == KvMode::StrideMergeWithAverage && !lp.kv.is_identity()) {
        const std::uint64_t kept = kv_path_length(frames, P, lp.kv.r_kv);
        f.match_comparisons += (frames * P - kept) * kept;
      }
    }
    f.layer = i;
    report.layers.push_back(f);
  }
  finish(report);
  const FlopReport base = count_flops_unreduced(spec, frames);
  report.speedup_vs_unreduced =
      report.total == 0 ? 1.0 : static_cast<double>(base.total) / static_cast<double>(report.total);
  return report;
}

FlopReport count_flops_unreduced(const BackboneSpec& spec, std::size_t frames) {
  spec.validate();
  const std::size_t P = spec.layout.tokens_per_frame();
  FlopReport report;
  for (std::size_t i = 0; i < spec.n_layers; ++i) {
    LayerFlops f = spec.layer_kinds[i] == LayerKind::Frame
                       ? frame_layer_flops(frames, P, spec.dim)
                       : global_layer_flops(frames * P, frames * P, spec.dim);
    f.layer = i;
    report.layers.push_back(f);
  }
  finish(report);
  return report;
}

void write_flop_csv(std::ostream& os, const FlopReport& report) {
  os << "layer,kind,query_rows,kv_rows,score_flops,value_flops,projection_flops\n";
  for (const auto& l : report.layers) {
    os << l.layer << ',' << to_string(l.kind) << ',' << l.query_rows << ',' << l.kv_rows << ','
       << l.score_flops << ',' << l.value_flops << ',' << l.projection_flops << '\n';
  }
}

}  // namespace tokred
