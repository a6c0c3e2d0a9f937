#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tokred/backbone.h"
#include "tokred/kv_path.h"
#include "tokred/layer_schedule.h"
#include "tokred/query_path.h"

namespace tokred {

// Resolution order for r_Q and r_KV: explicit override, then the
// length-adaptive rule (if enabled), then 1.
struct ReductionConfig {
  std::optional<std::size_t> r_q_override;
  std::optional<std::size_t> r_kv_override;
  std::size_t group_size = kDefaultGroupSize;
  std::size_t multiplier_l = kDefaultMultiplier;
  bool use_length_adaptive = true;
  std::optional<std::string> schedule_path;
  KvMode kv_mode = KvMode::StridePrune;
  std::uint64_t seed = 0;  // RandomTokenPrune sampling

  // Everything off: r_Q = r_KV = 1, l = 1.
  static ReductionConfig unreduced();

  void validate() const;
  friend bool operator==(const ReductionConfig&, const ReductionConfig&) = default;
};

std::size_t resolve_rq(const ReductionConfig& config, std::size_t frames);
std::size_t resolve_rkv(const ReductionConfig& config, std::size_t frames);

// Per-layer reducers for S frames. With a schedule, low-sensitivity layers
// get multiplier_l * r_KV; without one every layer gets r_KV.
ReductionPlan make_plan(const BackboneSpec& spec, std::size_t frames,
                        const ReductionConfig& config,
                        const LayerTierSchedule* schedule = nullptr);

// Structured-document forms (same format family as schedule files).
std::string serialize_backbone_spec(const BackboneSpec& spec);
BackboneSpec parse_backbone_spec(std::string_view text);
std::string serialize_reduction_config(const ReductionConfig& config);
ReductionConfig parse_reduction_config(std::string_view text);

// A run configuration file: optional `backbone:` and `reduction:` sections.
struct RunDocument {
  BackboneSpec backbone = BackboneSpec::alternating(8);
  ReductionConfig reduction{};
};
RunDocument parse_run_document(std::string_view text);

}  // namespace tokred
