#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokred/backbone.h"
#include "tokred/flops.h"
#include "tokred/layer_schedule.h"
#include "tokred/reduction_config.h"

namespace tokred {

// Median wall-clock seconds of `repetitions` calls.
double median_seconds(std::size_t repetitions, const std::function<void()>& fn);

struct InputOptions {
  SequenceMode mode = SequenceMode::SmoothWalk;
  std::uint64_t seed = 0;
  double sigma = kDefaultWalkSigma;
};

TokenTensor make_input(const BackboneSpec& spec, std::size_t frames, const InputOptions& input);

// One reduced forward compared against the unreduced forward on the same input.
struct RunReport {
  std::size_t frames = 0;
  std::size_t r_q = 1;
  std::size_t r_kv = 1;
  ReductionPlan plan;
  FlopReport flops;
  FlopReport unreduced_flops;
  double reduced_seconds = 0.0;
  double unreduced_seconds = 0.0;
  double divergence = 0.0;
  MatchStats query_stats;
};

RunReport run_comparison(const Model& model, const TokenTensor& x, const ReductionConfig& config,
                         const LayerTierSchedule* schedule, std::size_t repetitions = 1);

void print_run_report(std::ostream& os, const RunReport& report);
// CSV columns: S,config,r_q,r_kv,time_s,unreduced_time_s,flops,unreduced_flops,flop_speedup,divergence
void write_run_csv(std::ostream& os, const RunReport& report);

struct NamedConfig {
  std::string name;
  ReductionConfig config;
  std::optional<LayerTierSchedule> schedule;
};

struct BenchRow {
  std::size_t frames = 0;
  std::string config;
  double time_s = 0.0;
  std::uint64_t flops = 0;
  double divergence = 0.0;
};

// For each S: the unreduced forward plus every named config, timed (median of
// `repetitions`), FLOP-counted and compared against the unreduced output.
// The config named "unreduced" runs the reference forward.
std::vector<BenchRow> bench_scaling(const Model& model, std::span<const std::size_t> frame_counts,
                                    std::span<const NamedConfig> configs,
                                    const InputOptions& input, std::size_t repetitions = 1);

// CSV columns: S,config,time_s,flops,divergence
void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows);

enum class AblationAxis { Rq, Rkv, L, G, KvMode };

std::string_view to_string(AblationAxis axis) noexcept;
std::optional<AblationAxis> parse_ablation_axis(std::string_view name) noexcept;

struct AblationOptions {
  std::size_t frames = 256;
  std::size_t repetitions = 1;
  InputOptions input{};
  std::optional<LayerTierSchedule> schedule;  // required for the l axis
};

struct AblationRow {
  std::string axis;
  std::string value;
  double time_s = 0.0;
  double match_time_s = 0.0;  // G axis: query matching alone
  std::uint64_t flops = 0;
  double divergence = 0.0;
};

// Configuration a single ablation point runs with. Everything not on the
// axis stays at the axis default: rq sweeps r_Q with r_KV = 1; rkv sweeps
// r_KV with r_Q = 1; l sweeps the multiplier at r_Q = 1, r_KV = 8 under the
// given schedule; G sweeps the group size at the length-adaptive factors
// (r_Q >= 2); kv_mode sweeps the KV operator at r_Q = 1 and the
// length-adaptive r_KV (>= 2).
ReductionConfig ablation_config(AblationAxis axis, std::string_view value, std::size_t frames);

std::vector<AblationRow> ablate(const Model& model, AblationAxis axis,
                                std::span<const std::string> values,
                                const AblationOptions& options);

// CSV columns: axis,value,time_s,match_time_s,flops,divergence
void write_ablation_csv(std::ostream& os, std::span<const AblationRow> rows);

// CSV columns: layer,ratio
void write_sensitivity_csv(std::ostream& os, const SensitivityReport& report);

}  // namespace tokred
