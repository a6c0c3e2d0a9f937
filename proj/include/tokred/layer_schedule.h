#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tokred/backbone.h"
#include "tokred/kv_path.h"

namespace tokred {

inline constexpr std::size_t kDefaultProbeBaseR = 32;
inline constexpr std::size_t kDefaultProbeR = 256;
inline constexpr double kDefaultTierThreshold = 1.05;
inline constexpr std::size_t kDefaultMultiplier = 3;

struct LayerSensitivity {
  std::size_t index = 0;  // global-layer ordinal
  double degradation_ratio = 0.0;
  double error = 0.0;     // divergence with this layer at probe_r
};

struct SensitivityReport {
  std::size_t base_r = kDefaultProbeBaseR;
  std::size_t probe_r = kDefaultProbeR;
  std::size_t global_layer_count = 0;
  double base_error = 0.0;  // divergence with every layer at base_r
  std::vector<LayerSensitivity> layers;  // one per non-excluded global layer, ascending
  std::set<std::size_t> excluded_layers;

  const LayerSensitivity* find(std::size_t index) const noexcept;
};

struct ProbeOptions {
  std::size_t base_r = kDefaultProbeBaseR;
  std::size_t probe_r = kDefaultProbeR;
  std::optional<std::set<std::size_t>> excluded;  // defaults to the spec's excluded layers
  KvMode mode = KvMode::StridePrune;
};

// For every non-excluded global layer, raises that layer's KV reduction from
// base_r to probe_r (all other layers at base_r, queries unreduced) and
// reports the ratio of patch-token divergence from the unreduced forward.
// A layer whose probed and base errors are both zero gets ratio 1.
SensitivityReport probe_sensitivity(const Model& model, const TokenTensor& eval_input,
                                    const ProbeOptions& options = {});

enum class Tier { High, Low, Excluded };

struct ScheduleEntry {
  std::size_t index = 0;
  std::optional<double> ratio;  // absent for excluded layers
  std::size_t assigned_r_kv = 1;
  bool excluded = false;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

struct LayerTierSchedule {
  std::size_t base_r_kv = 1;
  double threshold = kDefaultTierThreshold;
  std::size_t multiplier_l = kDefaultMultiplier;
  std::vector<ScheduleEntry> layers;  // ascending by index

  Tier tier(const ScheduleEntry& entry) const noexcept;
  // Tier of a global layer; layers the schedule does not list stay High.
  Tier tier_of(std::size_t index) const noexcept;
  std::vector<std::size_t> assignments() const;

  friend bool operator==(const LayerTierSchedule&, const LayerTierSchedule&) = default;
};

// Layers whose ratio exceeds `threshold` keep base_r_kv; the rest get l * base_r_kv.
// Excluded layers keep base_r_kv and are flagged.
LayerTierSchedule build_schedule(const SensitivityReport& report, std::size_t base_r_kv,
                                 double threshold = kDefaultTierThreshold,
                                 std::size_t multiplier_l = kDefaultMultiplier);

std::string serialize_schedule(const LayerTierSchedule& schedule);
LayerTierSchedule parse_schedule(std::string_view text);
void save_schedule(const std::filesystem::path& path, const LayerTierSchedule& schedule);
LayerTierSchedule load_schedule(const std::filesystem::path& path);

}  // namespace tokred
