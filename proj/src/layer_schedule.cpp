#include "tokred/layer_schedule.h"

#include <algorithm>
#include <sstream>

#include "tokred/document.h"
#include "tokred/errors.h"
#include "yaml_doc.h"

namespace tokred {

const LayerSensitivity* SensitivityReport::find(std::size_t index) const noexcept {
  for (const auto& l : layers)
    if (l.index == index) return &l;
  return nullptr;
}

SensitivityReport probe_sensitivity(const Model& model, const TokenTensor& eval_input,
                                    const ProbeOptions& options) {
  if (options.base_r < 1 || options.base_r > options.probe_r) {
    throw InvalidInput("probe_sensitivity: need 1 <= base_r <= probe_r, got " +
                       std::to_string(options.base_r) + " and " + std::to_string(options.probe_r));
  }
  if (eval_input.frames() < options.probe_r) {
    throw InvalidInput("probe_sensitivity: " + std::to_string(eval_input.frames()) +
                       " frames is shorter than probe_r = " + std::to_string(options.probe_r));
  }
  const std::size_t globals = model.spec.global_layer_count();
  SensitivityReport report;
  report.base_r = options.base_r;
  report.probe_r = options.probe_r;
  report.global_layer_count = globals;
  report.excluded_layers = options.excluded.value_or(model.spec.excluded_global_layers);
  for (std::size_t idx : report.excluded_layers) {
    if (idx >= globals) {
      throw ConfigError("probe_sensitivity: excluded layer " + std::to_string(idx) +
                        " does not exist (" + std::to_string(globals) + " global layers)");
    }
  }

  const auto& layout = model.spec.layout;
  const TokenTensor reference = forward_unreduced(model, eval_input);
  const ReductionPlan base_plan =
      ReductionPlan::uniform(globals, QueryReducer{1}, KvReducer{options.base_r, options.mode});
  report.base_error = patch_divergence(forward(model, eval_input, base_plan), reference, layout);

  for (std::size_t i = 0; i < globals; ++i) {
    if (report.excluded_layers.contains(i)) continue;
    ReductionPlan plan = base_plan;
    plan.global_layers[i].kv.r_kv = options.probe_r;
    const double err = patch_divergence(forward(model, eval_input, plan), reference, layout);
    double ratio = 1.0;
    if (report.base_error != 0.0) {
      ratio = err / report.base_error;
    } else if (err != 0.0) {
      throw ConfigError("probe_sensitivity: base reduction leaves the output unchanged but layer " +
                        std::to_string(i) + " does not; ratio undefined");
    }
    report.layers.push_back({i, ratio, err});
  }
  return report;
}

Tier LayerTierSchedule::tier(const ScheduleEntry& entry) const noexcept {
  if (entry.excluded) return Tier::Excluded;
  if (entry.ratio && *entry.ratio <= threshold) return Tier::Low;
  return Tier::High;
}

Tier LayerTierSchedule::tier_of(std::size_t index) const noexcept {
  for (const auto& e : layers)
    if (e.index == index) return tier(e);
  return Tier::High;
}

std::vector<std::size_t> LayerTierSchedule::assignments() const {
  std::vector<std::size_t> out;
  out.reserve(layers.size());
  for (const auto& e : layers) out.push_back(e.assigned_r_kv);
  return out;
}

LayerTierSchedule build_schedule(const SensitivityReport& report, std::size_t base_r_kv,
                                 double threshold, std::size_t multiplier_l) {
  if (base_r_kv < 1 || multiplier_l < 1) {
    throw InvalidInput("build_schedule: base_r_kv and multiplier must be >= 1");
  }
  LayerTierSchedule schedule{base_r_kv, threshold, multiplier_l, {}};
  for (const auto& l : report.layers) {
    ScheduleEntry e{l.index, l.degradation_ratio, base_r_kv, false};
    if (schedule.tier(e) == Tier::Low) e.assigned_r_kv = multiplier_l * base_r_kv;
    schedule.layers.push_back(e);
  }
  for (std::size_t idx : report.excluded_layers) {
    schedule.layers.push_back({idx, std::nullopt, base_r_kv, true});
  }
  std::sort(schedule.layers.begin(), schedule.layers.end(),
            [](const ScheduleEntry& a, const ScheduleEntry& b) { return a.index < b.index; });
  return schedule;
}

std::string serialize_schedule(const LayerTierSchedule& schedule) {
  std::ostringstream os;
  os << "base_r_kv: " << schedule.base_r_kv << '\n';
  os << "threshold: " << format_double(schedule.threshold) << '\n';
  os << "multiplier_l: " << schedule.multiplier_l << '\n';
  if (schedule.layers.empty()) {
    os << "layers: []\n";
    return os.str();
  }
  os << "layers:\n";
  for (const auto& e : schedule.layers) {
    os << "  - index: " << e.index << '\n';
    if (e.ratio) os << "    ratio: " << format_double(*e.ratio) << '\n';
    os << "    assigned_r_kv: " << e.assigned_r_kv << '\n';
    os << "    excluded: " << (e.excluded ? "true" : "false") << '\n';
  }
  return os.str();
}

LayerTierSchedule parse_schedule(std::string_view text) {
  using namespace detail;
  constexpr std::string_view what = "schedule";
  const YAML::Node root = load_document(text, what);
  reject_unknown(root, {"base_r_kv", "threshold", "multiplier_l", "layers"}, what);

  LayerTierSchedule s;
  s.base_r_kv = convert_count(require(root, "base_r_kv", what), "base_r_kv", what);
  s.threshold = convert<double>(require(root, "threshold", what), "threshold", what);
  s.multiplier_l = convert_count(require(root, "multiplier_l", what), "multiplier_l", what);
  if (s.base_r_kv < 1) throw ParseError("schedule: base_r_kv must be >= 1", line_of(root["base_r_kv"]), "base_r_kv");
  if (s.multiplier_l < 1) throw ParseError("schedule: multiplier_l must be >= 1", line_of(root["multiplier_l"]), "multiplier_l");

  const YAML::Node layers = require(root, "layers", what);
  if (!layers.IsSequence()) throw ParseError("schedule: 'layers' must be a list", line_of(layers), "layers");
  for (const auto& node : layers) {
    if (!node.IsMap()) throw ParseError("schedule: layer entry must be a mapping", line_of(node), "layers");
    reject_unknown(node, {"index", "ratio", "assigned_r_kv", "excluded"}, what);
    ScheduleEntry e;
    e.index = convert_count(require(node, "index", what), "index", what);
    if (node["ratio"]) e.ratio = convert<double>(node["ratio"], "ratio", what);
    e.assigned_r_kv = convert_count(require(node, "assigned_r_kv", what), "assigned_r_kv", what);
    e.excluded = convert<bool>(require(node, "excluded", what), "excluded", what);

    const std::size_t line = line_of(node);
    if (!s.layers.empty() && s.layers.back().index >= e.index) {
      throw ParseError("schedule: layer indices must be strictly ascending" + at_line(line), line, "index");
    }
    if (e.excluded && e.ratio) {
      throw ParseError("schedule: excluded layer " + std::to_string(e.index) + " carries a ratio" + at_line(line), line, "ratio");
    }
    const std::size_t expected = s.tier(e) == Tier::Low ? s.multiplier_l * s.base_r_kv : s.base_r_kv;
    if (e.assigned_r_kv != expected) {
      throw ParseError("schedule: layer " + std::to_string(e.index) + " assigned_r_kv " +
                           std::to_string(e.assigned_r_kv) + " disagrees with its tier (expected " +
                           std::to_string(expected) + ")" + at_line(line),
                       line, "assigned_r_kv");
    }
    s.layers.push_back(e);
  }
  return s;
}

void save_schedule(const std::filesystem::path& path, const LayerTierSchedule& schedule) {
  write_text_file(path, serialize_schedule(schedule));
}

LayerTierSchedule load_schedule(const std::filesystem::path& path) {
  return parse_schedule(read_text_file(path));
}

}  // namespace tokred
