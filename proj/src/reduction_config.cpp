#include "tokred/reduction_config.h"

#include <sstream>

#include "tokred/document.h"
#include "tokred/errors.h"
#include "yaml_doc.h"

namespace tokred {

ReductionConfig ReductionConfig::unreduced() {
  ReductionConfig c;
  c.use_length_adaptive = false;
  c.multiplier_l = 1;
  return c;
}

void ReductionConfig::validate() const {
  if (r_q_override && *r_q_override < 1) throw ConfigError("config: r_q must be >= 1");
  if (r_kv_override && *r_kv_override < 1) throw ConfigError("config: r_kv must be >= 1");
  if (group_size < 1) throw ConfigError("config: group_size must be >= 1");
  if (multiplier_l < 1) throw ConfigError("config: multiplier_l must be >= 1");
}

std::size_t resolve_rq(const ReductionConfig& config, std::size_t frames) {
  if (config.r_q_override) return *config.r_q_override;
  return config.use_length_adaptive ? length_adaptive_rq(frames) : 1;
}

std::size_t resolve_rkv(const ReductionConfig& config, std::size_t frames) {
  if (config.r_kv_override) return *config.r_kv_override;
  return config.use_length_adaptive ? length_adaptive_rkv(frames) : 1;
}

ReductionPlan make_plan(const BackboneSpec& spec, std::size_t frames,
                        const ReductionConfig& config, const LayerTierSchedule* schedule) {
  config.validate();
  const std::size_t globals = spec.global_layer_count();
  const std::size_t r_q = resolve_rq(config, frames);
  const std::size_t r_kv = resolve_rkv(config, frames);
  if (schedule != nullptr) {
    for (const auto& e : schedule->layers) {
      if (e.index >= globals) {
        throw ConfigError("schedule references global layer " + std::to_string(e.index) +
                          " but the model has " + std::to_string(globals));
      }
    }
  }
  ReductionPlan plan;
  for (std::size_t i = 0; i < globals; ++i) {
    const bool low = schedule != nullptr && schedule->tier_of(i) == Tier::Low;
    KvReducer kv{low ? config.multiplier_l * r_kv : r_kv, config.kv_mode, config.seed + i};
    plan.global_layers.push_back({QueryReducer{r_q, config.group_size}, kv});
  }
  return plan;
}

std::string serialize_backbone_spec(const BackboneSpec& spec) {
  std::ostringstream os;
  os << "n_layers: " << spec.n_layers << '\n';
  os << "layer_kinds: [";
  for (std::size_t i = 0; i < spec.layer_kinds.size(); ++i) {
    os << (i ? ", " : "") << to_string(spec.layer_kinds[i]);
  }
  os << "]\n";
  os << "dim: " << spec.dim << '\n';
  os << "patch_count: " << spec.layout.patch_count << '\n';
  os << "special_count: " << spec.layout.special_count << '\n';
  os << "seed: " << spec.seed << '\n';
  os << "weight_scale: " << format_double(spec.weight_scale) << '\n';
  os << "excluded_global_layers: [";
  bool first = true;
  for (std::size_t idx : spec.excluded_global_layers) {
    os << (first ? "" : ", ") << idx;
    first = false;
  }
  os << "]\n";
  return os.str();
}

namespace {

BackboneSpec backbone_from_node(const YAML::Node& root) {
  using namespace detail;
  constexpr std::string_view what = "backbone spec";
  reject_unknown(root, {"n_layers", "layer_kinds", "dim", "patch_count", "special_count", "seed",
                        "weight_scale", "excluded_global_layers"},
                 what);
  const std::size_t n_layers = convert_count(require(root, "n_layers", what), "n_layers", what);
  BackboneSpec spec = BackboneSpec::alternating(n_layers);
  if (root["layer_kinds"]) {
    const YAML::Node kinds = root["layer_kinds"];
    if (!kinds.IsSequence()) throw ParseError("backbone spec: 'layer_kinds' must be a list", line_of(kinds), "layer_kinds");
    spec.layer_kinds.clear();
    for (const auto& k : kinds) {
      const auto kind = parse_layer_kind(convert<std::string>(k, "layer_kinds", what));
      if (!kind) throw ParseError("backbone spec: layer kind must be 'frame' or 'global'" + at_line(line_of(k)), line_of(k), "layer_kinds");
      spec.layer_kinds.push_back(*kind);
    }
  }
  if (root["dim"]) spec.dim = convert_count(root["dim"], "dim", what);
  if (root["patch_count"]) spec.layout.patch_count = convert_count(root["patch_count"], "patch_count", what);
  if (root["special_count"]) spec.layout.special_count = convert_count(root["special_count"], "special_count", what);
  if (root["seed"]) spec.seed = convert_count(root["seed"], "seed", what);
  if (root["weight_scale"]) spec.weight_scale = convert<double>(root["weight_scale"], "weight_scale", what);
  if (root["excluded_global_layers"]) {
    const YAML::Node ex = root["excluded_global_layers"];
    if (!ex.IsSequence()) throw ParseError("backbone spec: 'excluded_global_layers' must be a list", line_of(ex), "excluded_global_layers");
    for (const auto& e : ex) spec.excluded_global_layers.insert(convert_count(e, "excluded_global_layers", what));
  }
  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw ParseError(e.what(), line_of(root), "");
  }
  return spec;
}

ReductionConfig reduction_from_node(const YAML::Node& root) {
  using namespace detail;
  constexpr std::string_view what = "reduction config";
  reject_unknown(root, {"r_q", "r_kv", "group_size", "multiplier_l", "length_adaptive", "schedule",
                        "kv_mode", "seed"},
                 what);
  ReductionConfig c;
  if (root["r_q"]) c.r_q_override = convert_count(root["r_q"], "r_q", what);
  if (root["r_kv"]) c.r_kv_override = convert_count(root["r_kv"], "r_kv", what);
  if (root["group_size"]) c.group_size = convert_count(root["group_size"], "group_size", what);
  if (root["multiplier_l"]) c.multiplier_l = convert_count(root["multiplier_l"], "multiplier_l", what);
  if (root["length_adaptive"]) c.use_length_adaptive = convert<bool>(root["length_adaptive"], "length_adaptive", what);
  if (root["schedule"]) c.schedule_path = convert<std::string>(root["schedule"], "schedule", what);
  if (root["kv_mode"]) {
    const YAML::Node n = root["kv_mode"];
    const auto mode = parse_kv_mode(convert<std::string>(n, "kv_mode", what));
    if (!mode) throw ParseError("reduction config: unknown kv_mode" + at_line(line_of(n)), line_of(n), "kv_mode");
    c.kv_mode = *mode;
  }
  if (root["seed"]) c.seed = convert_count(root["seed"], "seed", what);
  const auto bad = [&](const char* field) {
    throw ParseError(std::string("reduction config: field '") + field + "' must be >= 1" +
                         at_line(line_of(root[field])),
                     line_of(root[field]), field);
  };
  if (c.r_q_override && *c.r_q_override < 1) bad("r_q");
  if (c.r_kv_override && *c.r_kv_override < 1) bad("r_kv");
  if (c.group_size < 1) bad("group_size");
  if (c.multiplier_l < 1) bad("multiplier_l");
  return c;
}

}  // namespace

BackboneSpec parse_backbone_spec(std::string_view text) {
  return backbone_from_node(detail::load_document(text, "backbone spec"));
}

std::string serialize_reduction_config(const ReductionConfig& c) {
  std::ostringstream os;
  if (c.r_q_override) os << "r_q: " << *c.r_q_override << '\n';
  if (c.r_kv_override) os << "r_kv: " << *c.r_kv_override << '\n';
  os << "group_size: " << c.group_size << '\n';
  os << "multiplier_l: " << c.multiplier_l << '\n';
  os << "length_adaptive: " << (c.use_length_adaptive ? "true" : "false") << '\n';
  if (c.schedule_path) os << "schedule: \"" << *c.schedule_path << "\"\n";
  os << "kv_mode: " << to_string(c.kv_mode) << '\n';
  os << "seed: " << c.seed << '\n';
  return os.str();
}

ReductionConfig parse_reduction_config(std::string_view text) {
  return reduction_from_node(detail::load_document(text, "reduction config"));
}

RunDocument parse_run_document(std::string_view text) {
  using namespace detail;
  const YAML::Node root = load_document(text, "config");
  reject_unknown(root, {"backbone", "reduction"}, "config");
  RunDocument doc;
  if (root["backbone"]) {
    if (!root["backbone"].IsMap()) throw ParseError("config: 'backbone' must be a mapping", line_of(root["backbone"]), "backbone");
    doc.backbone = backbone_from_node(root["backbone"]);
  }
  if (root["reduction"]) {
    if (!root["reduction"].IsMap()) throw ParseError("config: 'reduction' must be a mapping", line_of(root["reduction"]), "reduction");
    doc.reduction = reduction_from_node(root["reduction"]);
  }
  return doc;
}

}  // namespace tokred
