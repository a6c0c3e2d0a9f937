// tokred: command-line front end for the token-reduction engine.
//
//   tokred run            reduced vs. unreduced forward, FLOPs, divergence, timing
//   tokred probe          per-layer KV sensitivity probe -> schedule file + CSV
//   tokred bench-scaling  time/FLOPs/divergence across frame counts
//   tokred ablate         sweep one reduction knob
//   tokred schedule-show  print a schedule file
//
// The default seed comes from TOKRED_SEED when --seed is not given.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tokred/bench.h"
#include "tokred/document.h"
#include "tokred/errors.h"
#include "tokred/layer_schedule.h"
#include "tokred/reduction_config.h"

using namespace tokred;

namespace {

struct BackboneFlags {
  std::string spec_path;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> input_seed;
  bool zero_weights = false;
  std::vector<std::size_t> exclude;
  bool exclude_given = false;

  BackboneSpec resolve_spec() const {
    BackboneSpec spec = BackboneSpec::alternating(8, 32, 16, seed);
    if (!spec_path.empty()) spec = parse_backbone_spec(read_text_file(spec_path));
    if (zero_weights) spec.weight_scale = 0.0;
    if (exclude_given) spec.excluded_global_layers = {exclude.begin(), exclude.end()};
    spec.validate();
    return spec;
  }

  InputOptions input() const { return {SequenceMode::SmoothWalk, input_seed.value_or(seed + 1)}; }
};

void add_backbone_flags(CLI::App* cmd, BackboneFlags& f) {
  cmd->add_option("--spec", f.spec_path, "Backbone spec document (default: 8 alternating layers, d=32, 16 patches)");
  cmd->add_option("--seed", f.seed, "Model seed (used when no spec file is given)")->envname("TOKRED_SEED");
  cmd->add_option("--input-seed", f.input_seed, "Input sequence seed (default: seed + 1)");
}

std::ostream* open_csv(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return &std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + path + "'");
  return &file;
}

const char* tier_name(Tier t) {
  switch (t) {
    case Tier::High: return "high";
    case Tier::Low: return "low";
    case Tier::Excluded: return "excluded";
  }
  return "?";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymmetric query/key-value token reduction for global attention"};
  app.require_subcommand(1);

  // run
  BackboneFlags run_bb;
  std::string run_config_path, run_schedule, run_kv_mode, run_csv;
  std::size_t run_frames = 64, run_reps = 1;
  std::optional<std::size_t> run_rq, run_rkv, run_group, run_l;
  bool run_no_adaptive = false;
  auto* run = app.add_subcommand("run", "Run a reduced forward against the unreduced baseline");
  add_backbone_flags(run, run_bb);
  run->add_option("--config", run_config_path, "Run configuration document");
  run->add_option("--frames", run_frames, "Number of frames S")->check(CLI::PositiveNumber);
  run->add_option("--r-q", run_rq, "Query reduction factor override");
  run->add_option("--r-kv", run_rkv, "KV reduction factor override");
  run->add_option("--group-size", run_group, "Frames per matching group");
  run->add_option("--l", run_l, "Multiplier for low-sensitivity layers");
  run->add_option("--schedule", run_schedule, "Layer schedule file");
  run->add_option("--kv-mode", run_kv_mode, "stride_prune | stride_merge | random_prune");
  run->add_flag("--no-length-adaptive", run_no_adaptive, "Disable the length-adaptive r_Q/r_KV rules");
  run->add_option("--reps", run_reps, "Timing repetitions (median)");
  run->add_option("--csv", run_csv, "Write the run CSV here ('-' for stdout)");

  // probe
  BackboneFlags probe_bb;
  std::size_t probe_frames = kDefaultProbeR, probe_base = kDefaultProbeBaseR, probe_r = kDefaultProbeR;
  std::optional<std::size_t> probe_schedule_base;
  double probe_threshold = kDefaultTierThreshold;
  std::size_t probe_l = kDefaultMultiplier;
  std::string probe_out, probe_csv;
  auto* probe = app.add_subcommand("probe", "Probe per-layer KV sensitivity and write a schedule");
  add_backbone_flags(probe, probe_bb);
  probe->add_option("--frames", probe_frames, "Frames in the probing input")->check(CLI::PositiveNumber);
  probe->add_option("--base-r", probe_base, "Reduction factor on every layer");
  probe->add_option("--probe-r", probe_r, "Reduction factor on the probed layer");
  auto* exclude_opt = probe->add_option("--exclude", probe_bb.exclude, "Global layers to skip")->delimiter(',');
  probe->add_flag("--zero-weights", probe_bb.zero_weights, "Use an all-zero (no-op) model");
  probe->add_option("--threshold", probe_threshold, "Degradation ratio separating the tiers");
  probe->add_option("--l", probe_l, "Multiplier for low-sensitivity layers");
  probe->add_option("--schedule-base", probe_schedule_base, "base_r_kv written to the schedule (default: length-adaptive r_KV at --frames)");
  probe->add_option("--out", probe_out, "Schedule file to write");
  probe->add_option("--csv", probe_csv, "Write layer,ratio CSV here ('-' for stdout)");

  // bench-scaling
  BackboneFlags bench_bb;
  std::vector<std::size_t> bench_frames{100, 200, 400};
  std::vector<std::string> bench_configs{"unreduced", "length_adaptive"};
  std::string bench_schedule, bench_csv;
  std::size_t bench_reps = 1, bench_l = kDefaultMultiplier;
  auto* bench = app.add_subcommand("bench-scaling", "Time, FLOPs and divergence across frame counts");
  add_backbone_flags(bench, bench_bb);
  bench->add_option("--frames", bench_frames, "Frame counts")->delimiter(',');
  bench->add_option("--configs", bench_configs, "unreduced, length_adaptive, full (needs --schedule)")->delimiter(',');
  bench->add_option("--schedule", bench_schedule, "Layer schedule for the 'full' config");
  bench->add_option("--l", bench_l, "Multiplier for the 'full' config");
  bench->add_option("--reps", bench_reps, "Timing repetitions (median)");
  bench->add_option("--csv", bench_csv, "Write CSV here ('-' for stdout)");

  // ablate
  BackboneFlags abl_bb;
  std::string abl_axis, abl_schedule, abl_csv;
  std::vector<std::string> abl_values;
  std::size_t abl_frames = 256, abl_reps = 1;
  auto* ablate_cmd = app.add_subcommand("ablate", "Sweep one reduction knob");
  add_backbone_flags(ablate_cmd, abl_bb);
  ablate_cmd->add_option("--axis", abl_axis, "rq | rkv | l | G | kv_mode")->required();
  ablate_cmd->add_option("--values", abl_values, "Values to sweep")->delimiter(',')->required();
  ablate_cmd->add_option("--frames", abl_frames, "Frames S")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--schedule", abl_schedule, "Layer schedule (l axis)");
  ablate_cmd->add_option("--reps", abl_reps, "Timing repetitions (median)");
  ablate_cmd->add_option("--csv", abl_csv, "Write CSV here ('-' for stdout)");

  // schedule-show
  std::string show_path;
  auto* show = app.add_subcommand("schedule-show", "Print a schedule file");
  show->add_option("path", show_path, "Schedule file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      RunDocument doc;
      if (!run_config_path.empty()) doc = parse_run_document(read_text_file(run_config_path));
      if (!run_bb.spec_path.empty()) doc.backbone = run_bb.resolve_spec();
      else if (run_config_path.empty()) doc.backbone = run_bb.resolve_spec();
      ReductionConfig& c = doc.reduction;
      if (run_rq) c.r_q_override = *run_rq;
      if (run_rkv) c.r_kv_override = *run_rkv;
      if (run_group) c.group_size = *run_group;
      if (!run_schedule.empty()) c.schedule_path = run_schedule;
      if (run_no_adaptive) c.use_length_adaptive = false;
      if (!run_kv_mode.empty()) {
        const auto mode = parse_kv_mode(run_kv_mode);
        if (!mode) throw ConfigError("unknown --kv-mode '" + run_kv_mode + "'");
        c.kv_mode = *mode;
      }
      std::optional<LayerTierSchedule> schedule;
      if (c.schedule_path) {
        schedule = load_schedule(*c.schedule_path);
        if (!run_l) c.multiplier_l = schedule->multiplier_l;
      }
      if (run_l) c.multiplier_l = *run_l;
      c.validate();

      const Model model = init_backbone(doc.backbone);
      const TokenTensor x = make_input(model.spec, run_frames, run_bb.input());
      const RunReport report = run_comparison(model, x, c, schedule ? &*schedule : nullptr, run_reps);
      print_run_report(std::cout, report);
      if (!run_csv.empty()) {
        std::ofstream file;
        write_run_csv(*open_csv(run_csv, file), report);
      }
    } else if (*probe) {
      probe_bb.exclude_given = exclude_opt->count() > 0;
      const Model model = init_backbone(probe_bb.resolve_spec());
      const TokenTensor x = make_input(model.spec, probe_frames, probe_bb.input());
      const SensitivityReport report = probe_sensitivity(model, x, {probe_base, probe_r});
      const LayerTierSchedule schedule =
          build_schedule(report, probe_schedule_base.value_or(length_adaptive_rkv(probe_frames)),
                         probe_threshold, probe_l);
      if (!probe_out.empty()) save_schedule(probe_out, schedule);
      std::ofstream file;
      write_sensitivity_csv(*open_csv(probe_csv, file), report);
    } else if (*bench) {
      const Model model = init_backbone(bench_bb.resolve_spec());
      std::vector<NamedConfig> configs;
      for (const auto& name : bench_configs) {
        if (name == "unreduced") {
          configs.push_back({name, ReductionConfig::unreduced(), std::nullopt});
        } else if (name == "length_adaptive") {
          configs.push_back({name, ReductionConfig{}, std::nullopt});
        } else if (name == "full") {
          if (bench_schedule.empty()) throw ConfigError("config 'full' needs --schedule");
          ReductionConfig c;
          c.multiplier_l = bench_l;
          configs.push_back({name, c, load_schedule(bench_schedule)});
        } else {
          throw ConfigError("unknown bench config '" + name + "'");
        }
      }
      const auto rows = bench_scaling(model, bench_frames, configs, bench_bb.input(), bench_reps);
      std::ofstream file;
      write_bench_csv(*open_csv(bench_csv, file), rows);
    } else if (*ablate_cmd) {
      const auto axis = parse_ablation_axis(abl_axis);
      if (!axis) throw ConfigError("unknown --axis '" + abl_axis + "'");
      const Model model = init_backbone(abl_bb.resolve_spec());
      AblationOptions options;
      options.frames = abl_frames;
      options.repetitions = abl_reps;
      options.input = abl_bb.input();
      if (!abl_schedule.empty()) options.schedule = load_schedule(abl_schedule);
      const auto rows = ablate(model, *axis, abl_values, options);
      std::ofstream file;
      write_ablation_csv(*open_csv(abl_csv, file), rows);
    } else if (*show) {
      const LayerTierSchedule s = load_schedule(show_path);
      std::printf("base_r_kv %zu  threshold %s  multiplier_l %zu\n", s.base_r_kv,
                  format_double(s.threshold).c_str(), s.multiplier_l);
      std::printf("%-6s %-10s %-9s %s\n", "layer", "ratio", "tier", "r_kv");
      for (const auto& e : s.layers) {
        char ratio[32] = "-";
        if (e.ratio) std::snprintf(ratio, sizeof ratio, "%.4f", *e.ratio);
        std::printf("%-6zu %-10s %-9s %zu\n", e.index, ratio, tier_name(s.tier(e)), e.assigned_r_kv);
      }
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
