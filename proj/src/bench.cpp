#include "tokred/bench.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include "tokred/document.h"
#include "tokred/errors.h"

namespace tokred {

namespace {

std::string seconds_str(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", s);
  return buf;
}

std::size_t parse_factor(std::string_view value, std::string_view axis) {
  std::size_t out = 0;
  bool ok = !value.empty();
  for (char c : value) {
    if (c < '0' || c > '9') ok = false;
    out = out * 10 + static_cast<std::size_t>(c - '0');
  }
  if (!ok || out < 1) {
    throw ConfigError("ablate: value '" + std::string(value) + "' for axis " + std::string(axis) +
                      " must be a positive integer");
  }
  return out;
}

}  // namespace

double median_seconds(std::size_t repetitions, const std::function<void()>& fn) {
  using Clock = std::chrono::steady_clock;
  std::vector<double> times;
  for (std::size_t i = 0; i < std::max<std::size_t>(1, repetitions); ++i) {
    const auto t0 = Clock::now();
    fn();
    times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

TokenTensor make_input(const BackboneSpec& spec, std::size_t frames, const InputOptions& input) {
  return gen_synthetic_sequence(frames, spec.layout, spec.dim, input.mode, input.seed, input.sigma);
}

RunReport run_comparison(const Model& model, const TokenTensor& x, const ReductionConfig& config,
                         const LayerTierSchedule* schedule, std::size_t repetitions) {
  RunReport r;
  r.frames = x.frames();
  r.r_q = resolve_rq(config, r.frames);
  r.r_kv = resolve_rkv(config, r.frames);
  r.plan = make_plan(model.spec, r.frames, config, schedule);
  r.flops = count_flops(model.spec, r.frames, r.plan);
  r.unreduced_flops = count_flops_unreduced(model.spec, r.frames);

  TokenTensor reference;
  r.unreduced_seconds = median_seconds(repetitions, [&] { reference = forward_unreduced(model, x); });
  TokenTensor reduced;
  ForwardTrace trace;
  r.reduced_seconds = median_seconds(repetitions, [&] { reduced = forward(model, x, r.plan, &trace); });
  r.divergence = patch_divergence(reduced, reference, model.spec.layout);
  for (const auto& t : trace.global_layers) r.query_stats.absorb(t.query_stats);
  return r;
}

void print_run_report(std::ostream& os, const RunReport& r) {
  os << "frames            " << r.frames << '\n';
  os << "r_q / r_kv        " << r.r_q << " / " << r.r_kv << '\n';
  os << "per-layer r_kv   ";
  for (const auto& l : r.plan.global_layers) os << ' ' << l.kv.r_kv;
  os << '\n';
  os << "flops             " << r.flops.total << " (unreduced " << r.unreduced_flops.total << ", "
     << format_double(r.flops.speedup_vs_unreduced) << "x)\n";
  os << "match comparisons " << r.flops.match_comparisons << '\n';
  os << "time              " << seconds_str(r.reduced_seconds) << " s (unreduced "
     << seconds_str(r.unreduced_seconds) << " s)\n";
  os << "divergence        " << format_double(r.divergence) << " (relative L2, patch tokens)\n";
}

void write_run_csv(std::ostream& os, const RunReport& r) {
  os << "S,config,r_q,r_kv,time_s,unreduced_time_s,flops,unreduced_flops,flop_speedup,divergence\n";
  os << r.frames << ",run," << r.r_q << ',' << r.r_kv << ',' << seconds_str(r.reduced_seconds)
     << ',' << seconds_str(r.unreduced_seconds) << ',' << r.flops.total << ','
     << r.unreduced_flops.total << ',' << format_double(r.flops.speedup_vs_unreduced) << ','
     << format_double(r.divergence) << '\n';
}

std::vector<BenchRow> bench_scaling(const Model& model, std::span<const std::size_t> frame_counts,
                                    std::span<const NamedConfig> configs,
                                    const InputOptions& input, std::size_t repetitions) {
  std::vector<BenchRow> rows;
  for (std::size_t S : frame_counts) {
    const TokenTensor x = make_input(model.spec, S, input);
    TokenTensor reference;
    const double base_time =
        median_seconds(repetitions, [&] { reference = forward_unreduced(model, x); });
    const std::uint64_t base_flops = count_flops_unreduced(model.spec, S).total;
    for (const auto& nc : configs) {
      if (nc.name == "unreduced") {
        rows.push_back({S, nc.name, base_time, base_flops, 0.0});
        continue;
      }
      const auto plan = make_plan(model.spec, S, nc.config, nc.schedule ? &*nc.schedule : nullptr);
      TokenTensor y;
      const double t = median_seconds(repetitions, [&] { y = forward(model, x, plan); });
      rows.push_back({S, nc.name, t, count_flops(model.spec, S, plan).total,
                      patch_divergence(y, reference, model.spec.layout)});
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows) {
  os << "S,config,time_s,flops,divergence\n";
  for (const auto& r : rows) {
    os << r.frames << ',' << r.config << ',' << seconds_str(r.time_s) << ',' << r.flops << ','
       << format_double(r.divergence) << '\n';
  }
}

std::string_view to_string(AblationAxis axis) noexcept {
  switch (axis) {
    case AblationAxis::Rq: return "rq";
    case AblationAxis::Rkv: return "rkv";
    case AblationAxis::L: return "l";
    case AblationAxis::G: return "G";
    case AblationAxis::KvMode: return "kv_mode";
  }
  return "unknown";
}

std::optional<AblationAxis> parse_ablation_axis(std::string_view name) noexcept {
  for (auto a : {AblationAxis::Rq, AblationAxis::Rkv, AblationAxis::L, AblationAxis::G,
                 AblationAxis::KvMode}) {
    if (name == to_string(a)) return a;
  }
  return std::nullopt;
}

ReductionConfig ablation_config(AblationAxis axis, std::string_view value, std::size_t frames) {
  ReductionConfig c;
  c.use_length_adaptive = false;
  c.multiplier_l = 1;
  switch (axis) {
    case AblationAxis::Rq:
      c.r_q_override = parse_factor(value, "rq");
      c.r_kv_override = 1;
      break;
    case AblationAxis::Rkv:
      c.r_q_override = 1;
      c.r_kv_override = parse_factor(value, "rkv");
      break;
    case AblationAxis::L:
      c.r_q_override = 1;
      c.r_kv_override = 8;
      c.multiplier_l = parse_factor(value, "l");
      break;
    case AblationAxis::G:
      c.r_q_override = std::max<std::size_t>(2, length_adaptive_rq(frames));
      c.r_kv_override = length_adaptive_rkv(frames);
      c.group_size = parse_factor(value, "G");
      break;
    case AblationAxis::KvMode: {
      const auto mode = parse_kv_mode(value);
      if (!mode) throw ConfigError("ablate: unknown kv_mode '" + std::string(value) + "'");
      c.r_q_override = 1;
      c.r_kv_override = std::max<std::size_t>(2, length_adaptive_rkv(frames));
      c.kv_mode = *mode;
      break;
    }
  }
  return c;
}

std::vector<AblationRow> ablate(const Model& model, AblationAxis axis,
                                std::span<const std::string> values,
                                const AblationOptions& options) {
  if (axis == AblationAxis::L && !options.schedule) {
    throw ConfigError("ablate: the l axis needs a layer schedule");
  }
  const std::size_t S = options.frames;
  const TokenTensor x = make_input(model.spec, S, options.input);
  const TokenTensor reference = forward_unreduced(model, x);
  const LayerTierSchedule* schedule = axis == AblationAxis::L ? &*options.schedule : nullptr;

  std::vector<AblationRow> rows;
  for (const auto& value : values) {
    const ReductionConfig c = ablation_config(axis, value, S);
    const auto plan = make_plan(model.spec, S, c, schedule);
    TokenTensor y;
    AblationRow row{std::string(to_string(axis)), value};
    row.time_s = median_seconds(options.repetitions, [&] { y = forward(model, x, plan); });
    if (axis == AblationAxis::G) {
      const QueryReducer q{*c.r_q_override, c.group_size};
      row.match_time_s = median_seconds(options.repetitions,
                                        [&] { (void)reduce_queries(x.flat(), S, model.spec.layout, q); });
    }
    row.flops = count_flops(model.spec, S, plan).total;
    row.divergence = patch_divergence(y, reference, model.spec.layout);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(std::ostream& os, std::span<const AblationRow> rows) {
  os << "axis,value,time_s,match_time_s,flops,divergence\n";
  for (const auto& r : rows) {
    os << r.axis << ',' << r.value << ',' << seconds_str(r.time_s) << ','
       << seconds_str(r.match_time_s) << ',' << r.flops << ',' << format_double(r.divergence)
       << '\n';
  }
}

void write_sensitivity_csv(std::ostream& os, const SensitivityReport& report) {
  os << "layer,ratio\n";
  for (const auto& l : report.layers) os << l.index << ',' << format_double(l.degradation_ratio) << '\n';
}

}  // namespace tokred
