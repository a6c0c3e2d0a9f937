#include "tokred/backbone.h"

#include <cmath>
#include <random>
#include <string>

#include "tokred/errors.h"

namespace tokred {

BackboneSpec BackboneSpec::alternating(std::size_t n_layers, std::size_t dim,
                                       std::size_t patch_count, std::uint64_t seed) {
  BackboneSpec spec;
  spec.n_layers = n_layers;
  spec.dim = dim;
  spec.layout.patch_count = patch_count;
  spec.seed = seed;
  for (std::size_t i = 0; i < n_layers; ++i) {
    spec.layer_kinds.push_back(i % 2 == 0 ? LayerKind::Frame : LayerKind::Global);
  }
  return spec;
}

void BackboneSpec::validate() const {
  if (layer_kinds.size() != n_layers) {
    throw InvalidInput("backbone spec: " + std::to_string(layer_kinds.size()) +
                       " layer kinds for n_layers = " + std::to_string(n_layers));
  }
  if (dim == 0) throw InvalidInput("backbone spec: dim must be positive");
  if (layout.patch_count == 0) throw InvalidInput("backbone spec: patch_count must be positive");
  if (!std::isfinite(weight_scale)) throw InvalidInput("backbone spec: weight_scale not finite");
  const std::size_t globals = global_layer_count();
  for (std::size_t idx : excluded_global_layers) {
    if (idx >= globals) {
      throw ConfigError("backbone spec: excluded global layer " + std::to_string(idx) +
                        " but the model has " + std::to_string(globals) + " global layers");
    }
  }
}

std::size_t BackboneSpec::global_layer_count() const {
  std::size_t n = 0;
  for (LayerKind k : layer_kinds) n += k == LayerKind::Global ? 1 : 0;
  return n;
}

std::vector<std::size_t> BackboneSpec::global_layer_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layer_kinds.size(); ++i) {
    if (layer_kinds[i] == LayerKind::Global) out.push_back(i);
  }
  return out;
}

Model init_backbone(const BackboneSpec& spec) {
  spec.validate();
  Model model{spec, {}};
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = spec.weight_scale / std::sqrt(static_cast<double>(spec.dim));
  auto draw = [&] {
    Matrix w(spec.dim, spec.dim);
    for (double& v : w.data()) v = normal(rng) * scale;
    return w;
  };
  for (std::size_t i = 0; i < spec.n_layers; ++i) {
    AttentionLayerParams p;
    p.w_q = draw();
    p.w_k = draw();
    p.w_v = draw();
    p.w_o = draw();
    model.layers.push_back(std::move(p));
  }
  return model;
}

ReductionPlan ReductionPlan::identity(std::size_t global_layers) {
  return uniform(global_layers, {}, {});
}

ReductionPlan ReductionPlan::uniform(std::size_t global_layers, QueryReducer q, KvReducer kv) {
  ReductionPlan plan;
  plan.global_layers.assign(global_layers, GlobalLayerPlan{q, kv});
  return plan;
}

namespace {

void check_input(const Model& model, const TokenTensor& x) {
  if (x.dim() != model.spec.dim || x.tokens_per_frame() != model.spec.layout.tokens_per_frame()) {
    throw InvalidInput("forward: input is " + std::to_string(x.frames()) + "x" +
                       std::to_string(x.tokens_per_frame()) + "x" + std::to_string(x.dim()) +
                       ", model expects P=" + std::to_string(model.spec.layout.tokens_per_frame()) +
                       ", d=" + std::to_string(model.spec.dim));
  }
  if (model.layers.size() != model.spec.n_layers) {
    throw InvalidInput("forward: model has " + std::to_string(model.layers.size()) +
                       " layers, spec " + std::to_string(model.spec.n_layers));
  }
}

}  // namespace

TokenTensor forward(const Model& model, const TokenTensor& x, const ReductionPlan& plan,
                    ForwardTrace* trace) {
  check_input(model, x);
  const std::size_t globals = model.spec.global_layer_count();
  if (plan.global_layers.size() != globals) {
    throw ConfigError("forward: plan covers " + std::to_string(plan.global_layers.size()) +
                      " global layers, model has " + std::to_string(globals));
  }
  if (trace != nullptr) trace->global_layers.clear();

  TokenTensor h = x;
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < model.spec.n_layers; ++i) {
    if (model.spec.layer_kinds[i] == LayerKind::Frame) {
      h = frame_attention(h, model.layers[i]);
      continue;
    }
    const auto& lp = plan.global_layers[ordinal++];
    GlobalAttentionTrace layer_trace;
    h = global_attention(h, model.layers[i], model.spec.layout, lp.query, lp.kv,
                         trace != nullptr ? &layer_trace : nullptr);
    if (trace != nullptr) trace->global_layers.push_back(std::move(layer_trace));
  }
  return h;
}

TokenTensor forward_unreduced(const Model& model, const TokenTensor& x) {
  check_input(model, x);
  TokenTensor h = x;
  for (std::size_t i = 0; i < model.spec.n_layers; ++i) {
    h = model.spec.layer_kinds[i] == LayerKind::Frame
            ? frame_attention(h, model.layers[i])
            : global_attention_unreduced(h, model.layers[i]);
  }
  return h;
}

TokenTensor gen_synthetic_sequence(std::size_t frames, const FrameLayout& layout, std::size_t dim,
                                   SequenceMode mode, std::uint64_t seed, double sigma) {
  const std::size_t P = layout.tokens_per_frame();
  TokenTensor out(frames, P, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto data = out.flat().data();
  const std::size_t frame_size = P * dim;
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < frame_size; ++i) {
      const double noise = normal(rng);
      if (mode == SequenceMode::Iid || f == 0) {
        data[f * frame_size + i] = noise;
      } else {
        data[f * frame_size + i] = data[(f - 1) * frame_size + i] + sigma * noise;
      }
    }
  }
  return out;
}

double patch_divergence(const TokenTensor& y, const TokenTensor& reference,
                        const FrameLayout& layout) {
  if (y.flat().rows() != reference.flat().rows() || y.dim() != reference.dim()) {
    throw InvalidInput("patch_divergence: shape mismatch");
  }
  const std::size_t P = layout.tokens_per_frame();
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < y.total_tokens(); ++i) {
    if (layout.is_special(i % P)) continue;
    const auto a = y.flat().row(i);
    const auto b = reference.flat().row(i);
    for (std::size_t j = 0; j < a.size(); ++j) {
      diff += (a[j] - b[j]) * (a[j] - b[j]);
      norm += b[j] * b[j];
    }
  }
  if (norm == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(diff / norm);
}

}  // namespace tokred
