#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "tokred/attention.h"
#include "tokred/kv_path.h"
#include "tokred/query_path.h"
#include "tokred/token_tensor.h"

namespace tokred {

// Synthetic alternating-attention model description.
//
// Global layers are addressed by their ordinal among global layers (0 for
// the first global layer), which is how schedules and sensitivity reports
// refer to them. `excluded_global_layers` marks layers that are never probed.
struct BackboneSpec {
  std::size_t n_layers = 8;
  std::vector<LayerKind> layer_kinds;
  std::size_t dim = 32;
  FrameLayout layout{};
  std::uint64_t seed = 0;
  double weight_scale = 1.0;  // multiplies the 1/sqrt(d) init scale; 0 gives a no-op model
  std::set<std::size_t> excluded_global_layers;

  // n_layers layers starting with a frame layer, alternating.
  static BackboneSpec alternating(std::size_t n_layers, std::size_t dim = 32,
                                  std::size_t patch_count = 16, std::uint64_t seed = 0);

  void validate() const;
  std::size_t global_layer_count() const;
  // Backbone layer index of every global layer, by ordinal.
  std::vector<std::size_t> global_layer_indices() const;

  friend bool operator==(const BackboneSpec&, const BackboneSpec&) = default;
};

struct Model {
  BackboneSpec spec;
  std::vector<AttentionLayerParams> layers;
};

// Weights ~ N(0, 1) * weight_scale / sqrt(d), drawn from a generator seeded by spec.seed.
Model init_backbone(const BackboneSpec& spec);

// Reducers for one global layer. Frame layers are never reduced.
struct GlobalLayerPlan {
  QueryReducer query;
  KvReducer kv;
};

// Per-global-layer reducers, indexed by global ordinal.
struct ReductionPlan {
  std::vector<GlobalLayerPlan> global_layers;

  static ReductionPlan identity(std::size_t global_layers);
  // Same reducers on every global layer.
  static ReductionPlan uniform(std::size_t global_layers, QueryReducer q, KvReducer kv);
};

struct ForwardTrace {
  std::vector<GlobalAttentionTrace> global_layers;
};

TokenTensor forward(const Model& model, const TokenTensor& x, const ReductionPlan& plan,
                    ForwardTrace* trace = nullptr);

// Reference forward with no reduction hooks at all.
TokenTensor forward_unreduced(const Model& model, const TokenTensor& x);

enum class SequenceMode { Iid, SmoothWalk };

inline constexpr double kDefaultWalkSigma = 0.05;

// iid: independent N(0, 1) tokens. smooth_walk: frame 0 is iid, each later
// frame adds sigma * N(0, 1) to the previous one.
TokenTensor gen_synthetic_sequence(std::size_t frames, const FrameLayout& layout, std::size_t dim,
                                   SequenceMode mode, std::uint64_t seed,
                                   double sigma = kDefaultWalkSigma);

// ||patch(y) - patch(ref)|| / ||patch(ref)|| over patch tokens only.
double patch_divergence(const TokenTensor& y, const TokenTensor& reference,
                        const FrameLayout& layout);

}  // namespace tokred
