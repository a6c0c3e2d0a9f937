#pragma once

#include <cstddef>
#include <string_view>
#include <optional>

#include "tokred/kv_path.h"
#include "tokred/matrix.h"
#include "tokred/query_path.h"
#include "tokred/token_tensor.h"

namespace tokred {

enum class LayerKind { Frame, Global };

std::string_view to_string(LayerKind kind) noexcept;
std::optional<LayerKind> parse_layer_kind(std::string_view name) noexcept;

// Single-head projections, all d x d.
struct AttentionLayerParams {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  Matrix w_o;

  static AttentionLayerParams zeros(std::size_t dim);

  std::size_t dim() const noexcept { return w_q.rows(); }
  void validate() const;
};

// softmax(q kᵀ / sqrt(d)) v. One output row per query row.
Matrix sdpa(const Matrix& q, const Matrix& k, const Matrix& v);

// Attention within each frame's P tokens, output projection, residual.
TokenTensor frame_attention(const TokenTensor& x, const AttentionLayerParams& params);

// What the reducers did inside one global attention call.
struct GlobalAttentionTrace {
  std::size_t query_rows = 0;
  std::size_t kv_rows = 0;
  MatchStats query_stats;
  MatchStats kv_stats;
  std::vector<std::size_t> kept_frames;
};

// Attention over all S*P tokens. Queries are merged per `qpath` before the
// query projection and restored by unmerging after the output projection;
// keys/values are reduced per `kvpath` before their projections.
TokenTensor global_attention(const TokenTensor& x, const AttentionLayerParams& params,
                             const FrameLayout& layout, const QueryReducer& qpath,
                             const KvReducer& kvpath, GlobalAttentionTrace* trace = nullptr);

// Plain O(N^2) global attention with no reduction hooks.
TokenTensor global_attention_unreduced(const TokenTensor& x, const AttentionLayerParams& params);

}  // namespace tokred
