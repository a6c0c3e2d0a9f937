#include "tokred/attention.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tokred/errors.h"
#include "tokred/kernels.h"

namespace tokred {

std::string_view to_string(LayerKind kind) noexcept {
  return kind == LayerKind::Frame ? "frame" : "global";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) noexcept {
  if (name == "frame") return LayerKind::Frame;
  if (name == "global") return LayerKind::Global;
  return std::nullopt;
}

AttentionLayerParams AttentionLayerParams::zeros(std::size_t dim) {
  return {Matrix(dim, dim), Matrix(dim, dim), Matrix(dim, dim), Matrix(dim, dim)};
}

void AttentionLayerParams::validate() const {
  const std::size_t d = w_q.rows();
  for (const Matrix* w : {&w_q, &w_k, &w_v, &w_o}) {
    if (w->rows() != d || w->cols() != d) {
      throw InvalidInput("attention params: projections must all be " + std::to_string(d) + "x" +
                         std::to_string(d));
    }
  }
}

Matrix sdpa(const Matrix& q, const Matrix& k, const Matrix& v) {
  const std::size_t d = q.cols();
  if (k.cols() != d || v.cols() != d || k.rows() != v.rows()) {
    throw InvalidInput("sdpa: q " + std::to_string(q.rows()) + "x" + std::to_string(q.cols()) +
                       ", k " + std::to_string(k.rows()) + "x" + std::to_string(k.cols()) +
                       ", v " + std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
  }
  const std::size_t nkv = k.rows();
  if (nkv == 0) throw InvalidInput("sdpa: empty key/value set");

  const Matrix kt = transpose(k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix out(q.rows(), d);
  std::vector<double> scores(nkv);

  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::fill(scores.begin(), scores.end(), 0.0);
    const double* qi = q.row(i).data();
    for (std::size_t t = 0; t < d; ++t) {
      const double qt = qi[t];
      const double* kr = kt.row(t).data();
      for (std::size_t j = 0; j < nkv; ++j) scores[j] += qt * kr[j];
    }
    double mx = -INFINITY;
    for (double& s : scores) {
      s *= scale;
      mx = std::max(mx, s);
    }
    double sum = 0.0;
    for (double& s : scores) {
      s = std::exp(s - mx);
      sum += s;
    }
    const double inv = 1.0 / sum;
    double* o = out.row(i).data();
    for (std::size_t j = 0; j < nkv; ++j) {
      const double p = scores[j] * inv;
      const double* vj = v.row(j).data();
      for (std::size_t t = 0; t < d; ++t) o[t] += p * vj[t];
    }
  }
  auto& tally = thread_mac_tally();
  tally.score += static_cast<std::uint64_t>(q.rows()) * nkv * d;
  tally.value += static_cast<std::uint64_t>(q.rows()) * nkv * d;
  return out;
}

namespace {

void check_params(const TokenTensor& x, const AttentionLayerParams& params) {
  params.validate();
  if (params.dim() != x.dim()) {
    throw InvalidInput("attention: params are " + std::to_string(params.dim()) +
                       "-dimensional, tokens " + std::to_string(x.dim()));
  }
}

}  // namespace

TokenTensor frame_attention(const TokenTensor& x, const AttentionLayerParams& params) {
  check_params(x, params);
  const std::size_t P = x.tokens_per_frame();
  const Matrix q = matmul(x.flat(), params.w_q);
  const Matrix k = matmul(x.flat(), params.w_k);
  const Matrix v = matmul(x.flat(), params.w_v);

  Matrix attended(x.total_tokens(), x.dim());
  std::vector<std::size_t> rows(P);
  for (std::size_t f = 0; f < x.frames(); ++f) {
    for (std::size_t t = 0; t < P; ++t) rows[t] = f * P + t;
    const Matrix a = sdpa(gather_rows(q, rows), gather_rows(k, rows), gather_rows(v, rows));
    std::copy_n(a.data().data(), a.data().size(), attended.row(f * P).data());
  }
  return {x.frames(), P, add(x.flat(), matmul(attended, params.w_o))};
}

TokenTensor global_attention(const TokenTensor& x, const AttentionLayerParams& params,
                             const FrameLayout& layout, const QueryReducer& qpath,
                             const KvReducer& kvpath, GlobalAttentionTrace* trace) {
  check_params(x, params);
  if (layout.tokens_per_frame() != x.tokens_per_frame()) {
    throw InvalidInput("global_attention: layout has " + std::to_string(layout.tokens_per_frame()) +
                       " tokens per frame, input " + std::to_string(x.tokens_per_frame()));
  }
  const auto queries = reduce_queries(x.flat(), x.frames(), layout, qpath);
  const auto kv = reduce_kv(x.flat(), x.frames(), x.tokens_per_frame(), kvpath);

  const Matrix q = matmul(queries.tokens, params.w_q);
  const Matrix k = matmul(kv.tokens, params.w_k);
  const Matrix v = matmul(kv.tokens, params.w_v);
  const Matrix projected = matmul(sdpa(q, k, v), params.w_o);
  Matrix restored = queries.map.is_identity() ? projected : unmerge(projected, queries.map);

  if (trace != nullptr) {
    trace->query_rows = queries.tokens.rows();
    trace->kv_rows = kv.tokens.rows();
    trace->query_stats = queries.stats;
    trace->kv_stats = kv.stats;
    trace->kept_frames = kv.kept_frames;
  }
  return {x.frames(), x.tokens_per_frame(), add(x.flat(), restored)};
}

TokenTensor global_attention_unreduced(const TokenTensor& x, const AttentionLayerParams& params) {
  check_params(x, params);
  const Matrix q = matmul(x.flat(), params.w_q);
  const Matrix k = matmul(x.flat(), params.w_k);
  const Matrix v = matmul(x.flat(), params.w_v);
  return {x.frames(), x.tokens_per_frame(), add(x.flat(), matmul(sdpa(q, k, v), params.w_o))};
}

}  // namespace tokred
