#pragma once

#include <cstddef>

#include "tokred/matrix.h"

namespace tokred {

inline constexpr std::size_t kDefaultSpecialCount = 5;  // 1 camera + 4 register tokens

// Per-frame token layout. Special tokens occupy the first `special_count`
// slots of every frame, patch tokens follow.
struct FrameLayout {
  std::size_t patch_count = 16;
  std::size_t special_count = kDefaultSpecialCount;

  std::size_t tokens_per_frame() const noexcept { return patch_count + special_count; }
  bool is_special(std::size_t slot) const noexcept { return slot < special_count; }

  friend bool operator==(const FrameLayout&, const FrameLayout&) = default;
};

// S frames x P tokens x d features, stored as an (S*P) x d matrix in frame-major order.
class TokenTensor {
 public:
  TokenTensor() = default;
  TokenTensor(std::size_t frames, std::size_t tokens_per_frame, std::size_t dim);
  TokenTensor(std::size_t frames, std::size_t tokens_per_frame, Matrix flat);

  std::size_t frames() const noexcept { return frames_; }
  std::size_t tokens_per_frame() const noexcept { return tokens_; }
  std::size_t dim() const noexcept { return flat_.cols(); }
  std::size_t total_tokens() const noexcept { return flat_.rows(); }

  const Matrix& flat() const noexcept { return flat_; }
  Matrix& flat() noexcept { return flat_; }

  // Rows belonging to frame f, as a standalone matrix.
  Matrix frame(std::size_t f) const;

  friend bool operator==(const TokenTensor&, const TokenTensor&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t tokens_ = 0;
  Matrix flat_;
};

}  // namespace tokred
