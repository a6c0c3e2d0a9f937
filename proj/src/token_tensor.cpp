#include "tokred/token_tensor.h"

#include <algorithm>
#include <string>

#include "tokred/errors.h"

namespace tokred {

TokenTensor::TokenTensor(std::size_t frames, std::size_t tokens_per_frame, std::size_t dim)
    : frames_(frames), tokens_(tokens_per_frame), flat_(frames * tokens_per_frame, dim) {}

TokenTensor::TokenTensor(std::size_t frames, std::size_t tokens_per_frame, Matrix flat)
    : frames_(frames), tokens_(tokens_per_frame), flat_(std::move(flat)) {
  if (flat_.rows() != frames_ * tokens_) {
    throw InvalidInput("token tensor: " + std::to_string(flat_.rows()) + " rows for " +
                       std::to_string(frames_) + " frames of " + std::to_string(tokens_));
  }
}

Matrix TokenTensor::frame(std::size_t f) const {
  if (f >= frames_) throw InvalidInput("token tensor: frame index out of range");
  Matrix out(tokens_, dim());
  std::copy_n(flat_.row(f * tokens_).data(), tokens_ * dim(), out.data().data());
  return out;
}

}  // namespace tokred
