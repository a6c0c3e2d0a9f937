#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tokred/matrix.h"

namespace tokred {

// Multiply-accumulate tallies recorded by the kernels on the calling thread.
// Used to cross-check the closed-form FLOP counter.
struct MacTally {
  std::uint64_t matmul = 0;
  std::uint64_t score = 0;
  std::uint64_t value = 0;
  std::uint64_t similarity = 0;  // cosine comparisons, not MACs
};

MacTally& thread_mac_tally() noexcept;
void reset_mac_tally() noexcept;

Matrix matmul(const Matrix& a, const Matrix& b);

// Numerically stable softmax over each row.
Matrix row_softmax(const Matrix& a);

double dot(std::span<const double> x, std::span<const double> y) noexcept;
double l2_norm(std::span<const double> x) noexcept;

// Cosine similarity; returns 0 when either vector has zero norm.
double cosine_sim(std::span<const double> x, std::span<const double> y);

// Cosine similarity from precomputed norms, bit-identical to cosine_sim.
inline double cosine_from_norms(double dot_xy, double norm_x, double norm_y) noexcept {
  if (norm_x == 0.0 || norm_y == 0.0) return 0.0;
  return dot_xy / (norm_x * norm_y);
}

// Row gather: out.row(i) = a.row(indices[i]).
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices);

// Row scatter: out.row(indices[i]) = a.row(i); out has `total_rows` rows.
Matrix scatter_rows(const Matrix& a, std::span<const std::size_t> indices, std::size_t total_rows);

Matrix add(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

}  // namespace tokred
