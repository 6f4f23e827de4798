#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mgal {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected Adam:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr * (m / (1 - b1^s)) / (sqrt(v / (1 - b2^s)) + eps)
// Throws NumericError on a non-finite gradient, before touching any state.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hp);

}  // namespace mgal
