#include "mgal/adam.hpp"

#include <cmath>
#include <string>

#include "mgal/errors.hpp"

namespace mgal {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hp) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ValidationError("adam_step: parameter, gradient and state sizes differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam_step: non-finite gradient at index " + std::to_string(i) +
                         " (step " + std::to_string(state.step + 1) + ")");
    }
  }
  ++state.step;
  const auto s = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hp.beta1, s);
  const double c2 = 1.0 - std::pow(hp.beta2, s);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps);
  }
}

}  // namespace mgal
