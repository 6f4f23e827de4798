#include "mgal/model.hpp"

#include <cmath>
#include <string>

#include "mgal/errors.hpp"
#include "mgal/rng.hpp"

namespace mgal {

void StageEmbedder::validate() const {
  auto shape_ok = [&](const Matrix& m) {
    return m.rows() == embed_dim && m.cols() == input_dim && m.all_finite();
  };
  if (input_dim == 0 || embed_dim == 0) throw FormatError("model: H and D must be positive");
  if (!shape_ok(base_map)) throw FormatError("model: base_map is not a finite D x H matrix");
  if (stage_maps.empty() || stage_maps.size() > total_steps) {
    throw FormatError("model: need 1 <= k <= T, got k=" + std::to_string(stage_maps.size()) +
                      " T=" + std::to_string(total_steps));
  }
  for (std::size_t i = 0; i < stage_maps.size(); ++i) {
    if (!shape_ok(stage_maps[i])) {
      throw FormatError("model: stage map " + std::to_string(i) +
                        " is not a finite D x H matrix");
    }
  }
}

std::size_t assign_stage(std::size_t step, std::size_t total_steps, std::size_t k) {
  if (k < 1 || k > total_steps) {
    throw ValidationError("assign_stage: need 1 <= k <= T (k=" + std::to_string(k) +
                          ", T=" + std::to_string(total_steps) + ")");
  }
  if (step >= total_steps) {
    throw ValidationError("assign_stage: step " + std::to_string(step) + " outside [0, " +
                          std::to_string(total_steps) + ")");
  }
  return std::min(k - 1, step * k / total_steps);
}

Vector embed_sketch(std::span<const double> feature, std::size_t step, const StageEmbedder& model) {
  return model.stage_maps[assign_stage(step, model.total_steps, model.stages())].apply(feature);
}

Vector embed_photo(std::span<const double> feature, const StageEmbedder& model) {
  return model.base_map.apply(feature);
}

StageEmbedder init_model(std::size_t input_dim, std::size_t embed_dim, std::size_t total_steps,
                         std::uint64_t seed, FeaturizerConfig extractor) {
  if (input_dim == 0 || embed_dim == 0 || total_steps == 0) {
    throw ValidationError("init_model: H, D and T must be positive");
  }
  StageEmbedder m;
  m.input_dim = input_dim;
  m.embed_dim = embed_dim;
  m.total_steps = total_steps;
  m.extractor = extractor;
  m.seed = seed;
  m.stroke_budget = static_cast<double>(total_steps);
  m.base_map = Matrix(embed_dim, input_dim);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (auto& w : m.base_map.values()) w = scale * rng.normal();
  m.stage_maps = {m.base_map};
  return m;
}

}  // namespace mgal
