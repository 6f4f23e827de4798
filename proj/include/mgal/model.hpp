#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mgal/feature_bank.hpp"
#include "mgal/matrix.hpp"

namespace mgal {

/// Base map A (photo branch, frozen after base training) plus one sketch map
/// per stage. All maps are D x H.
struct StageEmbedder {
  std::size_t input_dim = 0;   // H
  std::size_t embed_dim = 0;   // D
  std::size_t total_steps = 0; // T
  Matrix base_map;
  std::vector<Matrix> stage_maps;
  FeaturizerConfig extractor;
  std::uint64_t seed = 0;
  // Reference stroke count used to place live drawings on the step grid.
  double stroke_budget = 0.0;

  std::size_t stages() const { return stage_maps.size(); }

  /// Throws FormatError when shapes or counts disagree or entries are non-finite.
  void validate() const;

  bool operator==(const StageEmbedder&) const = default;
};

/// min(k - 1, floor(t * k / T)).
std::size_t assign_stage(std::size_t step, std::size_t total_steps, std::size_t k);

Vector embed_sketch(std::span<const double> feature, std::size_t step, const StageEmbedder& model);
Vector embed_photo(std::span<const double> feature, const StageEmbedder& model);

/// D x H matrix with N(0, 1/H) entries; k = 1 with the stage map equal to the base.
StageEmbedder init_model(std::size_t input_dim, std::size_t embed_dim, std::size_t total_steps,
                         std::uint64_t seed, FeaturizerConfig extractor = {});

}  // namespace mgal
