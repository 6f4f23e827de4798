#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mgal/model.hpp"

namespace mgal {

inline constexpr std::string_view kCheckpointFormat = "mgal-ckpt-1";

// {"format": "mgal-ckpt-1", "H", "D", "k", "T", "base_map": [[...]],
//  "stage_maps": [[[...]]], "feature_extractor": {...}, "seed", "stroke_budget"}
// Matrices are row-major nested arrays of shortest round-trip decimals.
std::string checkpoint_to_string(const StageEmbedder& model);
StageEmbedder checkpoint_from_string(std::string_view text);

void save_checkpoint(const StageEmbedder& model, const std::filesystem::path& path);
StageEmbedder load_checkpoint(const std::filesystem::path& path);

}  // namespace mgal
