#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mgal/matrix.hpp"
#include "mgal/sketch_data.hpp"

namespace mgal {

struct FeatureVector {
  std::string id;
  Vector v;
  bool operator==(const FeatureVector&) const = default;
};

/// Feature sequence of one drawing episode, one vector per rendering step.
struct FeatureTrajectory {
  std::string episode_id;
  std::string photo_id;
  std::vector<Vector> steps;
  bool operator==(const FeatureTrajectory&) const = default;
};

struct GridSpec {
  std::size_t grid = 16;
  std::size_t bins = 8;
  std::size_t dim() const { return grid * grid * bins; }
  bool operator==(const GridSpec&) const = default;
};

/// Everything needed to turn strokes into a fixed-width feature.
struct FeaturizerConfig {
  GridSpec spec;
  std::size_t width = kDefaultRasterSize;
  std::size_t height = kDefaultRasterSize;
  std::size_t dim() const { return spec.dim(); }
  bool operator==(const FeaturizerConfig&) const = default;
};

// Grid-orientation histogram. Segment endpoints are placed on the raster's
// pixel lattice (x * (width - 1), y * (height - 1)); each segment adds its
// pixel length to bin (cell of its midpoint, undirected orientation in
// [0, pi) split into `bins`). Layout: ((row * grid) + col) * bins + bin.
FeatureVector extract_grid_features(const Raster& raster, std::span<const Segment> segments,
                                    const GridSpec& spec);

/// rasterize + extract_grid_features over a stroke list.
FeatureVector featurize(std::span<const Stroke> strokes, const FeaturizerConfig& config,
                        std::string id = {});

/// Features of all T partials of an episode.
FeatureTrajectory featurize_episode(const StrokeEpisode& episode, std::size_t total_steps,
                                    const FeaturizerConfig& config, std::string episode_id = {});

// Feature file: newline-delimited {"id": str, "v": [number, ...]}. The first
// record fixes the dimension. Numbers are written in shortest round-trip form,
// so load(save(x)) == x bit for bit.
std::vector<FeatureVector> load_features(const std::filesystem::path& path);
void save_features(std::span<const FeatureVector> features, const std::filesystem::path& path);
std::vector<FeatureVector> parse_features(const std::vector<std::string>& lines);

// Trajectory file: the feature format with two extra fields per record,
// {"id", "episode", "photo_id", "step", "v"}. Records of one episode carry
// steps 0..T-1; all episodes share T.
std::vector<FeatureTrajectory> load_trajectories(const std::filesystem::path& path);
void save_trajectories(std::span<const FeatureTrajectory> trajectories,
                       const std::filesystem::path& path);

struct SyntheticDataset {
  std::vector<FeatureVector> photos;
  std::vector<FeatureTrajectory> trajectories;  // one per photo, same order
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::size_t total_steps = 0;
  std::size_t stage_profile = 0;
  double noise = 0.0;
};

/// Desk-scale stand-in for a sketch/photo feature corpus.
///
/// Photos p ~ N(0, I). Each stage segment s (same partition as the stage
/// assignment with k = stage_profile) owns a random signed permutation Q_s.
/// An episode with start z ~ N(0, I) has per-stage offsets
///
///   o_s = L * u_s,  u_s = unit(0.5 z + 3 Q_s p - p),  L = rms_s |0.5 z + 3 Q_s p - p|
///
/// and step t is x_t = p + (1 - a_t) * (o_s + noise * e_t), a_t = (t + 1) / T.
/// The last step equals the photo; every earlier step carries a
/// stage-specific scrambled copy of the photo that no single linear map can
/// undo for all stages at once.
SyntheticDataset gen_synthetic(std::size_t n_photos, std::size_t dim, std::size_t total_steps,
                               std::size_t stage_profile, double noise, std::uint64_t seed);

}  // namespace mgal
