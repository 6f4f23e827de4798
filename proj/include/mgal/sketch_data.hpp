#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mgal {

/// Canvas point; both coordinates are fractions of the canvas extent.
struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
  auto operator<=>(const Point&) const = default;
};

using Stroke = std::vector<Point>;

/// One drawing of one target photo, strokes in drawing order.
struct StrokeEpisode {
  std::string photo_id;
  std::vector<Stroke> strokes;
  std::optional<std::string> order_tag;

  std::size_t point_count() const;
  bool operator==(const StrokeEpisode&) const = default;
};

/// Cumulative prefix of an episode at one rendering step. The prefix keeps
/// its stroke structure; the last stroke may be cut short.
struct PartialSketch {
  std::size_t step = 0;
  std::size_t total_steps = 0;
  std::vector<Stroke> strokes;

  std::size_t point_count() const;
  std::vector<Point> points() const;
};

struct Segment {
  Point a;
  Point b;
};

/// Binary occupancy grid, row-major, pixel (x, y) at pixels[y * width + x].
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  std::size_t set_count() const;
  bool operator==(const Raster&) const = default;
};

inline constexpr std::size_t kDefaultRasterSize = 256;

// Throws ValidationError naming the stroke/point index on the first violation.
void validate_stroke(const Stroke& stroke, std::size_t stroke_index = 0);
void validate_episode(const StrokeEpisode& episode);

StrokeEpisode episode_from_json(const nlohmann::json& record);
nlohmann::json episode_to_json(const StrokeEpisode& episode);

/// Parses one record of the episode collection format:
/// {"photo_id": str, "order_tag": str?, "strokes": [[[x, y], ...], ...]}
StrokeEpisode parse_episode(std::string_view record);
std::string serialize_episode(const StrokeEpisode& episode);

std::vector<StrokeEpisode> load_episodes(const std::filesystem::path& path);
void save_episodes(std::span<const StrokeEpisode> episodes, const std::filesystem::path& path);

/// Number of points in partial `step` of `total_steps` for an N-point
/// episode: ceil((step + 1) * N / total_steps).
std::size_t prefix_length(std::size_t step, std::size_t total_steps, std::size_t n_points);

std::vector<PartialSketch> render_partials(const StrokeEpisode& episode, std::size_t total_steps);

/// Consecutive point pairs inside each stroke; never spans two strokes.
std::vector<Segment> segments_of(std::span<const Stroke> strokes);

/// Draws every in-stroke segment as a 1-pixel-wide line. A point (x, y) sits
/// at (x * (width - 1), y * (height - 1)) on the pixel lattice; the line visits
/// every integer column (or row, for steep segments) between the rounded
/// endpoints and sets the pixel at the rounded exact-line coordinate.
Raster rasterize(std::span<const Stroke> strokes, std::size_t width = kDefaultRasterSize,
                 std::size_t height = kDefaultRasterSize);

/// Binary PGM (P5), maxval 255, set pixels written as 255.
std::string encode_pgm(const Raster& raster);

/// Seeded stroke-order permutation; points within strokes are untouched.
StrokeEpisode permute_strokes(const StrokeEpisode& episode, std::uint64_t seed);

}  // namespace mgal
