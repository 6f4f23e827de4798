#pragma once

// Small stroke-based worlds shared by the service, HTTP and acceptance tests.

#include <algorithm>
#include <string>
#include <vector>

#include "mgal/feature_bank.hpp"
#include "mgal/model.hpp"
#include "mgal/rng.hpp"
#include "mgal/sketch_data.hpp"

namespace fixture {

inline mgal::FeaturizerConfig small_extractor() {
  mgal::FeaturizerConfig c;
  c.spec = {4, 4};
  c.width = 64;
  c.height = 64;
  return c;
}

// Random-walk strokes, each with exactly `points` points.
inline mgal::StrokeEpisode random_episode(const std::string& photo_id, std::size_t strokes,
                                          std::size_t points, mgal::Rng& rng) {
  mgal::StrokeEpisode ep;
  ep.photo_id = photo_id;
  for (std::size_t s = 0; s < strokes; ++s) {
    mgal::Stroke st;
    double x = 0.1 + 0.8 * rng.uniform(), y = 0.1 + 0.8 * rng.uniform();
    for (std::size_t p = 0; p < points; ++p) {
      st.push_back({x, y});
      x = std::clamp(x + 0.15 * (rng.uniform() - 0.5), 0.0, 1.0);
      y = std::clamp(y + 0.15 * (rng.uniform() - 0.5), 0.0, 1.0);
    }
    ep.strokes.push_back(std::move(st));
  }
  return ep;
}

struct World {
  std::vector<mgal::StrokeEpisode> episodes;
  std::vector<mgal::FeatureVector> photos;  // features of the finished drawing, jittered
};

inline World make_world(std::size_t n, std::size_t strokes, std::size_t points, std::uint64_t seed) {
  mgal::Rng rng(seed);
  World w;
  const auto cfg = small_extractor();
  for (std::size_t i = 0; i < n; ++i) {
    w.episodes.push_back(random_episode("ph" + std::to_string(i), strokes, points, rng));
    auto f = mgal::featurize(w.episodes.back().strokes, cfg, w.episodes.back().photo_id);
    for (auto& x : f.v) x += 0.05 * rng.normal();
    w.photos.push_back(std::move(f));
  }
  return w;
}

inline mgal::StageEmbedder random_model(std::size_t D, std::size_t T, std::size_t k, std::uint64_t seed) {
  auto m = mgal::init_model(small_extractor().dim(), D, T, seed, small_extractor());
  mgal::Rng rng(seed + 1);
  m.stage_maps.assign(k, m.base_map);
  for (auto& s : m.stage_maps) {
    for (auto& x : s.values()) x += 0.1 * rng.normal();
  }
  m.stroke_budget = static_cast<double>(T);
  return m;
}

}  // namespace fixture
