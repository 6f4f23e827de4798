#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mgal/feature_bank.hpp"
#include "mgal/model.hpp"
#include "mgal/retrieval.hpp"
#include "mgal/sketch_data.hpp"

namespace mgal {

struct ServiceOptions {
  std::size_t max_top_k = 100;
  // Overrides the checkpoint's reference stroke count when set.
  std::optional<double> stroke_budget;
  // Optional directory of real thumbnails named <photo_id>.{png,jpg,jpeg,bmp}.
  std::optional<std::filesystem::path> image_dir;
};

struct StrokeResponse {
  std::size_t step = 0;
  std::size_t stage = 0;
  std::size_t stroke_count = 0;
  std::vector<Hit> top_k;
  std::optional<std::size_t> true_rank;  // practice mode only
};

struct HealthInfo {
  std::string status;
  std::string model_fingerprint;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t total_steps = 0;
};

struct GalleryItem {
  std::string photo_id;
  std::string thumbnail_ref;
};

struct Thumbnail {
  std::string content_type;
  std::string bytes;
};

/// Drawing sessions over a shared, read-only model and gallery.
///
/// Sessions are append-only. Calls on one session are served in the order
/// they arrive (ticket order); calls on different sessions run independently.
class RetrievalService {
 public:
  RetrievalService(StageEmbedder model, std::span<const FeatureVector> photos,
                   std::string model_fingerprint, ServiceOptions options = {});

  std::string create_session(const std::optional<std::string>& target_id = std::nullopt);
  StrokeResponse submit_stroke(const std::string& session_id, const Stroke& stroke,
                               std::size_t k_req);
  void delete_session(const std::string& session_id);

  std::vector<GalleryItem> gallery() const;
  Thumbnail thumbnail(const std::string& photo_id) const;
  HealthInfo health() const;

  /// Step on the training grid for a live drawing with `stroke_count` strokes:
  /// min(T - 1, ceil(T * stroke_count / S_ref) - 1), S_ref the reference budget.
  std::size_t estimate_step(std::size_t stroke_count) const;

  std::size_t session_count() const;
  const StageEmbedder& model() const { return model_; }
  const Gallery& photo_gallery() const { return gallery_; }

 private:
  struct Session {
    std::mutex mu;
    std::condition_variable turn;
    std::uint64_t next_ticket = 0;
    std::uint64_t serving = 0;
    std::vector<Stroke> strokes;
    std::optional<std::string> target_id;
    std::chrono::system_clock::time_point created;
  };

  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::string new_token();

  const StageEmbedder model_;
  const Gallery gallery_;
  const std::string fingerprint_;
  const ServiceOptions options_;
  const double stroke_budget_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex token_mu_;
  std::uint64_t token_state_[2];
};

/// Deterministic 64x64 24-bit BMP derived from the photo id.
std::string placeholder_glyph_bmp(const std::string& photo_id);

}  // namespace mgal
