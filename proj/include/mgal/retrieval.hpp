#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mgal/feature_bank.hpp"
#include "mgal/matrix.hpp"
#include "mgal/model.hpp"

namespace mgal {

struct GalleryEntry {
  std::string photo_id;
  Vector embedding;
};

/// Immutable list of photo embeddings, searched by exhaustive Euclidean scan.
class Gallery {
 public:
  Gallery() = default;
  /// Throws ValidationError on duplicate ids or mixed dimensions.
  explicit Gallery(std::vector<GalleryEntry> entries);

  std::size_t size() const { return entries_.size(); }
  std::size_t dim() const { return entries_.empty() ? 0 : entries_.front().embedding.size(); }
  const std::vector<GalleryEntry>& entries() const { return entries_; }
  const GalleryEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::optional<std::size_t> find(const std::string& photo_id) const;

 private:
  std::vector<GalleryEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Embeds every photo once through the frozen base map, preserving order.
Gallery build_gallery(std::span<const FeatureVector> photos, const StageEmbedder& model);

struct Hit {
  std::string photo_id;
  double distance = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct RankResult {
  std::size_t step = 0;
  std::vector<double> distances;  // gallery order
  std::size_t rank = 0;           // 1-based rank of the true photo
  std::vector<Hit> top_k;
};

/// Euclidean distance from `query` to every entry, in gallery order.
std::vector<double> gallery_distances(std::span<const double> query, const Gallery& gallery);

/// The first `k` entries under the (distance, insertion index) order.
std::vector<Hit> top_hits(std::span<const double> distances, const Gallery& gallery, std::size_t k);

/// Entries are ordered by (distance, insertion index); the true photo's rank
/// is its 1-based position in that order.
RankResult rank_query(std::span<const double> query, const Gallery& gallery,
                      const std::string& true_id, std::size_t top_k = 10, std::size_t step = 0);

/// Step t is embedded with the stage map assigned to t.
std::vector<RankResult> eval_episode(std::span<const Vector> steps, const StageEmbedder& model,
                                     const Gallery& gallery, const std::string& true_id,
                                     std::size_t top_k = 10);

struct EvalReport {
  std::size_t n = 0;
  std::size_t total_steps = 0;
  std::size_t episodes = 0;
  double m_at_a = 0.0;
  double m_at_b = 0.0;
  std::map<std::size_t, double> acc_at;  // q -> A@q, complete sketch only
  // Plot data per step: mean 1/rank (x100) and A@q (x100) over episodes.
  std::vector<double> step_fraction;
  std::vector<double> step_mean_reciprocal_rank;
  std::map<std::size_t, std::vector<double>> step_acc_at;
  std::vector<std::vector<std::size_t>> ranks;
};

//   m@A = 100 * mean over (episode, step) of (n - rank) / (n - 1)
//   m@B = 100 * mean over (episode, step) of 1 / rank
//   A@q = 100 * fraction of episodes with final-step rank <= q
EvalReport aggregate_metrics(std::span<const std::vector<std::size_t>> ranks, std::size_t n,
                             std::span<const std::size_t> q_list = std::vector<std::size_t>{5, 10});

/// eval_episode over every trajectory, then aggregate_metrics.
EvalReport evaluate(std::span<const FeatureTrajectory> trajectories, const StageEmbedder& model,
                    const Gallery& gallery,
                    std::span<const std::size_t> q_list = std::vector<std::size_t>{5, 10});

/// Structured report document; `include_ranks` adds the per-episode rank table.
std::string report_to_string(const EvalReport& report, bool include_ranks = true);

}  // namespace mgal
