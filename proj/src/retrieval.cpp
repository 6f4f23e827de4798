#include "mgal/retrieval.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "json.hpp"
#include "mgal/errors.hpp"

namespace mgal {

Gallery::Gallery(std::vector<GalleryEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].embedding.size() != entries_.front().embedding.size()) {
      throw ValidationError("gallery: entry '" + entries_[i].photo_id + "' has dimension " +
                            std::to_string(entries_[i].embedding.size()) + ", expected " +
                            std::to_string(entries_.front().embedding.size()));
    }
    if (!index_.emplace(entries_[i].photo_id, i).second) {
      throw ValidationError("gallery: duplicate photo id '" + entries_[i].photo_id + "'");
    }
  }
}

std::optional<std::size_t> Gallery::find(const std::string& photo_id) const {
  auto it = index_.find(photo_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Gallery build_gallery(std::span<const FeatureVector> photos, const StageEmbedder& model) {
  if (photos.size() < 2) throw ValidationError("gallery: need at least 2 photos");
  std::vector<GalleryEntry> entries;
  entries.reserve(photos.size());
  for (const auto& p : photos) entries.push_back({p.id, embed_photo(p.v, model)});
  return Gallery(std::move(entries));
}

std::vector<double> gallery_distances(std::span<const double> query, const Gallery& gallery) {
  if (query.size() != gallery.dim()) {
    throw ValidationError("query dimension " + std::to_string(query.size()) +
                          " does not match gallery dimension " + std::to_string(gallery.dim()));
  }
  std::vector<double> d(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    d[i] = euclidean_distance(query, gallery[i].embedding);
  }
  return d;
}

std::vector<Hit> top_hits(std::span<const double> distances, const Gallery& gallery, std::size_t k) {
  k = std::min(k, distances.size());
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
  std::vector<Hit> hits;
  hits.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    hits.push_back({gallery[order[r]].photo_id, distances[order[r]], r + 1});
  }
  return hits;
}

RankResult rank_query(std::span<const double> query, const Gallery& gallery,
                      const std::string& true_id, std::size_t top_k, std::size_t step) {
  const auto target = gallery.find(true_id);
  if (!target) throw NotFoundError("rank_query: photo '" + true_id + "' is not in the gallery");
  RankResult r;
  r.step = step;
  r.distances = gallery_distances(query, gallery);
  const double dt = r.distances[*target];
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < r.distances.size(); ++i) {
    if (r.distances[i] < dt || (r.distances[i] == dt && i < *target)) ++ahead;
  }
  r.rank = ahead + 1;
  r.top_k = top_hits(r.distances, gallery, top_k);
  return r;
}

std::vector<RankResult> eval_episode(std::span<const Vector> steps, const StageEmbedder& model,
                                     const Gallery& gallery, const std::string& true_id,
                                     std::size_t top_k) {
  if (steps.size() != model.total_steps) {
    throw ValidationError("eval_episode: trajectory has " + std::to_string(steps.size()) +
                          " steps, model expects " + std::to_string(model.total_steps));
  }
  std::vector<RankResult> out;
  out.reserve(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) {
    out.push_back(rank_query(embed_sketch(steps[t], t, model), gallery, true_id, top_k, t));
  }
  return out;
}

EvalReport aggregate_metrics(std::span<const std::vector<std::size_t>> ranks, std::size_t n,
                             std::span<const std::size_t> q_list) {
  if (n < 2) throw ValidationError("aggregate_metrics: percentile undefined for n < 2");
  if (ranks.empty()) throw ValidationError("aggregate_metrics: no episodes");
  EvalReport rep;
  rep.n = n;
  rep.episodes = ranks.size();
  rep.total_steps = ranks.front().size();
  const std::size_t T = rep.total_steps;
  if (T == 0) throw ValidationError("aggregate_metrics: empty episode");

  // m@A is formed from an integer sum so it is correctly rounded;
  // m@B sums its terms in (episode, step) order.
  std::uint64_t sum_a = 0;
  double sum_b = 0.0;
  rep.step_mean_reciprocal_rank.assign(T, 0.0);
  for (auto q : q_list) rep.step_acc_at[q].assign(T, 0.0);
  for (const auto& ep : ranks) {
    if (ep.size() != T) throw ValidationError("aggregate_metrics: episodes differ in T");
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t r = ep[t];
      if (r < 1 || r > n) throw ValidationError("aggregate_metrics: rank outside [1, n]");
      sum_a += n - r;
      sum_b += 1.0 / static_cast<double>(r);
      rep.step_mean_reciprocal_rank[t] += 1.0 / static_cast<double>(r);
      for (auto q : q_list) {
        if (r <= q) rep.step_acc_at[q][t] += 1.0;
      }
    }
  }
  const double cells = static_cast<double>(ranks.size() * T);
  const double eps = static_cast<double>(ranks.size());
  rep.m_at_a = 100.0 * static_cast<double>(sum_a) / static_cast<double>((n - 1) * ranks.size() * T);
  rep.m_at_b = 100.0 * sum_b / cells;
  for (auto q : q_list) {
    std::size_t hits = 0;
    for (const auto& ep : ranks) hits += ep.back() <= q ? 1 : 0;
    rep.acc_at[q] = 100.0 * static_cast<double>(hits) / eps;
    for (auto& x : rep.step_acc_at[q]) x = 100.0 * x / eps;
  }
  rep.step_fraction.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    rep.step_fraction[t] = static_cast<double>(t + 1) / static_cast<double>(T);
    rep.step_mean_reciprocal_rank[t] = 100.0 * rep.step_mean_reciprocal_rank[t] / eps;
  }
  rep.ranks.assign(ranks.begin(), ranks.end());
  return rep;
}

EvalReport evaluate(std::span<const FeatureTrajectory> trajectories, const StageEmbedder& model,
                    const Gallery& gallery, std::span<const std::size_t> q_list) {
  std::vector<std::vector<std::size_t>> ranks;
  ranks.reserve(trajectories.size());
  for (const auto& traj : trajectories) {
    std::vector<std::size_t> r;
    for (const auto& res : eval_episode(traj.steps, model, gallery, traj.photo_id, 0)) {
      r.push_back(res.rank);
    }
    ranks.push_back(std::move(r));
  }
  return aggregate_metrics(ranks, gallery.size(), q_list);
}

std::string report_to_string(const EvalReport& report, bool include_ranks) {
  using nlohmann::json;
  json j = {
      {"format", "mgal-eval-1"},
      {"formulas",
       {{"m@A", "100 * mean_{episode,step} (n - rank) / (n - 1)"},
        {"m@B", "100 * mean_{episode,step} 1 / rank"},
        {"A@q", "100 * fraction of episodes with final-step rank <= q"},
        {"tie_rule", "(distance, gallery insertion index)"}}},
      {"n", report.n},
      {"T", report.total_steps},
      {"episodes", report.episodes},
      {"m@A", report.m_at_a},
      {"m@B", report.m_at_b},
  };
  json curves = {{"step_fraction", report.step_fraction},
                 {"mean_reciprocal_rank", report.step_mean_reciprocal_rank}};
  for (const auto& [q, v] : report.acc_at) j["A@" + std::to_string(q)] = v;
  for (const auto& [q, v] : report.step_acc_at) curves["A@" + std::to_string(q)] = v;
  j["curves"] = std::move(curves);
  if (include_ranks) j["ranks"] = report.ranks;
  return j.dump(2) + "\n";
}

}  // namespace mgal
