#include "mgal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mgal/adam.hpp"
#include "mgal/errors.hpp"
#include "mgal/losses.hpp"
#include "mgal/rng.hpp"

namespace mgal {

void TrainConfig::validate() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ValidationError("margin must be >= 0");
  if (!(assoc_weight >= 0.0) || !std::isfinite(assoc_weight)) {
    throw ValidationError("association weight must be >= 0");
  }
  if (batch_size < 2) throw ValidationError("batch_size must be >= 2");
  if (!positive(lr_initial) || !positive(lr_after)) {
    throw ValidationError("learning rates must be > 0");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ValidationError("weight_decay must be >= 0");
  }
  if (!positive(beta1) || beta1 >= 1.0 || !positive(beta2) || beta2 >= 1.0 || !positive(eps)) {
    throw ValidationError("Adam parameters must satisfy 0 < beta < 1, eps > 0");
  }
}

StageGradient batch_gradient(std::span<const TripletSample> batch, const StageEmbedder& model,
                             const TrainConfig& config) {
  if (batch.empty()) throw ValidationError("batch_gradient: empty batch");
  const std::size_t k = model.stages();
  StageGradient out;
  out.grads.assign(k, Matrix(model.embed_dim, model.input_dim));
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (const auto& s : batch) {
    const std::size_t stage = assign_stage(s.step, model.total_steps, k);
    const Vector a = model.stage_maps[stage].apply(s.anchor);
    const TripletTerm trip = triplet_loss(a, s.positive, s.negative, config.margin);
    const AssociationTerm assoc = association_loss(a, s.assoc_target);
    out.loss += inv_b * (trip.loss + config.assoc_weight * assoc.loss);
    Vector g(a.size());
    for (std::size_t c = 0; c < g.size(); ++c) {
      g[c] = trip.grad_anchor[c] + config.assoc_weight * assoc.grad_current[c];
    }
    out.grads[stage].add_outer(g, s.anchor, inv_b);
  }
  if (config.weight_decay > 0.0) {
    for (std::size_t i = 0; i < k; ++i) {
      out.loss += 0.5 * config.weight_decay * model.stage_maps[i].squared_norm();
      auto gv = out.grads[i].values();
      auto w = model.stage_maps[i].values();
      for (std::size_t j = 0; j < gv.size(); ++j) gv[j] += config.weight_decay * w[j];
    }
  }
  return out;
}

BaseGradient base_batch_gradient(std::span<const BaseTriplet> batch, const Matrix& map,
                                 const TrainConfig& config) {
  if (batch.empty()) throw ValidationError("base_batch_gradient: empty batch");
  BaseGradient out{0.0, Matrix(map.rows(), map.cols())};
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    const Vector a = map.apply(s.anchor);
    const Vector p = map.apply(s.positive);
    const Vector n = map.apply(s.negative);
    const TripletTerm trip = triplet_loss(a, p, n, config.margin);
    if (trip.loss == 0.0) continue;
    out.loss += inv_b * trip.loss;
    out.grad.add_outer(trip.grad_anchor, s.anchor, inv_b);
    out.grad.add_outer(trip.grad_positive, s.positive, inv_b);
    out.grad.add_outer(trip.grad_negative, s.negative, inv_b);
  }
  if (config.weight_decay > 0.0) {
    out.loss += 0.5 * config.weight_decay * map.squared_norm();
    auto gv = out.grad.values();
    auto w = map.values();
    for (std::size_t j = 0; j < gv.size(); ++j) gv[j] += config.weight_decay * w[j];
  }
  return out;
}

namespace {

// Training draws from a stream distinct from the one used for initialization.
Rng training_rng(std::uint64_t seed) { return Rng(seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL); }

AdamParams adam_params(const TrainConfig& c, std::size_t epoch) {
  return {c.learning_rate(epoch), c.beta1, c.beta2, c.eps};
}

// Uniform over the photos of other batch members that differ from `own`;
// falls back to uniform over every other photo when the batch has none.
std::size_t pick_negative(std::size_t own, std::span<const std::size_t> batch_photos,
                          std::size_t n_photos, Rng& rng) {
  std::vector<std::size_t> candidates;
  for (auto p : batch_photos) {
    if (p != own && std::find(candidates.begin(), candidates.end(), p) == candidates.end()) {
      candidates.push_back(p);
    }
  }
  if (!candidates.empty()) return candidates[rng.index(candidates.size())];
  const std::size_t r = rng.index(n_photos - 1);
  return r < own ? r : r + 1;
}

std::unordered_map<std::string, std::size_t> photo_index(std::span<const FeatureVector> photos,
                                                         std::size_t dim) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < photos.size(); ++i) {
    if (photos[i].v.size() != dim) {
      throw ValidationError("photo '" + photos[i].id + "' has dimension " +
                            std::to_string(photos[i].v.size()) + ", expected " +
                            std::to_string(dim));
    }
    if (!index.emplace(photos[i].id, i).second) {
      throw ValidationError("duplicate photo id '" + photos[i].id + "'");
    }
  }
  return index;
}

}  // namespace

TrainResult train_base(std::span<const FeatureVector> sketches,
                       std::span<const std::string> pairing,
                       std::span<const FeatureVector> photos, std::size_t embed_dim,
                       std::size_t total_steps, const TrainConfig& config,
                       const FeaturizerConfig& extractor) {
  config.validate();
  if (photos.size() < 2) throw ValidationError("train_base: need at least 2 photos");
  if (sketches.size() != pairing.size()) {
    throw ValidationError("train_base: every sketch needs exactly one paired photo");
  }
  const std::size_t dim = photos.front().v.size();
  const auto index = photo_index(photos, dim);
  std::vector<std::size_t> paired(sketches.size());
  for (std::size_t i = 0; i < sketches.size(); ++i) {
    auto it = index.find(pairing[i]);
    if (it == index.end()) {
      throw NotFoundError("train_base: sketch '" + sketches[i].id + "' pairs with unknown photo '" +
                          pairing[i] + "'");
    }
    if (sketches[i].v.size() != dim) {
      throw ValidationError("train_base: sketch '" + sketches[i].id + "' has dimension " +
                            std::to_string(sketches[i].v.size()) + ", photos have " +
                            std::to_string(dim));
    }
    paired[i] = it->second;
  }

  TrainResult result{init_model(dim, embed_dim, total_steps, config.seed, extractor), {}};
  Matrix& map = result.model.base_map;
  AdamState state(map.size());
  Rng rng = training_rng(config.seed);
  std::vector<std::size_t> order(sketches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs && !order.empty(); ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<std::size_t> batch_photos;
      for (std::size_t b = start; b < end; ++b) batch_photos.push_back(paired[order[b]]);
      std::vector<BaseTriplet> batch;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t s = order[b];
        const std::size_t neg = pick_negative(paired[s], batch_photos, photos.size(), rng);
        batch.push_back({sketches[s].v, photos[paired[s]].v, photos[neg].v});
      }
      const BaseGradient g = base_batch_gradient(batch, map, config);
      epoch_loss += g.loss * static_cast<double>(batch.size());
      adam_step(map.values(), g.grad.values(), state, adam_params(config, epoch));
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  result.model.stage_maps = {map};
  return result;
}

TrainResult train_stages(std::span<const FeatureTrajectory> episodes,
                         std::span<const FeatureVector> photos, const StageEmbedder& base,
                         std::size_t k, const TrainConfig& config) {
  config.validate();
  const std::size_t T = base.total_steps;
  if (k < 1 || k > T) {
    throw ValidationError("train_stages: need 1 <= k <= T (k=" + std::to_string(k) +
                          ", T=" + std::to_string(T) + ")");
  }
  if (photos.size() < 2) throw ValidationError("train_stages: need at least 2 photos");
  const auto index = photo_index(photos, base.input_dim);

  TrainResult result{base, {}};
  StageEmbedder& model = result.model;
  model.stage_maps.assign(k, base.base_map);

  std::vector<Vector> photo_embed;
  photo_embed.reserve(photos.size());
  for (const auto& p : photos) photo_embed.push_back(embed_photo(p.v, model));

  std::vector<std::size_t> episode_photo(episodes.size());
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    auto it = index.find(episodes[e].photo_id);
    if (it == index.end()) {
      throw NotFoundError("train_stages: episode '" + episodes[e].episode_id +
                          "' targets unknown photo '" + episodes[e].photo_id + "'");
    }
    if (episodes[e].steps.size() != T) {
      throw ValidationError("train_stages: episode '" + episodes[e].episode_id + "' has " +
                            std::to_string(episodes[e].steps.size()) + " steps, expected " +
                            std::to_string(T));
    }
    for (const auto& v : episodes[e].steps) {
      if (v.size() != base.input_dim) {
        throw ValidationError("train_stages: episode '" + episodes[e].episode_id +
                              "' feature dimension differs from the model");
      }
    }
    episode_photo[e] = it->second;
  }

  std::vector<std::vector<std::size_t>> stage_steps(k);
  for (std::size_t t = 0; t < T; ++t) stage_steps[assign_stage(t, T, k)].push_back(t);

  struct Anchor {
    std::size_t episode;
    std::size_t step;
  };
  std::vector<Anchor> anchors;
  anchors.reserve(episodes.size() * T);
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    for (std::size_t t = 0; t < T; ++t) anchors.push_back({e, t});
  }

  std::vector<AdamState> states(k, AdamState(base.base_map.size()));
  Rng rng = training_rng(config.seed);

  for (std::size_t epoch = 0; epoch < config.epochs && !anchors.empty(); ++epoch) {
    rng.shuffle(anchors);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < anchors.size(); start += config.batch_size) {
      const std::size_t end = std::min(anchors.size(), start + config.batch_size);
      std::vector<std::size_t> batch_photos;
      for (std::size_t b = start; b < end; ++b) batch_photos.push_back(episode_photo[anchors[b].episode]);
      std::vector<TripletSample> batch;
      batch.reserve(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const auto [e, t] = anchors[b];
        const std::size_t own = episode_photo[e];
        const std::size_t stage = assign_stage(t, T, k);
        const std::size_t neg = pick_negative(own, batch_photos, photos.size(), rng);
        Vector target;
        if (stage + 1 < k) {
          const auto& next = stage_steps[stage + 1];
          const std::size_t tn = next[rng.index(next.size())];
          target = model.stage_maps[stage + 1].apply(episodes[e].steps[tn]);
        } else {
          target = photo_embed[own];
        }
        batch.push_back({episodes[e].steps[t], t, photo_embed[own], photo_embed[neg],
                         std::move(target)});
      }
      const StageGradient g = batch_gradient(batch, model, config);
      epoch_loss += g.loss * static_cast<double>(batch.size());
      const AdamParams hp = adam_params(config, epoch);
      for (std::size_t i = 0; i < k; ++i) {
        adam_step(model.stage_maps[i].values(), g.grads[i].values(), states[i], hp);
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(anchors.size()));
  }
  return result;
}

}  // namespace mgal
