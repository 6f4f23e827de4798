#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgal/feature_bank.hpp"
#include "mgal/matrix.hpp"
#include "mgal/model.hpp"

namespace mgal {

struct TrainConfig {
  double margin = 0.3;
  double assoc_weight = 1.0;  // association : triplet
  std::size_t epochs = 500;
  std::size_t batch_size = 16;
  double lr_initial = 1e-3;
  double lr_after = 1e-4;
  std::size_t lr_drop_epoch = 100;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
  double learning_rate(std::size_t epoch) const {
    return epoch < lr_drop_epoch ? lr_initial : lr_after;
  }
};

/// One anchor partial sketch with its frozen-branch targets (all D-dim
/// except the anchor, which is the raw H-dim feature).
struct TripletSample {
  std::span<const double> anchor;
  std::size_t step = 0;
  Vector positive;
  Vector negative;
  Vector assoc_target;
};

struct StageGradient {
  double loss = 0.0;
  std::vector<Matrix> grads;  // one per stage map
};

// Loss = mean_b [triplet + assoc_weight * mse] + weight_decay/2 * sum_i ||A_i||_F^2.
// Each sample contributes only to the stage map its step is assigned to;
// a stage absent from the batch gets only the decay term.
StageGradient batch_gradient(std::span<const TripletSample> batch, const StageEmbedder& model,
                             const TrainConfig& config);

/// Complete sketch, paired photo and negative photo, all raw H-dim features.
struct BaseTriplet {
  std::span<const double> anchor;
  std::span<const double> positive;
  std::span<const double> negative;
};

struct BaseGradient {
  double loss = 0.0;
  Matrix grad;
};

/// Triplet loss with one shared map on all three branches, plus L2 decay.
BaseGradient base_batch_gradient(std::span<const BaseTriplet> batch, const Matrix& map,
                                 const TrainConfig& config);

struct TrainResult {
  StageEmbedder model;
  std::vector<double> epoch_losses;
};

/// Trains the base map on complete sketches. `pairing[i]` is the photo id of
/// `sketches[i]`.
TrainResult train_base(std::span<const FeatureVector> sketches,
                       std::span<const std::string> pairing,
                       std::span<const FeatureVector> photos, std::size_t embed_dim,
                       std::size_t total_steps, const TrainConfig& config,
                       const FeaturizerConfig& extractor = {});

/// Trains k stage maps warm-started from base.base_map; the photo branch stays frozen.
TrainResult train_stages(std::span<const FeatureTrajectory> episodes,
                         std::span<const FeatureVector> photos, const StageEmbedder& base,
                         std::size_t k, const TrainConfig& config);

}  // namespace mgal
