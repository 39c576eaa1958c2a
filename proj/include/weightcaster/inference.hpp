#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "weightcaster/losses.hpp"
#include "weightcaster/numkit.hpp"
#include "weightcaster/trainer.hpp"

namespace weightcaster {

// Inputs and outputs live in the model's (normalized) coordinates.
struct Prediction {
  std::size_t ring = 1;  // 0 in baseline prediction files
  Vec y_hat;
  std::optional<PredictiveGaussian> distribution;  // stochastic checkpoints only
  bool extrapolated = false;                       // ring > t_train

  friend bool operator==(const Prediction& a, const Prediction& b);
};

Prediction predict_point(const Checkpoint& ckpt, std::span<const double> x);

// Same results as calling predict_point per row, with a single rollout to the
// largest ring needed.
std::vector<Prediction> predict_batch(const Checkpoint& ckpt, const Mat& x);

struct MonteCarloMoments {
  Vec mean;
  Vec variance;  // unbiased, weight uncertainty only (no observation noise)
};

// Samples weights at the ring of x and returns empirical moments of the
// prediction. Stochastic checkpoints only; n_samples >= 2.
MonteCarloMoments predict_mc(const Checkpoint& ckpt, std::span<const double> x,
                             std::size_t n_samples, Rng& rng);

// Columns x..., y_hat..., variance..., ring, extrapolated. The variance
// columns are omitted when no prediction carries a distribution.
void write_predictions_csv(const std::filesystem::path& path, const Mat& x,
                           std::span<const Prediction> predictions);

struct PredictionTable {
  Mat x;
  Mat y_hat;
  Mat variance;  // empty when absent
  std::vector<std::size_t> ring;
  std::vector<bool> extrapolated;
};

PredictionTable read_predictions_csv(const std::filesystem::path& path);

// Stacks the point estimates row by row.
Mat point_estimates(std::span<const Prediction> predictions);

}  // namespace weightcaster
