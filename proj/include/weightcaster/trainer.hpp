#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "weightcaster/datasets.hpp"
#include "weightcaster/error.hpp"
#include "weightcaster/losses.hpp"
#include "weightcaster/optimizer.hpp"
#include "weightcaster/partition.hpp"
#include "weightcaster/predictor.hpp"
#include "weightcaster/recurrence.hpp"

namespace weightcaster {

struct TrainConfig {
  Mode mode = Mode::kStochastic;
  std::size_t t_total = 600;
  // Outermost training ring. 0 means "take `delta` as given and let the
  // outermost non-empty ring emerge from the data".
  std::size_t t_train = 300;
  double delta = 0.0;
  AnchorPolicy anchor = AnchorPolicy::mean();
  DistanceMetric metric = DistanceMetric::kEuclidean;
  std::size_t batch_size = 32;
  double beta = 1e-2;
  double sigma_noise = 0.005;
  std::size_t augment = 2;
  double sigma_min = kDefaultSigmaMin;
  double learning_rate = 1e-3;
  double grad_clip = 0.0;
  std::size_t max_iters = 20000;
  std::size_t eval_every = 50;
  std::size_t convergence_window = 10;
  double convergence_tol = 1e-8;
  std::uint64_t seed = 0;
  // Execution only; never changes results and is not serialized.
  std::size_t threads = 1;

  std::vector<std::string> validation_errors() const;
  // Throws ConfigError listing every problem.
  void validate() const;

  Objective objective() const { return {mode, beta, sigma_noise}; }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Rejects unknown keys; missing keys keep their defaults.
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
// Applies the keys present in `j` on top of `config`.
void merge_train_config(TrainConfig& config, const nlohmann::json& j);
bool is_train_config_key(const std::string& key);

struct Checkpoint {
  static constexpr int kVersion = 1;

  int version = kVersion;
  RecurrenceModel model;
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  RingPartition partition;  // assignments are not persisted
  Normalization x_norm;
  Normalization y_norm;
  TrainConfig config;
  LossReport final_loss;
  std::size_t best_iteration = 0;

  LinearPredictor predictor() const { return {input_dim, output_dim}; }
};

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainLogRow {
  std::size_t iter = 0;
  double total = 0.0;
  double data = 0.0;
  double kl = 0.0;
  double wallclock_ms = 0.0;
};

void write_training_log(const std::filesystem::path& path, std::span<const TrainLogRow> log);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainLogRow> log;
  std::size_t iterations_run = 0;
  bool converged = false;
};

// Non-finite loss during training; carries the best checkpoint seen so far.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, Checkpoint last_good)
      : NumericalError(what), last_good_(std::move(last_good)) {}

  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

// One batch per non-empty ring up to `max_ring`, holding every point of that
// ring in dataset order.
std::vector<RingBatch> full_ring_batches(const LabeledDataset& data,
                                         const std::vector<std::vector<std::size_t>>& rings,
                                         std::size_t max_ring);

// Up to `batch_size` points per ring drawn without replacement. Rings no
// larger than the batch are taken whole and consume no random draws; others
// draw from the stream (seed, ring, iteration).
std::vector<RingBatch> subsample_ring_batches(const LabeledDataset& data,
                                              const std::vector<std::vector<std::size_t>>& rings,
                                              std::size_t max_ring, std::size_t batch_size,
                                              const Rng& sampling_root, std::size_t iteration);

TrainResult train(const LabeledDataset& data, const TrainConfig& config);

// Full-data loss of a checkpoint; deterministic and RNG-free.
LossReport evaluate_full(const Checkpoint& ckpt, const LabeledDataset& data);

}  // namespace weightcaster
