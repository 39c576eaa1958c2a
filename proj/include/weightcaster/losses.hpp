#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "weightcaster/numkit.hpp"
#include "weightcaster/predictor.hpp"
#include "weightcaster/recurrence.hpp"

namespace weightcaster {

struct LossReport {
  double total = 0.0;
  double data_term = 0.0;
  double kl_term = 0.0;
  std::vector<std::pair<std::size_t, double>> per_ring_data;  // (ring, data loss)

  friend bool operator==(const LossReport&, const LossReport&) = default;
};

struct PredictiveGaussian {
  Vec mean;
  Mat covariance;
  double noise_floor = 0.0;
};

// Points drawn from one ring. `ring` is 1-based; rows of inputs/targets pair up.
struct RingBatch {
  std::size_t ring = 1;
  Mat inputs;
  Mat targets;
};

struct Objective {
  Mode mode = Mode::kDeterministic;
  double beta = 0.0;
  double sigma_noise = 0.0;
};

double mse(std::span<const double> pred, std::span<const double> target);

// Sum over batches of the batch-mean MSE of f_theta_t. Stochastic models
// are evaluated at their mean weights.
LossReport deterministic_loss(const RecurrenceModel& model, const Rollout& states,
                              std::span<const RingBatch> batches,
                              const LinearPredictor& predictor);

// Mean-weight data term plus beta times the batch-mean KL of the linearized
// predictive Gaussian to N(0, I), both summed over rings.
LossReport stochastic_loss(const RecurrenceModel& model, const Rollout& states,
                           std::span<const RingBatch> batches, const LinearPredictor& predictor,
                           double beta, double sigma_noise);

// mu_y = f_mu(x), Sigma_y = J diag(sigma^2) J^T + sigma_noise^2 I.
PredictiveGaussian predictive_distribution(const RecurrenceModel& model,
                                           std::span<const double> state,
                                           std::span<const double> x,
                                           const LinearPredictor& predictor, double sigma_noise);

// KL(N(mean, cov) || N(0, I)) in closed form.
double kl_to_standard_normal(const PredictiveGaussian& g);

struct LossGradients {
  LossReport report;
  std::vector<Vec> state_grads;  // dL/dz_t for t = 1..horizon
};

// Loss and its exact gradient with respect to every rollout state. Batches
// are processed in parallel when threads > 1; the reduction order is fixed.
LossGradients loss_state_gradients(const RecurrenceModel& model, const Rollout& states,
                                   std::span<const RingBatch> batches,
                                   const LinearPredictor& predictor, const Objective& objective,
                                   std::size_t threads = 1);

}  // namespace weightcaster
