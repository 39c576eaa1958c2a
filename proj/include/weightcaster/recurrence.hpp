#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "weightcaster/numkit.hpp"

namespace weightcaster {

enum class Mode { kDeterministic, kStochastic };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);

inline constexpr double kDefaultSigmaMin = 1e-4;

// Linear weight-space recurrence z_{t+1} = phi z_t.
//
// Deterministic state layout: [theta (D_theta) | augment (a)].
// Stochastic state layout:    [mu (D_theta) | pre-scale s (D_theta) | augment (a)],
// with sigma = softplus(s) + sigma_min.
struct RecurrenceModel {
  Mode mode = Mode::kDeterministic;
  std::size_t theta_dim = 0;
  std::size_t augment_dim = 0;
  Mat phi;
  Vec init_state;
  double sigma_min = kDefaultSigmaMin;

  static std::size_t state_dim_for(Mode mode, std::size_t theta_dim, std::size_t augment_dim);

  // phi = I + N(0, 0.01^2) entrywise, z_1 ~ N(0, 0.1^2).
  static RecurrenceModel initialize(Mode mode, std::size_t theta_dim, std::size_t augment_dim,
                                    Rng& rng, double sigma_min = kDefaultSigmaMin);

  std::size_t state_dim() const { return init_state.size(); }
  // phi plus initial state: S^2 + S.
  std::size_t parameter_count() const { return phi.rows() * phi.cols() + init_state.size(); }

  // [phi row-major | init_state]
  Vec flatten_parameters() const;
  void assign_parameters(std::span<const double> flat);

  // Throws DimensionError when the layout invariants do not hold.
  void validate() const;
};

struct Rollout {
  std::vector<Vec> states;  // states[t - 1] = z_t

  std::size_t horizon() const { return states.size(); }
};

Rollout rollout(const RecurrenceModel& model, std::size_t horizon);

// z_{t+1} from z_t; the single step shared by every rollout path.
Vec advance_state(const RecurrenceModel& model, std::span<const double> state);

struct RecurrenceGradient {
  Mat phi;
  Vec init;

  Vec flatten() const;
};

// Reverse-mode gradients of a loss given dL/dz_t for t = 1..horizon:
// lambda_t = g_t + phi^T lambda_{t+1}, grad_init = lambda_1,
// grad_phi = sum_{t>=2} lambda_t z_{t-1}^T.
RecurrenceGradient rollout_adjoint(const RecurrenceModel& model, const Rollout& states,
                                   std::span<const Vec> state_grads);
RecurrenceGradient rollout_adjoint(const RecurrenceModel& model, std::size_t horizon,
                                   std::span<const Vec> state_grads);

double softplus(double x);
double sigmoid(double x);

struct SplitState {
  Vec mean;    // theta in deterministic mode
  Vec stddev;  // empty in deterministic mode
};

SplitState split_state(const RecurrenceModel& model, std::span<const double> state);

// Reparameterized draw mu + sigma * eps. Stochastic mode only.
Vec sample_weights(const RecurrenceModel& model, std::span<const double> state, Rng& rng);

enum class Stability { kDecaying, kNeutral, kGrowing };

std::string to_string(Stability stability);

struct SpectralEntry {
  std::complex<double> eigenvalue;
  double modulus = 0.0;
  Stability stability = Stability::kNeutral;
};

inline constexpr double kNeutralModulusTolerance = 1e-6;

// Eigenvalues of phi by descending modulus with a stability label.
std::vector<SpectralEntry> spectral_report(const RecurrenceModel& model);

}  // namespace weightcaster
