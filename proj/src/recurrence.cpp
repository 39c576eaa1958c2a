#include "weightcaster/recurrence.hpp"

#include <cmath>

#include "weightcaster/error.hpp"

namespace weightcaster {

std::string to_string(Mode mode) {
  return mode == Mode::kDeterministic ? "deterministic" : "stochastic";
}

Mode parse_mode(const std::string& name) {
  if (name == "deterministic") return Mode::kDeterministic;
  if (name == "stochastic") return Mode::kStochastic;
  throw ConfigError("unknown mode '" + name + "'");
}

std::size_t RecurrenceModel::state_dim_for(Mode mode, std::size_t theta_dim,
                                           std::size_t augment_dim) {
  return (mode == Mode::kDeterministic ? theta_dim : 2 * theta_dim) + augment_dim;
}

RecurrenceModel RecurrenceModel::initialize(Mode mode, std::size_t theta_dim,
                                            std::size_t augment_dim, Rng& rng,
                                            double sigma_min) {
  RecurrenceModel m;
  m.mode = mode;
  m.theta_dim = theta_dim;
  m.augment_dim = augment_dim;
  m.sigma_min = sigma_min;
  const std::size_t s = state_dim_for(mode, theta_dim, augment_dim);
  m.phi = Mat::identity(s);
  for (auto& v : m.phi.data()) v += 0.01 * rng.normal();
  m.init_state.resize(s);
  for (auto& v : m.init_state) v = 0.1 * rng.normal();
  m.validate();
  return m;
}

void RecurrenceModel::validate() const {
  if (theta_dim == 0) throw DimensionError("RecurrenceModel: theta_dim must be positive");
  const std::size_t s = state_dim_for(mode, theta_dim, augment_dim);
  if (init_state.size() != s) {
    throw DimensionError("RecurrenceModel: initial state has length " +
                         std::to_string(init_state.size()) + ", expected " + std::to_string(s));
  }
  if (phi.rows() != s || phi.cols() != s)
    throw DimensionError("RecurrenceModel: transition matrix must be " + std::to_string(s) +
                         "x" + std::to_string(s));
  if (!(sigma_min > 0.0)) throw DimensionError("RecurrenceModel: sigma_min must be positive");
}

Vec RecurrenceModel::flatten_parameters() const {
  Vec flat = phi.data();
  flat.insert(flat.end(), init_state.begin(), init_state.end());
  return flat;
}

void RecurrenceModel::assign_parameters(std::span<const double> flat) {
  const std::size_t nphi = phi.data().size();
  if (flat.size() != nphi + init_state.size())
    throw DimensionError("RecurrenceModel::assign_parameters: length mismatch");
  std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(nphi), phi.data().begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(nphi), flat.end(), init_state.begin());
}

Vec advance_state(const RecurrenceModel& model, std::span<const double> state) {
  return matvec(model.phi, state);
}

Rollout rollout(const RecurrenceModel& model, std::size_t horizon) {
  if (horizon == 0) throw DimensionError("rollout: horizon must be at least 1");
  Rollout r;
  r.states.reserve(horizon);
  r.states.push_back(model.init_state);
  for (std::size_t t = 1; t < horizon; ++t) r.states.push_back(advance_state(model, r.states.back()));
  return r;
}

Vec RecurrenceGradient::flatten() const {
  Vec flat = phi.data();
  flat.insert(flat.end(), init.begin(), init.end());
  return flat;
}

RecurrenceGradient rollout_adjoint(const RecurrenceModel& model, const Rollout& states,
                                   std::span<const Vec> state_grads) {
  const std::size_t horizon = states.horizon();
  const std::size_t s = model.state_dim();
  if (state_grads.size() != horizon) {
    throw DimensionError("rollout_adjoint: " + std::to_string(state_grads.size()) +
                         " state gradients for horizon " + std::to_string(horizon));
  }
  RecurrenceGradient grad{Mat(s, s), Vec(s, 0.0)};
  Vec lambda(s, 0.0);
  for (std::size_t t = horizon; t-- > 0;) {
    if (state_grads[t].size() != s) throw DimensionError("rollout_adjoint: gradient length");
    // lambda_t = g_t + phi^T lambda_{t+1}
    Vec next = matvec_transposed(model.phi, lambda);
    for (std::size_t i = 0; i < s; ++i) next[i] += state_grads[t][i];
    lambda = std::move(next);
    if (t > 0) {
      const Vec& prev = states.states[t - 1];
      for (std::size_t i = 0; i < s; ++i) {
        const double li = lambda[i];
        auto row = grad.phi.row(i);
        for (std::size_t j = 0; j < s; ++j) row[j] += li * prev[j];
      }
    }
  }
  grad.init = std::move(lambda);
  return grad;
}

RecurrenceGradient rollout_adjoint(const RecurrenceModel& model, std::size_t horizon,
                                   std::span<const Vec> state_grads) {
  return rollout_adjoint(model, rollout(model, horizon), state_grads);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

SplitState split_state(const RecurrenceModel& model, std::span<const double> state) {
  if (state.size() != model.state_dim())
    throw DimensionError("split_state: state length mismatch");
  const std::size_t d = model.theta_dim;
  SplitState out;
  out.mean.assign(state.begin(), state.begin() + static_cast<std::ptrdiff_t>(d));
  if (model.mode == Mode::kStochastic) {
    out.stddev.resize(d);
    for (std::size_t i = 0; i < d; ++i) out.stddev[i] = softplus(state[d + i]) + model.sigma_min;
  }
  return out;
}

Vec sample_weights(const RecurrenceModel& model, std::span<const double> state, Rng& rng) {
  if (model.mode != Mode::kStochastic)
    throw ConfigError("sample_weights: model is deterministic");
  SplitState split = split_state(model, state);
  Vec theta = std::move(split.mean);
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += split.stddev[i] * rng.normal();
  return theta;
}

std::string to_string(Stability stability) {
  switch (stability) {
    case Stability::kDecaying:
      return "decaying";
    case Stability::kNeutral:
      return "neutral";
    case Stability::kGrowing:
      return "growing";
  }
  return "unknown";
}

std::vector<SpectralEntry> spectral_report(const RecurrenceModel& model) {
  std::vector<SpectralEntry> out;
  for (const auto& ev : eigvals_small(model.phi)) {
    SpectralEntry e;
    e.eigenvalue = ev;
    e.modulus = std::abs(ev);
    if (std::abs(e.modulus - 1.0) <= kNeutralModulusTolerance) {
      e.stability = Stability::kNeutral;
    } else {
      e.stability = e.modulus < 1.0 ? Stability::kDecaying : Stability::kGrowing;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace weightcaster
