#include "weightcaster/losses.hpp"

#include <cmath>
#include <string>

#include "parallel.hpp"
#include "weightcaster/error.hpp"

namespace weightcaster {

double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty())
    throw DimensionError("mse: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - target[i]) * (pred[i] - target[i]);
  return acc / static_cast<double>(pred.size());
}

namespace {

Mat predictive_covariance(const Mat& jac, std::span<const double> stddev, double sigma_noise) {
  const std::size_t dy = jac.rows();
  Mat cov(dy, dy);
  for (std::size_t r = 0; r < dy; ++r) {
    for (std::size_t c = 0; c <= r; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < stddev.size(); ++k)
        acc += jac(r, k) * stddev[k] * stddev[k] * jac(c, k);
      cov(r, c) = acc;
      cov(c, r) = acc;
    }
    cov(r, r) += sigma_noise * sigma_noise;
  }
  return cov;
}

double kl_from_parts(std::span<const double> mean, const Mat& cov, const Mat& chol) {
  double trace = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) trace += cov(i, i);
  const double kl = 0.5 * (trace + dot(mean, mean) - static_cast<double>(mean.size()) -
                           log_det_from_cholesky(chol));
  // Rounding can leave a tiny negative value at the exact optimum.
  return std::max(kl, 0.0);
}

struct BatchTerms {
  double data = 0.0;
  double kl = 0.0;
  Vec grad;  // dL/dz for this batch's ring, empty if gradients are not requested
};

BatchTerms evaluate_batch(const RecurrenceModel& model, std::span<const double> state,
                          const RingBatch& batch, const LinearPredictor& predictor,
                          const Objective& objective, bool want_grad) {
  BatchTerms out;
  const std::size_t n = batch.inputs.rows();
  if (batch.targets.rows() != n)
    throw DimensionError("ring batch: inputs and targets have different row counts");
  if (want_grad) out.grad.assign(model.state_dim(), 0.0);
  if (n == 0) return out;

  const bool stochastic = objective.mode == Mode::kStochastic;
  if (stochastic && model.mode != Mode::kStochastic)
    throw ConfigError("stochastic objective requires a stochastic recurrence");

  const SplitState split = split_state(model, state);
  const std::size_t d = model.theta_dim;
  const std::size_t dy = predictor.output_dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double beta = objective.beta;

  for (std::size_t i = 0; i < n; ++i) {
    const auto x = batch.inputs.row(i);
    const auto y = batch.targets.row(i);
    if (y.size() != dy) throw DimensionError("ring batch: target dimension mismatch");
    const Vec mean = predictor.predict(split.mean, x);
    out.data += mse(mean, y);

    Mat jac;
    if (want_grad || stochastic) jac = predictor.weight_jacobian(split.mean, x);
    if (want_grad) {
      // d mse / d mu = (2 / D_y) J^T (mean - y)
      Vec resid(dy);
      for (std::size_t r = 0; r < dy; ++r) resid[r] = 2.0 / static_cast<double>(dy) * (mean[r] - y[r]);
      const Vec g = matvec_transposed(jac, resid);
      for (std::size_t k = 0; k < d; ++k) out.grad[k] += inv_n * g[k];
    }
    if (!stochastic) continue;

    const Mat cov = predictive_covariance(jac, split.stddev, objective.sigma_noise);
    const Mat chol = cholesky(cov);
    out.kl += kl_from_parts(mean, cov, chol);
    if (!want_grad || beta == 0.0) continue;

    // d KL / d mu_y = mu_y
    const Vec gm = matvec_transposed(jac, mean);
    for (std::size_t k = 0; k < d; ++k) out.grad[k] += inv_n * beta * gm[k];
    // d KL / d Sigma = (I - Sigma^{-1}) / 2, and d Sigma / d sigma_k^2 = J_k J_k^T.
    const Mat inv = cholesky_inverse(chol);
    for (std::size_t k = 0; k < d; ++k) {
      double q = 0.0;
      for (std::size_t r = 0; r < dy; ++r) {
        const double jr = jac(r, k);
        if (jr == 0.0) continue;
        for (std::size_t c = 0; c < dy; ++c) {
          const double g = 0.5 * ((r == c ? 1.0 : 0.0) - inv(r, c));
          q += jr * g * jac(c, k);
        }
      }
      const double sigma = split.stddev[k];
      const double dsigma_ds = sigmoid(state[d + k]);
      out.grad[d + k] += inv_n * beta * q * 2.0 * sigma * dsigma_ds;
    }
  }
  out.data *= inv_n;
  out.kl *= inv_n;
  return out;
}

LossGradients evaluate(const RecurrenceModel& model, const Rollout& states,
                       std::span<const RingBatch> batches, const LinearPredictor& predictor,
                       const Objective& objective, bool want_grad, std::size_t threads) {
  if (predictor.weight_dim() != model.theta_dim) {
    throw DimensionError("predictor has " + std::to_string(predictor.weight_dim()) +
                         " weights but the recurrence carries " +
                         std::to_string(model.theta_dim));
  }
  for (const auto& b : batches) {
    if (b.ring == 0 || b.ring > states.horizon()) {
      throw DimensionError("ring " + std::to_string(b.ring) + " is outside the rollout horizon " +
                           std::to_string(states.horizon()));
    }
  }

  std::vector<BatchTerms> terms(batches.size());
  detail::parallel_for(batches.size(), threads, [&](std::size_t b) {
    terms[b] = evaluate_batch(model, states.states[batches[b].ring - 1], batches[b], predictor,
                              objective, want_grad);
  });

  LossGradients out;
  if (want_grad) out.state_grads.assign(states.horizon(), Vec(model.state_dim(), 0.0));
  auto& rep = out.report;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    rep.data_term += terms[b].data;
    rep.kl_term += terms[b].kl;
    rep.per_ring_data.emplace_back(batches[b].ring, terms[b].data);
    if (want_grad) {
      auto& g = out.state_grads[batches[b].ring - 1];
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += terms[b].grad[k];
    }
  }
  rep.total = objective.mode == Mode::kStochastic ? rep.data_term + objective.beta * rep.kl_term
                                                  : rep.data_term;
  if (objective.mode == Mode::kDeterministic) rep.kl_term = 0.0;
  return out;
}

}  // namespace

LossReport deterministic_loss(const RecurrenceModel& model, const Rollout& states,
                              std::span<const RingBatch> batches,
                              const LinearPredictor& predictor) {
  return evaluate(model, states, batches, predictor, Objective{}, false, 1).report;
}

LossReport stochastic_loss(const RecurrenceModel& model, const Rollout& states,
                           std::span<const RingBatch> batches, const LinearPredictor& predictor,
                           double beta, double sigma_noise) {
  const Objective obj{Mode::kStochastic, beta, sigma_noise};
  return evaluate(model, states, batches, predictor, obj, false, 1).report;
}

PredictiveGaussian predictive_distribution(const RecurrenceModel& model,
                                           std::span<const double> state,
                                           std::span<const double> x,
                                           const LinearPredictor& predictor, double sigma_noise) {
  if (model.mode != Mode::kStochastic)
    throw ConfigError("predictive_distribution: model is deterministic");
  const SplitState split = split_state(model, state);
  PredictiveGaussian g;
  g.mean = predictor.predict(split.mean, x);
  g.covariance = predictive_covariance(predictor.weight_jacobian(split.mean, x), split.stddev,
                                       sigma_noise);
  g.noise_floor = sigma_noise;
  return g;
}

double kl_to_standard_normal(const PredictiveGaussian& g) {
  if (g.covariance.rows() != g.mean.size() || g.covariance.cols() != g.mean.size())
    throw DimensionError("kl_to_standard_normal: covariance shape mismatch");
  return kl_from_parts(g.mean, g.covariance, cholesky(g.covariance));
}

LossGradients loss_state_gradients(const RecurrenceModel& model, const Rollout& states,
                                   std::span<const RingBatch> batches,
                                   const LinearPredictor& predictor, const Objective& objective,
                                   std::size_t threads) {
  return evaluate(model, states, batches, predictor, objective, true, threads);
}

}  // namespace weightcaster
