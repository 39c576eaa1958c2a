#include "weightcaster/optimizer.hpp"

#include <cmath>
#include <string>

#include "weightcaster/error.hpp"

namespace weightcaster {

AdaBelief::AdaBelief(std::size_t n_params, AdaBeliefOptions options)
    : options_(options), m_(n_params, 0.0), s_(n_params, 0.0) {}

void AdaBelief::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw DimensionError("AdaBelief::step: parameter/gradient length mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i]))
      throw NumericalError("AdaBelief::step: non-finite gradient at parameter " + std::to_string(i));
  }

  double scale = 1.0;
  if (options_.grad_clip > 0.0) {
    const double gn = norm(grads);
    if (gn > options_.grad_clip) scale = options_.grad_clip / gn;
  }

  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double eps = options_.epsilon;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] * scale;
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    const double dev = g - m_[i];
    s_[i] = b2 * s_[i] + (1.0 - b2) * dev * dev + eps;
    const double m_hat = m_[i] / bias1;
    const double s_hat = s_[i] / bias2;
    params[i] -= options_.learning_rate * m_hat / (std::sqrt(s_hat) + eps);
  }
}

nlohmann::json AdaBelief::to_json() const {
  return {{"learning_rate", options_.learning_rate},
          {"beta1", options_.beta1},
          {"beta2", options_.beta2},
          {"epsilon", options_.epsilon},
          {"grad_clip", options_.grad_clip},
          {"step", step_},
          {"m", m_},
          {"s", s_}};
}

AdaBelief AdaBelief::from_json(const nlohmann::json& j) {
  AdaBeliefOptions opt;
  opt.learning_rate = j.at("learning_rate").get<double>();
  opt.beta1 = j.at("beta1").get<double>();
  opt.beta2 = j.at("beta2").get<double>();
  opt.epsilon = j.at("epsilon").get<double>();
  opt.grad_clip = j.at("grad_clip").get<double>();
  auto m = j.at("m").get<Vec>();
  auto s = j.at("s").get<Vec>();
  if (m.size() != s.size()) throw DataError("AdaBelief state: accumulator length mismatch");
  AdaBelief out(m.size(), opt);
  out.step_ = j.at("step").get<std::size_t>();
  out.m_ = std::move(m);
  out.s_ = std::move(s);
  return out;
}

}  // namespace weightcaster
