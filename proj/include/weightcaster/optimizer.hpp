#pragma once

#include <cstddef>
#include <span>

#include <json.hpp>

#include "weightcaster/numkit.hpp"

namespace weightcaster {

struct AdaBeliefOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-16;
  // Rescale the gradient to this L2 norm when exceeded; 0 disables.
  double grad_clip = 0.0;

  friend bool operator==(const AdaBeliefOptions&, const AdaBeliefOptions&) = default;
};

// AdaBelief: Adam with the second moment replaced by the EMA of the squared
// deviation of the gradient from its running mean.
class AdaBelief {
 public:
  AdaBelief(std::size_t n_params, AdaBeliefOptions options);

  // Updates params in place. Throws NumericalError naming the first
  // non-finite gradient index.
  void step(std::span<double> params, std::span<const double> grads);

  std::size_t steps() const { return step_; }
  const Vec& first_moment() const { return m_; }
  const Vec& belief() const { return s_; }
  const AdaBeliefOptions& options() const { return options_; }

  nlohmann::json to_json() const;
  static AdaBelief from_json(const nlohmann::json& j);

  friend bool operator==(const AdaBelief&, const AdaBelief&) = default;

 private:
  AdaBeliefOptions options_;
  std::size_t step_ = 0;
  Vec m_;
  Vec s_;
};

}  // namespace weightcaster
