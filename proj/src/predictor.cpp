#include "weightcaster/predictor.hpp"

#include <string>

#include "weightcaster/error.hpp"

namespace weightcaster {

LinearPredictor::LinearPredictor(std::size_t input_dim, std::size_t output_dim)
    : input_dim_(input_dim), output_dim_(output_dim) {
  if (input_dim == 0 || output_dim == 0)
    throw DimensionError("LinearPredictor: dimensions must be positive");
}

void LinearPredictor::check(std::span<const double> theta, std::span<const double> x) const {
  if (theta.size() != weight_dim()) {
    throw DimensionError("LinearPredictor: expected " + std::to_string(weight_dim()) +
                         " weights, got " + std::to_string(theta.size()));
  }
  if (x.size() != input_dim_) {
    throw DimensionError("LinearPredictor: expected input of dimension " +
                         std::to_string(input_dim_) + ", got " + std::to_string(x.size()));
  }
}

Vec LinearPredictor::predict(std::span<const double> theta, std::span<const double> x) const {
  check(theta, x);
  const std::size_t bias = output_dim_ * input_dim_;
  Vec y(output_dim_);
  for (std::size_t r = 0; r < output_dim_; ++r) {
    double acc = theta[bias + r];
    for (std::size_t c = 0; c < input_dim_; ++c) acc += theta[r * input_dim_ + c] * x[c];
    y[r] = acc;
  }
  return y;
}

Mat LinearPredictor::weight_jacobian(std::span<const double> theta,
                                     std::span<const double> x) const {
  check(theta, x);
  Mat j(output_dim_, weight_dim());
  const std::size_t bias = output_dim_ * input_dim_;
  for (std::size_t r = 0; r < output_dim_; ++r) {
    for (std::size_t c = 0; c < input_dim_; ++c) j(r, r * input_dim_ + c) = x[c];
    j(r, bias + r) = 1.0;
  }
  return j;
}

}  // namespace weightcaster
