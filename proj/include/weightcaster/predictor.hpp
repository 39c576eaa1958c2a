#pragma once

#include <cstddef>
#include <span>

#include "weightcaster/numkit.hpp"

namespace weightcaster {

// Per-ring affine model y = W x + b. Weights are passed in as a flat vector:
// the D_y x D_x slope block row-major, then the D_y intercepts.
class LinearPredictor {
 public:
  LinearPredictor(std::size_t input_dim, std::size_t output_dim);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  std::size_t weight_dim() const { return output_dim_ * (input_dim_ + 1); }

  Vec predict(std::span<const double> theta, std::span<const double> x) const;

  // d predict / d theta, D_y x D_theta. Exact and independent of theta.
  Mat weight_jacobian(std::span<const double> theta, std::span<const double> x) const;

 private:
  void check(std::span<const double> theta, std::span<const double> x) const;

  std::size_t input_dim_;
  std::size_t output_dim_;
};

}  // namespace weightcaster
