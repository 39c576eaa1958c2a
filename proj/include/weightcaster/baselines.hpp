#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "weightcaster/datasets.hpp"
#include "weightcaster/numkit.hpp"
#include "weightcaster/optimizer.hpp"

namespace weightcaster {

// ---- Gaussian process -------------------------------------------------------

struct GpHyperparameters {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-2;

  friend bool operator==(const GpHyperparameters&, const GpHyperparameters&) = default;
};

struct GpGrid {
  Vec lengthscales;
  Vec signal_variances;
  Vec noise_variances;

  // 7 log-spaced points per axis: lengthscale and signal variance over
  // [1e-2, 10], noise variance over [1e-6, 1].
  static GpGrid standard();
};

struct GpOptions {
  GpGrid grid = GpGrid::standard();
  // Exact inference cap; larger training sets are subsampled (seeded).
  std::size_t max_rows = 3000;
  // Rows used to score the hyperparameter grid; 0 uses every fitted row.
  std::size_t selection_rows = 500;
  std::uint64_t seed = 0;
};

// Zero-mean GP with an RBF kernel, single output.
struct GpModel {
  GpHyperparameters hyper;
  Mat x;
  Vec y;
  Mat chol;    // L with L L^T = K + noise I
  Vec alpha;   // (K + noise I)^{-1} y
  double log_marginal_likelihood = 0.0;
  std::size_t rows_available = 0;  // before subsampling

  bool subsampled() const { return x.rows() < rows_available; }
  // Stored targets plus the three hyperparameters.
  std::size_t parameter_count() const { return y.size() + 3; }
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double lengthscale,
                  double signal_variance);

// Throws DecompositionError when K + noise I is not numerically PD.
double gp_log_marginal_likelihood(const Mat& x, std::span<const double> y,
                                  const GpHyperparameters& hyper);

GpModel gp_fit_fixed(const Mat& x, std::span<const double> y, const GpHyperparameters& hyper);

// Grid search on the log marginal likelihood, then an exact fit. Throws
// NumericalError if every grid point fails to factorize.
GpModel gp_fit(const LabeledDataset& data, const GpOptions& options = {});

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;  // includes noise variance
};

GpPrediction gp_predict(const GpModel& model, std::span<const double> x);
// Posterior means only; O(N) per row.
Vec gp_predict_mean(const GpModel& model, const Mat& x);

// ---- MLP --------------------------------------------------------------------

struct MlpOptions {
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t iterations = 5000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// Dense layer; weight(i, j) connects input i to output j.
struct MlpLayer {
  Mat weight;
  Vec bias;
};

// tanh hidden layers, linear output layer.
struct MlpModel {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  std::vector<MlpLayer> layers;

  std::size_t parameter_count() const;
  // Layer by layer: weight row-major, then bias.
  Vec flatten() const;
  void assign(std::span<const double> flat);
  // Throws DimensionError if consecutive layer shapes do not chain.
  void validate() const;
};

// Weights N(0, 1 / fan_in), zero biases.
MlpModel mlp_init(std::size_t input_dim, std::size_t output_dim,
                  const std::vector<std::size_t>& hidden, Rng& rng);

Vec mlp_predict(const MlpModel& model, std::span<const double> x);
Mat mlp_predict(const MlpModel& model, const Mat& x);

// Mean squared error over rows and outputs. Writes the gradient with respect
// to flatten() order into `grad` when non-null.
double mlp_loss(const MlpModel& model, const Mat& x, const Mat& y, Vec* grad = nullptr);

// Full-batch AdaBelief. Throws NumericalError on a non-finite loss.
MlpModel mlp_fit(const LabeledDataset& data, const MlpOptions& options = {});

}  // namespace weightcaster
