#include "weightcaster/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <optional>

#include "weightcaster/error.hpp"

namespace weightcaster {

namespace {

Vec log_grid(double lo_exp, double hi_exp, std::size_t n) {
  Vec g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) /
                                       static_cast<double>(n - 1));
  return g;
}

// Sorted sample of k distinct indices from [0, n).
std::vector<std::size_t> sample_rows(std::size_t n, std::size_t k, Rng rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (k >= n) return idx;
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Mat take_rows(const Mat& a, const std::vector<std::size_t>& idx) {
  Mat out(idx.size(), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy(a.row(idx[i]).begin(), a.row(idx[i]).end(), out.row(i).begin());
  return out;
}

Mat gram(const Mat& x, const GpHyperparameters& h) {
  const std::size_t n = x.rows();
  Mat k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j)
      k(i, j) = k(j, i) = rbf_kernel(x.row(i), x.row(j), h.lengthscale, h.signal_variance);
    k(i, i) = h.signal_variance + h.noise_variance;
  }
  return k;
}

void check_hyper(const GpHyperparameters& h) {
  if (!(h.lengthscale > 0.0) || !(h.signal_variance > 0.0) || !(h.noise_variance > 0.0))
    throw ConfigError("GP hyperparameters must be positive");
}

}  // namespace

GpGrid GpGrid::standard() {
  return {log_grid(-2.0, 1.0, 7), log_grid(-2.0, 1.0, 7), log_grid(-6.0, 0.0, 7)};
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double lengthscale,
                  double signal_variance) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return signal_variance * std::exp(-0.5 * d2 / (lengthscale * lengthscale));
}

double gp_log_marginal_likelihood(const Mat& x, std::span<const double> y,
                                  const GpHyperparameters& hyper) {
  check_hyper(hyper);
  if (x.rows() != y.size()) throw DimensionError("gp_log_marginal_likelihood: row mismatch");
  const Mat l = cholesky(gram(x, hyper));
  const Vec v = solve_lower(l, y);
  const double n = static_cast<double>(y.size());
  return -0.5 * dot(v, v) - 0.5 * log_det_from_cholesky(l) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

GpModel gp_fit_fixed(const Mat& x, std::span<const double> y, const GpHyperparameters& hyper) {
  check_hyper(hyper);
  if (x.rows() == 0 || x.rows() != y.size()) throw DimensionError("gp_fit: bad training shapes");
  GpModel m;
  m.hyper = hyper;
  m.x = x;
  m.y.assign(y.begin(), y.end());
  m.rows_available = x.rows();
  m.chol = cholesky(gram(x, hyper));
  const Vec v = solve_lower(m.chol, m.y);
  m.alpha = solve_lower_transposed(m.chol, v);
  m.log_marginal_likelihood = -0.5 * dot(v, v) - 0.5 * log_det_from_cholesky(m.chol) -
                              0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
  return m;
}

GpModel gp_fit(const LabeledDataset& data, const GpOptions& options) {
  if (data.y.cols() != 1) throw DimensionError("gp_fit supports a single output only");
  const std::size_t n = data.size();
  if (n == 0) throw DataError("gp_fit: empty dataset");
  if (options.max_rows == 0) throw ConfigError("gp_fit: max_rows must be positive");
  const Rng root(options.seed);

  const auto fit_idx = sample_rows(n, options.max_rows, root.child(0));
  const Mat x = take_rows(data.x, fit_idx);
  Vec y(fit_idx.size());
  for (std::size_t i = 0; i < fit_idx.size(); ++i) y[i] = data.y(fit_idx[i], 0);

  const std::size_t sel_k = options.selection_rows == 0 ? x.rows() : options.selection_rows;
  const auto sel_idx = sample_rows(x.rows(), sel_k, root.child(1));
  const Mat xs = take_rows(x, sel_idx);
  Vec ys(sel_idx.size());
  for (std::size_t i = 0; i < sel_idx.size(); ++i) ys[i] = y[sel_idx[i]];

  double best = -std::numeric_limits<double>::infinity();
  std::optional<GpHyperparameters> best_h;
  for (double ell : options.grid.lengthscales) {
    for (double s2 : options.grid.signal_variances) {
      for (double sn2 : options.grid.noise_variances) {
        const GpHyperparameters h{ell, s2, sn2};
        try {
          const double lml = gp_log_marginal_likelihood(xs, ys, h);
          if (std::isfinite(lml) && lml > best) {
            best = lml;
            best_h = h;
          }
        } catch (const DecompositionError&) {
        }
      }
    }
  }
  if (!best_h) throw NumericalError("gp_fit: every grid point failed to factorize");
  GpModel m = gp_fit_fixed(x, y, *best_h);
  m.rows_available = n;
  return m;
}

GpPrediction gp_predict(const GpModel& model, std::span<const double> x) {
  if (x.size() != model.x.cols()) throw DimensionError("gp_predict: input dimension");
  const std::size_t n = model.x.rows();
  Vec k(n);
  for (std::size_t i = 0; i < n; ++i)
    k[i] = rbf_kernel(model.x.row(i), x, model.hyper.lengthscale, model.hyper.signal_variance);
  GpPrediction p;
  p.mean = dot(k, model.alpha);
  const Vec v = solve_lower(model.chol, k);
  p.variance = std::max(0.0, model.hyper.signal_variance + model.hyper.noise_variance - dot(v, v));
  return p;
}

Vec gp_predict_mean(const GpModel& model, const Mat& x) {
  if (x.cols() != model.x.cols()) throw DimensionError("gp_predict_mean: input dimension");
  Vec out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.x.rows(); ++i)
      s += model.alpha[i] * rbf_kernel(model.x.row(i), x.row(r), model.hyper.lengthscale,
                                       model.hyper.signal_variance);
    out[r] = s;
  }
  return out;
}

// ---- MLP ----------------------------------------------------------------------

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.data().size() + l.bias.size();
  return n;
}

Vec MlpModel::flatten() const {
  Vec flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weight.data().begin(), l.weight.data().end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void MlpModel::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw DimensionError("MlpModel::assign: length mismatch");
  auto it = flat.begin();
  for (auto& l : layers) {
    std::copy_n(it, l.weight.data().size(), l.weight.data().begin());
    it += static_cast<std::ptrdiff_t>(l.weight.data().size());
    std::copy_n(it, l.bias.size(), l.bias.begin());
    it += static_cast<std::ptrdiff_t>(l.bias.size());
  }
}

void MlpModel::validate() const {
  if (layers.empty()) throw DimensionError("MLP has no layers");
  std::size_t width = input_dim;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weight.rows() != width || l.bias.size() != l.weight.cols())
      throw DimensionError("MLP layer " + std::to_string(i) + " does not chain");
    width = l.weight.cols();
  }
  if (width != output_dim) throw DimensionError("MLP output width mismatch");
}

MlpModel mlp_init(std::size_t input_dim, std::size_t output_dim,
                  const std::vector<std::size_t>& hidden, Rng& rng) {
  if (input_dim == 0 || output_dim == 0) throw DimensionError("mlp_init: zero dimension");
  MlpModel m{input_dim, output_dim, {}};
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i + 1] == 0) throw DimensionError("mlp_init: zero-width layer");
    MlpLayer l{Mat(widths[i], widths[i + 1]), Vec(widths[i + 1], 0.0)};
    const double sd = 1.0 / std::sqrt(static_cast<double>(widths[i]));
    for (auto& w : l.weight.data()) w = sd * rng.normal();
    m.layers.push_back(std::move(l));
  }
  return m;
}

namespace {

typedef double v2d __attribute__((vector_size(16)));

// C (n x m) += A (n x k) B (k x m), all row-major. 4x8 register tiles with
// scalar tails.
void gemm_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
              std::size_t m) {
  constexpr std::size_t kR = 4, kC = 8;
  const std::size_t n4 = n - n % kR, m8 = m - m % kC;
  for (std::size_t r0 = 0; r0 < n4; r0 += kR) {
    for (std::size_t j0 = 0; j0 < m8; j0 += kC) {
      v2d acc[kR][kC / 2] = {};
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * m + j0;
        v2d bv[kC / 2];
        std::memcpy(bv, brow, sizeof bv);
        for (std::size_t i = 0; i < kR; ++i) {
          const double av = a[(r0 + i) * k + p];
          const v2d a2 = {av, av};
          for (std::size_t j = 0; j < kC / 2; ++j) acc[i][j] += a2 * bv[j];
        }
      }
      for (std::size_t i = 0; i < kR; ++i) {
        double* crow = c + (r0 + i) * m + j0;
        for (std::size_t j = 0; j < kC / 2; ++j) {
          crow[2 * j] += acc[i][j][0];
          crow[2 * j + 1] += acc[i][j][1];
        }
      }
    }
  }
  // Tails: rows past n4 over all columns, columns past m8 over the tiled rows.
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t j_begin = r < n4 ? m8 : 0;
    if (j_begin == m) continue;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[r * k + p];
      for (std::size_t j = j_begin; j < m; ++j) c[r * m + j] += av * b[p * m + j];
    }
  }
}

Mat transposed(const Mat& a) { return a.transpose(); }

// 1 - 2 / (exp(2x) + 1), about four times cheaper than std::tanh here.
double fast_tanh(double x) {
  if (x > 20.0) return 1.0;
  if (x < -20.0) return -1.0;
  return 1.0 - 2.0 / (std::exp(2.0 * x) + 1.0);
}

// Activations per layer for a batch: acts[0] = inputs, acts[k] = layer k output.
std::vector<Mat> forward(const MlpModel& m, const Mat& x) {
  std::vector<Mat> acts;
  acts.reserve(m.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const MlpLayer& l = m.layers[li];
    const Mat& in = acts.back();
    const std::size_t width = l.weight.cols();
    Mat out(in.rows(), width);
    for (std::size_t r = 0; r < in.rows(); ++r)
      std::copy(l.bias.begin(), l.bias.end(), out.row(r).begin());
    gemm_acc(in.data().data(), l.weight.data().data(), out.data().data(), in.rows(), in.cols(),
             width);
    if (li + 1 < m.layers.size())
      for (double& v : out.data()) v = fast_tanh(v);
    acts.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

Mat mlp_predict(const MlpModel& model, const Mat& x) {
  if (x.cols() != model.input_dim) throw DimensionError("mlp_predict: input dimension");
  return std::move(forward(model, x).back());
}

Vec mlp_predict(const MlpModel& model, std::span<const double> x) {
  Mat in(1, x.size(), Vec(x.begin(), x.end()));
  return mlp_predict(model, in).data();
}

double mlp_loss(const MlpModel& model, const Mat& x, const Mat& y, Vec* grad) {
  if (x.cols() != model.input_dim || y.cols() != model.output_dim || x.rows() != y.rows())
    throw DimensionError("mlp_loss: shape mismatch");
  const std::vector<Mat> acts = forward(model, x);
  const Mat& out = acts.back();
  const double denom = static_cast<double>(y.rows() * y.cols());
  double loss = 0.0;
  Mat delta(out.rows(), out.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    const double e = out.data()[i] - y.data()[i];
    loss += e * e;
    delta.data()[i] = 2.0 * e / denom;
  }
  loss /= denom;
  if (!grad) return loss;

  grad->assign(model.parameter_count(), 0.0);
  // Offsets of each layer's block inside the flat gradient.
  std::vector<std::size_t> offset(model.layers.size());
  std::size_t pos = 0;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    offset[li] = pos;
    pos += model.layers[li].weight.data().size() + model.layers[li].bias.size();
  }
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const MlpLayer& l = model.layers[li];
    const Mat& in = acts[li];
    const std::size_t n = in.rows(), width = l.weight.cols();
    double* gw = grad->data() + offset[li];
    double* gb = gw + l.weight.data().size();
    for (std::size_t r = 0; r < n; ++r) {
      const double* d = delta.row(r).data();
      for (std::size_t j = 0; j < width; ++j) gb[j] += d[j];
    }
    // dW = in^T delta
    const Mat in_t = transposed(in);
    gemm_acc(in_t.data().data(), delta.data().data(), gw, in.cols(), n, width);
    if (li == 0) break;
    // d(in) = delta W^T, then through tanh.
    const Mat w_t = transposed(l.weight);
    Mat prev(n, in.cols());
    gemm_acc(delta.data().data(), w_t.data().data(), prev.data().data(), n, width, in.cols());
    for (std::size_t i = 0; i < prev.data().size(); ++i) {
      const double a = in.data()[i];
      prev.data()[i] *= 1.0 - a * a;
    }
    delta = std::move(prev);
  }
  return loss;
}

MlpModel mlp_fit(const LabeledDataset& data, const MlpOptions& options) {
  if (data.size() == 0) throw DataError("mlp_fit: empty dataset");
  if (options.iterations == 0) throw ConfigError("mlp_fit: iterations must be positive");
  Rng rng(options.seed);
  MlpModel m = mlp_init(data.x.cols(), data.y.cols(), options.hidden, rng);
  Vec params = m.flatten();
  AdaBelief opt(params.size(), {options.learning_rate, 0.9, 0.999, 1e-16, 0.0});
  Vec grad;
  for (std::size_t it = 0; it < options.iterations; ++it) {
    const double loss = mlp_loss(m, data.x, data.y, &grad);
    if (!std::isfinite(loss))
      throw NumericalError("mlp_fit diverged at iteration " + std::to_string(it));
    opt.step(params, grad);
    m.assign(params);
  }
  return m;
}

}  // namespace weightcaster
