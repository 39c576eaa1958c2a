#include "weightcaster/inference.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "csv_util.hpp"
#include "weightcaster/error.hpp"

namespace weightcaster {

bool operator==(const Prediction& a, const Prediction& b) {
  if (a.ring != b.ring || a.y_hat != b.y_hat || a.extrapolated != b.extrapolated) return false;
  if (a.distribution.has_value() != b.distribution.has_value()) return false;
  if (!a.distribution) return true;
  return a.distribution->mean == b.distribution->mean &&
         a.distribution->covariance == b.distribution->covariance &&
         a.distribution->noise_floor == b.distribution->noise_floor;
}

namespace {

void check_input(const Checkpoint& ckpt, std::size_t dim) {
  if (dim != ckpt.input_dim) {
    throw DimensionError("prediction input has dimension " + std::to_string(dim) +
                         ", checkpoint expects " + std::to_string(ckpt.input_dim));
  }
}

Prediction predict_at_state(const Checkpoint& ckpt, std::size_t ring,
                            std::span<const double> state, std::span<const double> x) {
  const LinearPredictor predictor = ckpt.predictor();
  Prediction p;
  p.ring = ring;
  p.extrapolated = ring > ckpt.partition.t_train;
  const SplitState parts = split_state(ckpt.model, state);
  p.y_hat = predictor.predict(std::span<const double>(parts.mean).first(predictor.weight_dim()), x);
  if (ckpt.model.mode == Mode::kStochastic) {
    p.distribution =
        predictive_distribution(ckpt.model, state, x, predictor, ckpt.config.sigma_noise);
  }
  return p;
}

Vec state_at(const RecurrenceModel& model, std::size_t ring) {
  Vec z = model.init_state;
  for (std::size_t t = 1; t < ring; ++t) z = advance_state(model, z);
  return z;
}

}  // namespace

Prediction predict_point(const Checkpoint& ckpt, std::span<const double> x) {
  check_input(ckpt, x.size());
  const std::size_t ring = ckpt.partition.ring_of(x);
  return predict_at_state(ckpt, ring, state_at(ckpt.model, ring), x);
}

std::vector<Prediction> predict_batch(const Checkpoint& ckpt, const Mat& x) {
  check_input(ckpt, x.cols());
  std::vector<std::size_t> rings(x.rows());
  std::size_t max_ring = 1;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    rings[i] = ckpt.partition.ring_of(x.row(i));
    max_ring = std::max(max_ring, rings[i]);
  }
  const Rollout states = rollout(ckpt.model, max_ring);
  std::vector<Prediction> out;
  out.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    out.push_back(predict_at_state(ckpt, rings[i], states.states[rings[i] - 1], x.row(i)));
  return out;
}

MonteCarloMoments predict_mc(const Checkpoint& ckpt, std::span<const double> x,
                             std::size_t n_samples, Rng& rng) {
  if (ckpt.model.mode != Mode::kStochastic)
    throw ConfigError("predict_mc requires a stochastic checkpoint");
  if (n_samples < 2) throw ConfigError("predict_mc needs at least 2 samples");
  check_input(ckpt, x.size());
  const LinearPredictor predictor = ckpt.predictor();
  const Vec z = state_at(ckpt.model, ckpt.partition.ring_of(x));
  const std::size_t dy = predictor.output_dim();

  // Welford accumulation.
  MonteCarloMoments m{Vec(dy, 0.0), Vec(dy, 0.0)};
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Vec y = predictor.predict(sample_weights(ckpt.model, z, rng), x);
    const double n = static_cast<double>(k + 1);
    for (std::size_t j = 0; j < dy; ++j) {
      const double d = y[j] - m.mean[j];
      m.mean[j] += d / n;
      m.variance[j] += d * (y[j] - m.mean[j]);
    }
  }
  for (auto& v : m.variance) v /= static_cast<double>(n_samples - 1);
  return m;
}

Mat point_estimates(std::span<const Prediction> predictions) {
  if (predictions.empty()) return {};
  Mat out(predictions.size(), predictions.front().y_hat.size());
  for (std::size_t i = 0; i < predictions.size(); ++i)
    std::copy(predictions[i].y_hat.begin(), predictions[i].y_hat.end(), out.row(i).begin());
  return out;
}

void write_predictions_csv(const std::filesystem::path& path, const Mat& x,
                           std::span<const Prediction> predictions) {
  if (x.rows() != predictions.size())
    throw DimensionError("write_predictions_csv: row count mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions '" + path.string() + "'");
  const std::size_t dx = x.cols();
  const std::size_t dy = predictions.empty() ? 1 : predictions.front().y_hat.size();
  const bool with_var = std::any_of(predictions.begin(), predictions.end(),
                                    [](const Prediction& p) { return p.distribution.has_value(); });
  auto name = [](const char* base, std::size_t j, std::size_t n) {
    return n == 1 ? std::string(base) : std::string(base) + std::to_string(j);
  };
  for (std::size_t j = 0; j < dx; ++j) out << name("x", j, dx) << ',';
  for (std::size_t j = 0; j < dy; ++j) out << name("y_hat", j, dy) << ',';
  if (with_var)
    for (std::size_t j = 0; j < dy; ++j) out << name("variance", j, dy) << ',';
  out << "ring,extrapolated\n";

  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << ',';
  };
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Prediction& p = predictions[i];
    for (double v : x.row(i)) num(v);
    for (double v : p.y_hat) num(v);
    if (with_var) {
      for (std::size_t j = 0; j < dy; ++j)
        num(p.distribution ? p.distribution->covariance(j, j) : 0.0);
    }
    out << p.ring << ',' << (p.extrapolated ? 1 : 0) << '\n';
  }
  if (!out) throw DataError("error writing predictions '" + path.string() + "'");
}

PredictionTable read_predictions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = detail::split_fields(line, ',');
  std::size_t dx = 0, dy = 0, dv = 0;
  for (const auto& raw : header) {
    const std::string h = detail::trim(raw);
    if (h.rfind("y_hat", 0) == 0) {
      ++dy;
    } else if (h.rfind("variance", 0) == 0) {
      ++dv;
    } else if (h.rfind('x', 0) == 0) {
      ++dx;
    } else if (h != "ring" && h != "extrapolated") {
      throw DataError(path.string() + ":1: unexpected column '" + h + "'");
    }
  }
  if (dx == 0 || dy == 0 || (dv != 0 && dv != dy) || header.size() != dx + dy + dv + 2)
    throw DataError(path.string() + ":1: malformed prediction header");

  Vec xs, ys, vs;
  PredictionTable t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line, ',');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) throw DataError(where + ": wrong field count");
    for (std::size_t j = 0; j < dx + dy + dv; ++j) {
      double v = 0.0;
      if (!detail::parse_finite(detail::trim(fields[j]), v))
        throw DataError(where + ": bad number '" + fields[j] + "'");
      (j < dx ? xs : j < dx + dy ? ys : vs).push_back(v);
    }
    double ring = 0.0, ext = 0.0;
    if (!detail::parse_finite(detail::trim(fields[dx + dy + dv]), ring) || ring < 0.0 ||
        !detail::parse_finite(detail::trim(fields[dx + dy + dv + 1]), ext))
      throw DataError(where + ": bad ring/extrapolated field");
    t.ring.push_back(static_cast<std::size_t>(ring));
    t.extrapolated.push_back(ext != 0.0);
  }
  const std::size_t n = t.ring.size();
  if (n == 0) throw DataError(path.string() + ": no data rows");
  t.x = Mat(n, dx, std::move(xs));
  t.y_hat = Mat(n, dy, std::move(ys));
  if (dv > 0) t.variance = Mat(n, dv, std::move(vs));
  return t;
}

}  // namespace weightcaster
