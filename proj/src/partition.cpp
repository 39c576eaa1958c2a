#include "weightcaster/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "weightcaster/error.hpp"

namespace weightcaster {

std::string to_string(DistanceMetric metric) {
  switch (metric) {
    case DistanceMetric::kEuclidean:
      return "euclidean";
    case DistanceMetric::kManhattan:
      return "manhattan";
  }
  return "unknown";
}

DistanceMetric parse_metric(const std::string& name) {
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  if (name == "manhattan") return DistanceMetric::kManhattan;
  throw ConfigError("unknown distance metric '" + name + "'");
}

double distance(DistanceMetric metric, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("distance: dimension mismatch");
  double acc = 0.0;
  if (metric == DistanceMetric::kEuclidean) {
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
  }
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

Vec resolve_anchor(const AnchorPolicy& policy, const Mat& train_inputs) {
  const std::size_t n = train_inputs.rows();
  const std::size_t dim = train_inputs.cols();
  if (n == 0) throw DataError("resolve_anchor: empty training set");
  switch (policy.kind) {
    case AnchorPolicy::Kind::kMean: {
      Vec mean(dim, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += train_inputs(i, j);
      for (auto& m : mean) m /= static_cast<double>(n);
      return mean;
    }
    case AnchorPolicy::Kind::kMin: {
      Vec lo(train_inputs.row(0).begin(), train_inputs.row(0).end());
      for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) lo[j] = std::min(lo[j], train_inputs(i, j));
      return lo;
    }
    case AnchorPolicy::Kind::kExplicit:
      if (policy.point.size() != dim) {
        throw DimensionError("resolve_anchor: explicit anchor has dimension " +
                             std::to_string(policy.point.size()) + ", inputs have " +
                             std::to_string(dim));
      }
      return policy.point;
  }
  throw ConfigError("resolve_anchor: unknown policy");
}

double derive_delta(const Mat& train_inputs, std::span<const double> anchor,
                    DistanceMetric metric, std::size_t t_train) {
  if (t_train == 0) throw ConfigError("derive_delta: t_train must be at least 1");
  if (train_inputs.rows() == 0) throw DataError("derive_delta: empty training set");
  double d_max = 0.0;
  for (std::size_t i = 0; i < train_inputs.rows(); ++i)
    d_max = std::max(d_max, distance(metric, anchor, train_inputs.row(i)));
  if (!(d_max > 0.0)) {
    throw DataError("derive_delta: degenerate geometry, every training point coincides "
                    "with the anchor");
  }
  return d_max * (1.0 + 1e-9) / static_cast<double>(t_train);
}

std::size_t assign_ring(double distance, double delta) {
  if (!(delta > 0.0)) throw ConfigError("assign_ring: delta must be positive");
  if (!(distance >= 0.0)) throw DimensionError("assign_ring: distance must be non-negative");
  const double steps = std::floor(distance / delta);
  // Anything past 2^52 rings cannot be rolled out anyway.
  if (!(steps < 0x1.0p52)) throw NumericalError("assign_ring: ring index overflow");
  return static_cast<std::size_t>(steps) + 1;
}

std::size_t RingPartition::ring_of(std::span<const double> x) const {
  return assign_ring(distance(metric, anchor, x), delta);
}

PartitionResult partition_dataset(const Mat& inputs, std::span<const double> anchor,
                                  DistanceMetric metric, double delta, std::size_t t_total) {
  if (!(delta > 0.0)) throw ConfigError("partition_dataset: delta must be positive");
  if (t_total == 0) throw ConfigError("partition_dataset: t_total must be at least 1");
  if (anchor.size() != inputs.cols()) throw DimensionError("partition_dataset: anchor dimension");

  PartitionResult out;
  auto& part = out.partition;
  part.anchor.assign(anchor.begin(), anchor.end());
  part.metric = metric;
  part.delta = delta;
  part.t_total = t_total;
  part.t_train = 0;
  part.assignments.resize(inputs.rows());
  out.rings.resize(t_total);

  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    const std::size_t t = part.ring_of(inputs.row(i));
    if (t > t_total) {
      throw DataError("partition_dataset: point " + std::to_string(i) + " falls in ring " +
                      std::to_string(t) + ", beyond t_total = " + std::to_string(t_total));
    }
    part.assignments[i] = t;
    out.rings[t - 1].push_back(i);
    part.t_train = std::max(part.t_train, t);
  }
  if (part.t_train == 0) part.t_train = 1;
  return out;
}

}  // namespace weightcaster
