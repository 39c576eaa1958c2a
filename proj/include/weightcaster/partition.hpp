#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "weightcaster/numkit.hpp"

namespace weightcaster {

enum class DistanceMetric { kEuclidean, kManhattan };

std::string to_string(DistanceMetric metric);
DistanceMetric parse_metric(const std::string& name);
double distance(DistanceMetric metric, std::span<const double> a, std::span<const double> b);

struct AnchorPolicy {
  enum class Kind { kMean, kMin, kExplicit };

  Kind kind = Kind::kMean;
  Vec point;  // only for kExplicit

  static AnchorPolicy mean() { return {Kind::kMean, {}}; }
  static AnchorPolicy min() { return {Kind::kMin, {}}; }
  static AnchorPolicy at(Vec point) { return {Kind::kExplicit, std::move(point)}; }

  friend bool operator==(const AnchorPolicy&, const AnchorPolicy&) = default;
};

Vec resolve_anchor(const AnchorPolicy& policy, const Mat& train_inputs);

// Ring width that places the farthest training point strictly inside ring
// `t_train`.
double derive_delta(const Mat& train_inputs, std::span<const double> anchor,
                    DistanceMetric metric, std::size_t t_train);

// 1-based ring index: ring t covers distances [(t-1) delta, t delta).
std::size_t assign_ring(double distance, double delta);

struct RingPartition {
  Vec anchor;
  DistanceMetric metric = DistanceMetric::kEuclidean;
  double delta = 1.0;
  std::size_t t_total = 1;
  std::size_t t_train = 1;
  std::vector<std::size_t> assignments;  // per point, 1-based

  std::size_t ring_of(std::span<const double> x) const;
};

struct PartitionResult {
  RingPartition partition;
  // rings[t - 1] lists the point indices of ring t, in input order.
  std::vector<std::vector<std::size_t>> rings;
};

// Partitions training inputs. Throws DataError if any point falls beyond
// ring `t_total`.
PartitionResult partition_dataset(const Mat& inputs, std::span<const double> anchor,
                                  DistanceMetric metric, double delta, std::size_t t_total);

}  // namespace weightcaster
