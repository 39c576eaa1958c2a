#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "weightcaster/error.hpp"
#include "weightcaster/partition.hpp"

using namespace weightcaster;

namespace {

Mat column(std::initializer_list<double> xs) {
  Mat m(xs.size(), 1);
  std::size_t i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST_CASE("resolve_anchor policies") {
  CHECK(resolve_anchor(AnchorPolicy::mean(), column({-1, 0, 1})) == Vec{0.0});
  CHECK(resolve_anchor(AnchorPolicy::min(), Mat::from_rows({{2, 5}, {3, 1}})) == Vec{2, 1});
  CHECK(resolve_anchor(AnchorPolicy::at({0.5}), column({4, 9})) == Vec{0.5});
  CHECK_THROWS(resolve_anchor(AnchorPolicy::mean(), Mat(0, 1)));
  CHECK_THROWS(resolve_anchor(AnchorPolicy::at({0.5, 1.0}), column({4, 9})));
}

TEST_CASE("derive_delta") {
  const Vec a{0.0};
  CHECK(derive_delta(column({0, 1, 2, 3}), a, DistanceMetric::kEuclidean, 3) ==
        doctest::Approx(1.0 + 1e-9).epsilon(1e-13));
  CHECK(derive_delta(column({5}), a, DistanceMetric::kEuclidean, 1) ==
        doctest::Approx(5.0 * (1 + 1e-9)).epsilon(1e-13));
  CHECK_THROWS_AS(derive_delta(column({0, 0}), a, DistanceMetric::kEuclidean, 2), DataError);
}

TEST_CASE("assign_ring is one-based floor") {
  CHECK(assign_ring(0.0, 0.1) == 1);
  CHECK(assign_ring(0.25, 0.1) == 3);
  CHECK(assign_ring(10.0, 0.1) == 101);
}

TEST_CASE("partition_dataset examples") {
  const Vec a{0.0};
  SUBCASE("three points, five rings") {
    const auto r = partition_dataset(column({0.05, 0.15, 0.25}), a, DistanceMetric::kEuclidean,
                                     0.1, 5);
    REQUIRE(r.rings.size() == 5);
    CHECK(r.rings[0] == std::vector<std::size_t>{0});
    CHECK(r.rings[1] == std::vector<std::size_t>{1});
    CHECK(r.rings[2] == std::vector<std::size_t>{2});
    CHECK(r.rings[3].empty());
    CHECK(r.rings[4].empty());
    CHECK(r.partition.t_train == 3);
  }
  SUBCASE("empty middle ring") {
    const auto r = partition_dataset(column({0.05, 0.25}), a, DistanceMetric::kEuclidean, 0.1, 3);
    CHECK(r.rings[1].empty());
    CHECK(r.partition.t_train == 3);
  }
  SUBCASE("single point at the anchor") {
    const auto r = partition_dataset(column({0.0}), a, DistanceMetric::kEuclidean, 1.0, 1);
    CHECK(r.rings[0] == std::vector<std::size_t>{0});
  }
  SUBCASE("beyond t_total") {
    CHECK_THROWS_AS(partition_dataset(column({0.5}), a, DistanceMetric::kEuclidean, 0.1, 3),
                    DataError);
  }
}

TEST_CASE("metric axioms on random triples") {
  Rng rng(11);
  for (auto metric : {DistanceMetric::kEuclidean, DistanceMetric::kManhattan}) {
    for (int i = 0; i < 1000; ++i) {
      const std::size_t d = 1 + rng.below(4);
      const Vec x = sample_std_normal(rng, d), y = sample_std_normal(rng, d),
                z = sample_std_normal(rng, d);
      CHECK(distance(metric, x, x) == 0.0);
      CHECK(distance(metric, x, y) == distance(metric, y, x));
      CHECK(distance(metric, x, z) <= distance(metric, x, y) + distance(metric, y, z) + 1e-12);
    }
  }
  CHECK(parse_metric(to_string(DistanceMetric::kManhattan)) == DistanceMetric::kManhattan);
  CHECK(distance(DistanceMetric::kManhattan, Vec{0, 0}, Vec{1, -2}) == 3.0);
}

TEST_CASE("derive_delta then partition reproduces t_train") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + rng.below(50), d = 1 + rng.below(3);
    Mat x(n, d);
    for (auto& v : x.data()) v = rng.uniform(-2, 2);
    const std::size_t t_train = 1 + rng.below(40);
    const Vec anchor = resolve_anchor(AnchorPolicy::mean(), x);
    double dmax = 0;
    for (std::size_t r = 0; r < n; ++r)
      dmax = std::max(dmax, distance(DistanceMetric::kEuclidean, anchor, x.row(r)));
    if (dmax == 0.0) continue;
    const double delta = derive_delta(x, anchor, DistanceMetric::kEuclidean, t_train);
    const auto p = partition_dataset(x, anchor, DistanceMetric::kEuclidean, delta, t_train);
    CHECK(p.partition.t_train == t_train);
  }
}
