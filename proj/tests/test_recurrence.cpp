#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "weightcaster/error.hpp"
#include "weightcaster/recurrence.hpp"

using namespace weightcaster;

namespace {

RecurrenceModel plain(const Mat& phi, const Vec& z1) {
  RecurrenceModel m;
  m.mode = Mode::kDeterministic;
  m.theta_dim = z1.size();
  m.phi = phi;
  m.init_state = z1;
  return m;
}

Mat scaled_identity(std::size_t n, double a) {
  Mat m = Mat::identity(n);
  for (auto& v : m.data()) v *= a;
  return m;
}

Mat rotation(double w) {
  return Mat::from_rows({{std::cos(w), -std::sin(w)}, {std::sin(w), std::cos(w)}});
}

}  // namespace

TEST_CASE("rollout examples") {
  SUBCASE("identity") {
    const Rollout r = rollout(plain(Mat::identity(2), {1, 2}), 5);
    REQUIRE(r.horizon() == 5);
    for (const auto& z : r.states) CHECK(z == Vec{1, 2});
  }
  SUBCASE("doubling") {
    const Rollout r = rollout(plain(scaled_identity(2, 2.0), {1, 0}), 3);
    CHECK(r.states[0] == Vec{1, 0});
    CHECK(r.states[1] == Vec{2, 0});
    CHECK(r.states[2] == Vec{4, 0});
  }
  SUBCASE("quarter rotation") {
    const Rollout r = rollout(plain(Mat::from_rows({{0, -1}, {1, 0}}), {1, 0}), 5);
    CHECK(r.states[1] == Vec{0, 1});
    CHECK(r.states[2] == Vec{-1, 0});
    CHECK(r.states[3] == Vec{0, -1});
    CHECK(r.states[4] == Vec{1, 0});
  }
  SUBCASE("zero horizon") {
    CHECK_THROWS(rollout(plain(Mat::identity(2), {1, 2}), 0));
  }
}

TEST_CASE("rollout matches matrix powers and is linear in the initial state") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    RecurrenceModel m = testing::random_model(Mode::kDeterministic, 2, rng.below(4), rng);
    const std::size_t h = 1 + rng.below(20);
    const Rollout r = rollout(m, h);
    const auto phi = testing::to_grid(m.phi);
    for (std::size_t t = 1; t <= h; ++t) {
      const Vec expect = oracle::matrix_power_apply(phi, m.init_state, t);
      CHECK(oracle::relative_error(r.states[t - 1], expect) < 1e-12);
    }

    const Vec u = sample_std_normal(rng, m.state_dim()), v = sample_std_normal(rng, m.state_dim());
    const double a = rng.normal(), b = rng.normal();
    Vec mix(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) mix[i] = a * u[i] + b * v[i];
    RecurrenceModel mu = m, mv = m, mm = m;
    mu.init_state = u;
    mv.init_state = v;
    mm.init_state = mix;
    const Rollout ru = rollout(mu, h), rv = rollout(mv, h), rm = rollout(mm, h);
    for (std::size_t t = 0; t < h; ++t) {
      Vec comb(u.size());
      for (std::size_t i = 0; i < u.size(); ++i)
        comb[i] = a * ru.states[t][i] + b * rv.states[t][i];
      CHECK(oracle::relative_error(rm.states[t], comb, 1e-9) < 1e-10);
    }
  }
}

TEST_CASE("rollout_adjoint examples") {
  SUBCASE("horizon one") {
    const RecurrenceModel m = plain(Mat::from_rows({{0.3, 1}, {2, 0.1}}), {1, 2});
    const std::vector<Vec> g{{0.5, -1.5}};
    const auto grad = rollout_adjoint(m, 1, g);
    CHECK(grad.init == g[0]);
    CHECK(grad.phi == Mat(2, 2));
  }
  SUBCASE("identity, horizon two") {
    const RecurrenceModel m = plain(Mat::identity(2), {3, -1});
    const std::vector<Vec> g{{0, 0}, {2, 5}};
    const auto grad = rollout_adjoint(m, 2, g);
    CHECK(grad.init == Vec{2, 5});
    CHECK(grad.phi == Mat::from_rows({{6, -2}, {15, -5}}));
  }
  SUBCASE("length mismatch") {
    const RecurrenceModel m = plain(Mat::identity(2), {3, -1});
    const std::vector<Vec> g{{0, 0}};
    CHECK_THROWS(rollout_adjoint(m, 2, g));
  }
}

TEST_CASE("rollout_adjoint matches finite differences on quadratic losses") {
  Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t s = 1 + rng.below(6);
    const std::size_t h = trial == 0 ? 6 : 1 + rng.below(20);
    RecurrenceModel m = plain(Mat(s, s), sample_std_normal(rng, s));
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        m.phi(i, j) = (i == j ? 0.9 : 0.0) + 0.25 * rng.normal() / std::sqrt(double(s));
    // L = sum_t w_t ||z_t - c_t||^2
    std::vector<Vec> targets;
    Vec weights;
    for (std::size_t t = 0; t < h; ++t) {
      targets.push_back(sample_std_normal(rng, s));
      weights.push_back(rng.uniform(0.1, 1.0));
    }
    auto loss = [&](const Vec& flat) {
      RecurrenceModel c = m;
      c.assign_parameters(flat);
      const Rollout r = rollout(c, h);
      double l = 0;
      for (std::size_t t = 0; t < h; ++t)
        for (std::size_t i = 0; i < s; ++i)
          l += weights[t] * (r.states[t][i] - targets[t][i]) * (r.states[t][i] - targets[t][i]);
      return l;
    };
    const Rollout r = rollout(m, h);
    std::vector<Vec> g(h, Vec(s));
    for (std::size_t t = 0; t < h; ++t)
      for (std::size_t i = 0; i < s; ++i) g[t][i] = 2 * weights[t] * (r.states[t][i] - targets[t][i]);
    const Vec analytic = rollout_adjoint(m, r, g).flatten();
    const Vec fd = oracle::central_difference(loss, m.flatten_parameters(), 1e-5);
    CHECK(oracle::relative_error(analytic, fd) < 1e-5);
  }
}

TEST_CASE("split_state") {
  SUBCASE("deterministic drops augment channels") {
    RecurrenceModel m = plain(Mat::identity(3), {0, 0, 0});
    m.theta_dim = 2;
    m.augment_dim = 1;
    const SplitState s = split_state(m, Vec{3, 4, 9});
    CHECK(s.mean == Vec{3, 4});
    CHECK(s.stddev.empty());
  }
  RecurrenceModel m;
  m.mode = Mode::kStochastic;
  m.theta_dim = 2;
  m.phi = Mat::identity(4);
  m.init_state = Vec(4, 0.0);
  SUBCASE("zero pre-scale") {
    const SplitState s = split_state(m, Vec{1, 2, 0, 0});
    CHECK(s.mean == Vec{1, 2});
    CHECK(s.stddev[0] == doctest::Approx(std::log(2.0) + 1e-4).epsilon(1e-14));
    CHECK(s.stddev[0] == doctest::Approx(0.6932).epsilon(1e-4));
  }
  SUBCASE("underflow floor") {
    const SplitState s = split_state(m, Vec{0, 0, -40, -40});
    CHECK(std::abs(s.stddev[0] - 1e-4) < 1e-15);
    CHECK(s.stddev[1] > 0.0);
  }
  SUBCASE("sigma stays positive for extreme inputs") {
    const SplitState s = split_state(m, Vec{0, 0, -1e6, 1e6});
    CHECK(s.stddev[0] > 0.0);
    CHECK(std::isfinite(s.stddev[1]));
  }
}

TEST_CASE("sample_weights") {
  RecurrenceModel m;
  m.mode = Mode::kStochastic;
  m.theta_dim = 2;
  m.phi = Mat::identity(4);
  m.init_state = Vec(4, 0.0);

  SUBCASE("collapsed scale") {
    Rng rng(1);
    const Vec w = sample_weights(m, Vec{1.5, -2, -60, -60}, rng);
    CHECK(std::abs(w[0] - 1.5) < 1e-4 * 8);
    CHECK(std::abs(w[1] + 2) < 1e-4 * 8);
  }
  SUBCASE("reproducible") {
    Rng a(3), b(3);
    const Vec z{0.2, 0.1, 0.4, -0.3};
    CHECK(sample_weights(m, z, a) == sample_weights(m, z, b));
  }
  SUBCASE("unit variance") {
    const double s = std::log(std::exp(1.0 - 1e-4) - 1.0);  // softplus(s) + sigma_min = 1
    const Vec z{0, 0, s, s};
    Rng rng(12);
    const std::size_t n = 100000;
    double sum[2] = {0, 0}, sq[2] = {0, 0};
    for (std::size_t k = 0; k < n; ++k) {
      const Vec w = sample_weights(m, z, rng);
      for (int j = 0; j < 2; ++j) {
        sum[j] += w[j];
        sq[j] += w[j] * w[j];
      }
    }
    for (int j = 0; j < 2; ++j) {
      const double mean = sum[j] / n;
      const double var = (sq[j] - n * mean * mean) / (n - 1);
      CHECK(var > 0.97);
      CHECK(var < 1.03);
    }
  }
  SUBCASE("deterministic mode rejects") {
    Rng rng(0);
    CHECK_THROWS(sample_weights(plain(Mat::identity(2), {0, 0}), Vec{0, 0}, rng));
  }
}

TEST_CASE("spectral_report examples") {
  for (const auto& e : spectral_report(plain(Mat::identity(3), {0, 0, 0}))) {
    CHECK(e.modulus == doctest::Approx(1.0));
    CHECK(e.stability == Stability::kNeutral);
  }
  for (const auto& e : spectral_report(plain(scaled_identity(2, 0.5), {0, 0}))) {
    CHECK(e.modulus == doctest::Approx(0.5));
    CHECK(e.stability == Stability::kDecaying);
  }
  const auto rot = spectral_report(plain(rotation(0.3), {0, 0}));
  REQUIRE(rot.size() == 2);
  for (const auto& e : rot) {
    CHECK(e.modulus == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.stability == Stability::kNeutral);
    CHECK(std::abs(std::abs(e.eigenvalue.imag()) - std::sin(0.3)) < 1e-12);
  }
  CHECK(spectral_report(plain(scaled_identity(2, 1.01), {0, 0}))[0].stability ==
        Stability::kGrowing);
}

TEST_CASE("spectral moduli are invariant under similarity transforms") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t s = 2 + rng.below(5);
    Mat phi(s, s);
    for (auto& v : phi.data()) v = rng.normal() / std::sqrt(double(s));
    // Unit lower-triangular P is well conditioned and trivially invertible.
    Mat p = Mat::identity(s), pinv = Mat::identity(s);
    for (std::size_t i = 1; i < s; ++i)
      for (std::size_t j = 0; j < i; ++j) p(i, j) = 0.5 * rng.uniform(-1, 1);
    // Forward substitution for P^{-1}.
    for (std::size_t c = 0; c < s; ++c)
      for (std::size_t i = c + 1; i < s; ++i) {
        double acc = 0;
        for (std::size_t k = c; k < i; ++k) acc += p(i, k) * pinv(k, c);
        pinv(i, c) = -acc;
      }
    const Mat similar = matmul(matmul(p, phi), pinv);
    const auto a = spectral_report(plain(phi, Vec(s, 0.0)));
    const auto b = spectral_report(plain(similar, Vec(s, 0.0)));
    for (std::size_t i = 0; i < s; ++i) CHECK(std::abs(a[i].modulus - b[i].modulus) < 1e-8);
  }
}

TEST_CASE("parameter counts and layout") {
  Rng rng(0);
  const RecurrenceModel det = RecurrenceModel::initialize(Mode::kDeterministic, 2, 0, rng);
  CHECK(det.state_dim() == 2);
  CHECK(det.parameter_count() == 6);
  const RecurrenceModel sto = RecurrenceModel::initialize(Mode::kStochastic, 2, 2, rng);
  CHECK(sto.state_dim() == 6);
  CHECK(sto.parameter_count() == 42);
  CHECK(RecurrenceModel::state_dim_for(Mode::kStochastic, 3, 1) == 7);

  RecurrenceModel copy = sto;
  copy.assign_parameters(sto.flatten_parameters());
  CHECK(copy.phi == sto.phi);
  CHECK(copy.init_state == sto.init_state);
  CHECK(parse_mode(to_string(Mode::kStochastic)) == Mode::kStochastic);

  RecurrenceModel bad = sto;
  bad.phi = Mat::identity(5);
  CHECK_THROWS_AS(bad.validate(), DimensionError);
}
