#include <doctest.h>

#include <cmath>
#include <complex>

#include "helpers.hpp"
#include "weightcaster/error.hpp"
#include "weightcaster/numkit.hpp"

using namespace weightcaster;

namespace {

using cplx = std::complex<double>;

// det(a - lambda I) by complex Gaussian elimination.
cplx char_poly_at(const Mat& a, cplx lambda) {
  const std::size_t n = a.rows();
  std::vector<std::vector<cplx>> m(n, std::vector<cplx>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] = a(i, j) - (i == j ? lambda : 0.0);
  cplx det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (std::abs(m[piv][c]) == 0.0) return 0.0;
    if (piv != c) {
      std::swap(m[piv], m[c]);
      det = -det;
    }
    det *= m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const cplx f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return det;
}

Mat random_spd(std::size_t n, Rng& rng) {
  Mat b(n, n);
  for (auto& v : b.data()) v = rng.normal();
  Mat a = matmul(b.transpose(), b);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
  return a;
}

double rel_frobenius(const Mat& a, const Mat& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    d += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
  return std::sqrt(d) / frobenius_norm(b);
}

}  // namespace

TEST_CASE("cholesky of the identity is the identity") {
  CHECK(cholesky(Mat::identity(3)) == Mat::identity(3));
}

TEST_CASE("cholesky of a 2x2 hand example") {
  const Mat l = cholesky(Mat::from_rows({{4, 2}, {2, 3}}));
  CHECK(l(0, 0) == doctest::Approx(2.0));
  CHECK(l(0, 1) == 0.0);
  CHECK(l(1, 0) == doctest::Approx(1.0));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("cholesky names the failing pivot of an indefinite matrix") {
  try {
    cholesky(Mat::from_rows({{1, 2}, {2, 1}}));
    FAIL("expected DecompositionError");
  } catch (const DecompositionError& e) {
    CHECK(e.pivot() == 1);
  }
}

TEST_CASE("cholesky rejects asymmetric and non-square input") {
  CHECK_THROWS_AS(cholesky(Mat::from_rows({{1, 0.5}, {0, 1}})), DimensionError);
  CHECK_THROWS_AS(cholesky(Mat(2, 3)), DimensionError);
}

TEST_CASE("cholesky recomposes random SPD matrices") {
  Rng rng(5);
  for (std::size_t n : {1, 2, 5, 12, 40}) {
    const Mat a = random_spd(n, rng);
    const Mat l = cholesky(a);
    CHECK(rel_frobenius(matmul(l, l.transpose()), a) < 1e-9);
  }
}

TEST_CASE("cholesky solves and log-determinant") {
  Rng rng(9);
  const Mat a = random_spd(6, rng);
  const Mat l = cholesky(a);
  const Vec b = sample_std_normal(rng, 6);
  const Vec x = cholesky_solve(l, b);
  const Vec back = matvec(a, x);
  for (std::size_t i = 0; i < 6; ++i) CHECK(back[i] == doctest::Approx(b[i]).epsilon(1e-10));
  CHECK(log_det_from_cholesky(l) ==
        doctest::Approx(std::log(oracle::determinant(testing::to_grid(a)))).epsilon(1e-10));
  const Mat inv = cholesky_inverse(l);
  CHECK(rel_frobenius(matmul(a, inv), Mat::identity(6)) < 1e-10);
}

TEST_CASE("eigvals_small examples") {
  SUBCASE("diagonal") {
    const auto ev = eigvals_small(Mat::from_rows({{3, 0}, {0, 1}}));
    CHECK(ev[0] == cplx(3, 0));
    CHECK(ev[1] == cplx(1, 0));
  }
  SUBCASE("rotation") {
    const auto ev = eigvals_small(Mat::from_rows({{0, -1}, {1, 0}}));
    CHECK(ev[0].real() == doctest::Approx(0.0));
    CHECK(ev[0].imag() == doctest::Approx(1.0));
    CHECK(ev[1].imag() == doctest::Approx(-1.0));
  }
  SUBCASE("defective repeated eigenvalue") {
    const auto ev = eigvals_small(Mat::from_rows({{2, 1}, {0, 2}}));
    CHECK(std::abs(ev[0] - cplx(2, 0)) < 1e-12);
    CHECK(std::abs(ev[1] - cplx(2, 0)) < 1e-12);
  }
  SUBCASE("too large") { CHECK_THROWS_AS(eigvals_small(Mat(17, 17)), DimensionError); }
}

TEST_CASE("eigvals_small: characteristic polynomial, trace and ordering on random matrices") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(16);
    Mat a(n, n);
    for (auto& v : a.data()) v = rng.normal();
    const auto ev = eigvals_small(a);
    REQUIRE(ev.size() == n);
    cplx sum = 0.0;
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
    const double fro = frobenius_norm(a);
    for (std::size_t i = 0; i < n; ++i) {
      sum += ev[i];
      if (i > 0) CHECK(std::abs(ev[i - 1]) >= std::abs(ev[i]) - 1e-12);
      CHECK(std::abs(char_poly_at(a, ev[i])) <
            1e-8 * std::max(1.0, std::pow(fro, static_cast<double>(n))));
    }
    CHECK(std::abs(sum.real() - trace) <= 1e-8 * std::max(1.0, std::abs(trace)) + 1e-10 * fro);
    CHECK(std::abs(sum.imag()) < 1e-8 * std::max(1.0, fro));
    if (n == 2) {
      const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
      CHECK(std::abs((ev[0] * ev[1]).real() - det) < 1e-10 * std::max(1.0, std::abs(det)));
    }
  }
}

TEST_CASE("sample_std_normal moments and reproducibility") {
  Rng a(42);
  const Vec v = sample_std_normal(a, 100000);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size() - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(var > 0.98);
  CHECK(var < 1.02);

  Rng b(42);
  CHECK(sample_std_normal(b, 100000) == v);

  Rng s1(1), s2(2);
  const Vec x1 = sample_std_normal(s1, 10000), x2 = sample_std_normal(s2, 10000);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < x1.size(); ++i) differ += x1[i] != x2[i];
  CHECK(differ >= 9900);
}

TEST_CASE("Rng child streams are deterministic and distinct") {
  const Rng root(7);
  Rng c1 = root.child(3), c1b = root.child(3), c2 = root.child(4);
  CHECK(c1.next_u64() == c1b.next_u64());
  CHECK(c1.next_u64() != c2.next_u64());
  Rng r(0);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(r.below(7) < 7);
  }
}

TEST_CASE("matrix helpers") {
  const Mat a = Mat::from_rows({{1, 2}, {3, 4}});
  CHECK(matvec(a, Vec{1, 1}) == Vec{3, 7});
  CHECK(matvec_transposed(a, Vec{1, 1}) == Vec{4, 6});
  CHECK(matmul(a, Mat::identity(2)) == a);
  CHECK(outer(Vec{1, 2}, Vec{3}) == Mat::from_rows({{3}, {6}}));
  CHECK(dot(Vec{1, 2, 3, 4, 5}, Vec{1, 1, 1, 1, 1}) == 15.0);
  CHECK_THROWS_AS(matmul(a, Mat(3, 1)), DimensionError);
  CHECK(all_finite(Vec{1, 2}));
  CHECK_FALSE(all_finite(Vec{1, NAN}));
}
