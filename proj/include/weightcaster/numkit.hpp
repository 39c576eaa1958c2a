#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace weightcaster {

using Vec = std::vector<double>;

// Dense row-major matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, Vec data);

  static Mat identity(std::size_t n);
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  Mat transpose() const;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
double frobenius_norm(const Mat& a);
bool all_finite(std::span<const double> v);

Mat matmul(const Mat& a, const Mat& b);
Vec matvec(const Mat& a, std::span<const double> v);
// a^T v
Vec matvec_transposed(const Mat& a, std::span<const double> v);
Mat outer(std::span<const double> a, std::span<const double> b);

// Lower-triangular L with L L^T = a. Throws DecompositionError naming the
// zero-based pivot at which positivity fails.
Mat cholesky(const Mat& a);
// Solves L x = b.
Vec solve_lower(const Mat& l, std::span<const double> b);
// Solves L^T x = b.
Vec solve_lower_transposed(const Mat& l, std::span<const double> b);
// Solves (L L^T) x = b.
Vec cholesky_solve(const Mat& l, std::span<const double> b);
double log_det_from_cholesky(const Mat& l);
// (L L^T)^{-1}
Mat cholesky_inverse(const Mat& l);

// All eigenvalues of a square matrix of dimension <= 16, sorted by descending
// modulus. Hessenberg reduction followed by shifted QR; closed form for n <= 2.
std::vector<std::complex<double>> eigvals_small(const Mat& a);

// Counter-based generator: output i is a keyed hash of i, so a stream is fully
// described by (key, counter) and child streams never share mutable state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  // Independent stream derived from this stream's key and `stream_id`.
  Rng child(std::uint64_t stream_id) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer on [0, n).
  std::size_t below(std::size_t n);
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int /*tag*/)
      : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Vec sample_std_normal(Rng& rng, std::size_t n);

}  // namespace weightcaster
