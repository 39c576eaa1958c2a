#include "weightcaster/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "weightcaster/error.hpp"

namespace weightcaster {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, Vec data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Mat: data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Mat m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("Mat::from_rows: ragged rows");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  // Four independent partial sums; the summation order is fixed.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double frobenius_norm(const Mat& a) { return norm(a.data()); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Vec matvec(const Mat& a, std::span<const double> v) {
  if (a.cols() != v.size()) throw DimensionError("matvec: dimension mismatch");
  Vec out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    const auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * v[j];
    out[i] = s;
  }
  return out;
}

Vec matvec_transposed(const Mat& a, std::span<const double> v) {
  if (a.rows() != v.size()) throw DimensionError("matvec_transposed: dimension mismatch");
  Vec out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j] * v[i];
  }
  return out;
}

Mat outer(std::span<const double> a, std::span<const double> b) {
  Mat m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

Mat cholesky(const Mat& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("cholesky: matrix is not square");
  const double scale = std::max(frobenius_norm(a), 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-10 * scale)
        throw DimensionError("cholesky: matrix is not symmetric");

  Mat l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto li = l.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const auto lj = l.row(j);
      const double s = a(i, j) - dot(li.first(j), lj.first(j));
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) {
          throw DecompositionError("cholesky: matrix is not positive-definite", i);
        }
        li[i] = std::sqrt(s);
      } else {
        li[j] = s / lj[j];
      }
    }
  }
  return l;
}

Vec solve_lower(const Mat& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw DimensionError("solve_lower: dimension mismatch");
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto li = l.row(i);
    x[i] = (b[i] - dot(li.first(i), std::span<const double>(x).first(i))) / li[i];
  }
  return x;
}

Vec solve_lower_transposed(const Mat& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw DimensionError("solve_lower_transposed: dimension mismatch");
  Vec x(b.begin(), b.end());
  for (std::size_t i = n; i-- > 0;) {
    x[i] /= l(i, i);
    const double xi = x[i];
    const auto li = l.row(i);
    for (std::size_t k = 0; k < i; ++k) x[k] -= li[k] * xi;
  }
  return x;
}

Vec cholesky_solve(const Mat& l, std::span<const double> b) {
  return solve_lower_transposed(l, solve_lower(l, b));
}

double log_det_from_cholesky(const Mat& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Mat cholesky_inverse(const Mat& l) {
  const std::size_t n = l.rows();
  Mat inv(n, n);
  Vec e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vec col = cholesky_solve(l, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

namespace {

using Complex = std::complex<double>;

std::vector<Complex> eig2(double a, double b, double c, double d) {
  const double half_tr = 0.5 * (a + d);
  const double det = a * d - b * c;
  const double disc = half_tr * half_tr - det;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    // Avoid cancellation: compute the larger root first, the other from det.
    const double big = half_tr + std::copysign(r, half_tr);
    const double small = big != 0.0 ? det / big : half_tr - std::copysign(r, half_tr);
    return {Complex(big, 0.0), Complex(small, 0.0)};
  }
  const double r = std::sqrt(-disc);
  return {Complex(half_tr, r), Complex(half_tr, -r)};
}

// Reduction to upper Hessenberg form by stabilized elementary similarity
// transforms. Indices are 1-based through the accessor.
void to_hessenberg(Mat& m) {
  const int n = static_cast<int>(m.rows());
  auto a = [&m](int i, int j) -> double& { return m(i - 1, j - 1); };
  for (int k = 2; k < n; ++k) {
    double x = 0.0;
    int piv = k;
    for (int j = k; j <= n; ++j) {
      if (std::abs(a(j, k - 1)) > std::abs(x)) {
        x = a(j, k - 1);
        piv = j;
      }
    }
    if (piv != k) {
      for (int j = k - 1; j <= n; ++j) std::swap(a(piv, j), a(k, j));
      for (int j = 1; j <= n; ++j) std::swap(a(j, piv), a(j, k));
    }
    if (x != 0.0) {
      for (int i = k + 1; i <= n; ++i) {
        double y = a(i, k - 1);
        if (y != 0.0) {
          y /= x;
          a(i, k - 1) = y;
          for (int j = k; j <= n; ++j) a(i, j) -= y * a(k, j);
          for (int j = 1; j <= n; ++j) a(j, k) += y * a(j, i);
        }
      }
    }
  }
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j < i - 1; ++j) a(i, j) = 0.0;
}

// Francis double-shift QR on an upper Hessenberg matrix.
std::vector<Complex> hessenberg_qr(Mat& m) {
  const int n = static_cast<int>(m.rows());
  auto a = [&m](int i, int j) -> double& { return m(i - 1, j - 1); };
  std::vector<double> wr(n + 1, 0.0), wi(n + 1, 0.0);

  double anorm = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a(i, j));

  int nn = n;
  double t = 0.0;
  double p = 0.0, q = 0.0, r = 0.0, s = 0.0, w = 0.0, x = 0.0, y = 0.0, z = 0.0;
  while (nn >= 1) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l >= 2; --l) {
        s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) + s == s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      x = a(nn, nn);
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn--] = 0.0;
      } else {
        y = a(nn - 1, nn - 1);
        w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          p = 0.5 * (y - x);
          q = p * p + w;
          z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + std::copysign(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn - 1] = -(wi[nn] = z);
          }
          nn -= 2;
        } else {
          if (its == 60) throw NumericalError("eigvals_small: QR iteration did not converge");
          if (its == 10 || its == 20 || its == 40) {
            // Exceptional shift.
            t += x;
            for (int i = 1; i <= nn; ++i) a(i, i) -= x;
            s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int mm = nn - 2;
          for (; mm >= l; --mm) {
            z = a(mm, mm);
            r = x - z;
            s = y - z;
            p = (r * s - w) / a(mm + 1, mm) + a(mm, mm + 1);
            q = a(mm + 1, mm + 1) - z - r - s;
            r = a(mm + 2, mm + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (mm == l) break;
            const double u = std::abs(a(mm, mm - 1)) * (std::abs(q) + std::abs(r));
            const double v =
                std::abs(p) * (std::abs(a(mm - 1, mm - 1)) + std::abs(z) + std::abs(a(mm + 1, mm + 1)));
            if (u + v == v) break;
          }
          for (int i = mm + 2; i <= nn; ++i) {
            a(i, i - 2) = 0.0;
            if (i != mm + 2) a(i, i - 3) = 0.0;
          }
          for (int k = mm; k <= nn - 1; ++k) {
            if (k != mm) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k != nn - 1) r = a(k + 2, k - 1);
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            if ((s = std::copysign(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
              if (k == mm) {
                if (l != mm) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k != nn - 1) {
                  p += r * a(k + 2, j);
                  a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k != nn - 1) {
                  p += z * a(i, k + 2);
                  a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }

  std::vector<Complex> out;
  out.reserve(n);
  for (int i = 1; i <= n; ++i) out.emplace_back(wr[i], wi[i]);
  return out;
}

}  // namespace

std::vector<std::complex<double>> eigvals_small(const Mat& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("eigvals_small: matrix is not square");
  if (n > 16) {
    throw DimensionError("eigvals_small: unsupported size " + std::to_string(n) +
                         " (maximum 16)");
  }
  if (!all_finite(a.data())) throw NumericalError("eigvals_small: non-finite entry");

  std::vector<Complex> values;
  if (n == 0) return values;
  if (n == 1) {
    values.emplace_back(a(0, 0), 0.0);
  } else if (n == 2) {
    values = eig2(a(0, 0), a(0, 1), a(1, 0), a(1, 1));
  } else {
    Mat h = a;
    to_hessenberg(h);
    values = hessenberg_qr(h);
  }
  std::stable_sort(values.begin(), values.end(), [](const Complex& l, const Complex& r) {
    const double ml = std::abs(l), mr = std::abs(r);
    if (ml != mr) return ml > mr;
    return l.imag() > r.imag();
  });
  return values;
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

Rng Rng::child(std::uint64_t stream_id) const {
  return Rng(mix64(key_ ^ mix64(stream_id * kGolden + 0x632BE59BD9B4E019ULL)), 0, 0);
}

std::uint64_t Rng::next_u64() {
  // Keyed SplitMix64: output depends only on (key, counter).
  const std::uint64_t x = mix64(key_ + (++counter_) * kGolden);
  return mix64(x ^ key_);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw DimensionError("Rng::below: empty range");
  // Lemire's multiply-shift with rejection; unbiased.
  const std::uint64_t bound = n;
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0, 1] keeps the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Vec sample_std_normal(Rng& rng, std::size_t n) {
  Vec out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

}  // namespace weightcaster
