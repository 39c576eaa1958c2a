#include "weightcaster/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "weightcaster/error.hpp"
#include "csv_util.hpp"

namespace weightcaster {

Normalization Normalization::identity(std::size_t dim) {
  return {Vec(dim, 0.0), Vec(dim, 1.0)};
}

Normalization Normalization::zscore(const Mat& data) {
  const std::size_t n = data.rows();
  const std::size_t dim = data.cols();
  if (n == 0) throw DataError("zscore: empty data");
  Normalization norm{Vec(dim, 0.0), Vec(dim, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) norm.shift[j] += data(i, j);
  for (auto& s : norm.shift) s /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = data(i, j) - norm.shift[j];
      norm.scale[j] += d * d;
    }
  for (std::size_t j = 0; j < dim; ++j) {
    norm.scale[j] = std::sqrt(norm.scale[j] / static_cast<double>(n));
    if (!(norm.scale[j] > 0.0))
      throw DataError("zscore: column " + std::to_string(j) + " is constant");
  }
  return norm;
}

namespace {

void check_norm(const Mat& data, const Normalization& norm) {
  if (norm.shift.size() != data.cols() || norm.scale.size() != data.cols())
    throw DimensionError("normalization dimension does not match data");
  for (double s : norm.scale)
    if (s == 0.0 || !std::isfinite(s)) throw DataError("normalization scale must be finite and non-zero");
}

}  // namespace

Mat normalize(const Mat& data, const Normalization& norm) {
  check_norm(data, norm);
  Mat out = data;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = (out(i, j) - norm.shift[j]) / norm.scale[j];
  return out;
}

Mat denormalize(const Mat& data, const Normalization& norm) {
  check_norm(data, norm);
  Mat out = data;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = out(i, j) * norm.scale[j] + norm.shift[j];
  return out;
}

nlohmann::json to_json(const Normalization& norm) {
  return {{"shift", norm.shift}, {"scale", norm.scale}};
}

Normalization normalization_from_json(const nlohmann::json& j) {
  Normalization n{j.at("shift").get<Vec>(), j.at("scale").get<Vec>()};
  if (n.shift.size() != n.scale.size()) throw DataError("normalization: shift/scale length mismatch");
  return n;
}

std::string SplitRule::describe() const {
  std::ostringstream os;
  os.precision(17);
  const std::string var = "x[" + std::to_string(coordinate) + "]";
  const std::string v = symmetric ? "|" + var + "|" : var;
  os << "train: " << v << " <= " << threshold << ", test: " << v << " > " << threshold;
  return os.str();
}

double SplitRule::value(std::span<const double> x) const {
  if (coordinate >= x.size()) throw DimensionError("split rule coordinate out of range");
  return symmetric ? std::abs(x[coordinate]) : x[coordinate];
}

nlohmann::json to_json(const SplitRule& rule) {
  return {{"coordinate", rule.coordinate},
          {"threshold", rule.threshold},
          {"symmetric", rule.symmetric},
          {"description", rule.describe()}};
}

SplitRule split_rule_from_json(const nlohmann::json& j) {
  return {j.at("coordinate").get<std::size_t>(), j.at("threshold").get<double>(),
          j.at("symmetric").get<bool>()};
}

void check_support_disjoint(const OosSplit& split) {
  double train_max = -std::numeric_limits<double>::infinity();
  double test_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < split.train.size(); ++i)
    train_max = std::max(train_max, split.rule.value(split.train.x.row(i)));
  for (std::size_t i = 0; i < split.test.size(); ++i)
    test_min = std::min(test_min, split.rule.value(split.test.x.row(i)));
  if (!(train_max < test_min)) {
    std::ostringstream os;
    os.precision(17);
    os << "train and test supports overlap: max train split value " << train_max
       << " >= min test split value " << test_min;
    throw DataError(os.str());
  }
}

double cosine_function(double x) { return std::cos(10.0 * x) + 0.5 * x; }

OosSplit gen_cosine(const CosineOptions& options, Rng& rng) {
  if (options.n_train == 0 || options.n_test == 0)
    throw ConfigError("gen_cosine: sample counts must be at least 1");
  if (!(options.train_radius > 0.0) || !(options.test_radius > options.train_radius))
    throw ConfigError("gen_cosine: need 0 < train_radius < test_radius");

  const double r = options.train_radius;
  const double big = options.test_radius;
  OosSplit split;
  split.rule = {0, r, true};

  auto& train = split.train;
  train.x = Mat(options.n_train, 1);
  train.y = Mat(options.n_train, 1);
  for (std::size_t i = 0; i < options.n_train; ++i) {
    const double x = rng.uniform(-r, r);
    train.x(i, 0) = x;
    train.y(i, 0) = cosine_function(x) + options.noise_std * rng.normal();
  }

  auto& test = split.test;
  test.x = Mat(options.n_test, 1);
  test.y = Mat(options.n_test, 1);
  const std::size_t n_left = options.n_test / 2;
  for (std::size_t i = 0; i < options.n_test; ++i) {
    const double u = rng.uniform();
    // [-R, -r) on the left, (r, R] on the right.
    const double x = i < n_left ? -big + u * (big - r) : big - u * (big - r);
    test.x(i, 0) = x;
    test.y(i, 0) = cosine_function(x) + options.noise_std * rng.normal();
  }

  for (auto* d : {&train, &test}) {
    d->x_norm = Normalization::identity(1);
    d->y_norm = Normalization::identity(1);
  }
  train.provenance = "cosine train";
  test.provenance = "cosine test";
  check_support_disjoint(split);
  return split;
}

bool parse_decimal(std::string_view field, double& out) {
  std::string s(field);
  const auto first = s.find_first_not_of(" \t\r\"");
  const auto last = s.find_last_not_of(" \t\r\"");
  if (first == std::string::npos) return false;
  s = s.substr(first, last - first + 1);
  std::replace(s.begin(), s.end(), ',', '.');
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

namespace {

using detail::split_fields;
using detail::trim;

LabeledDataset subset(const Mat& x, const Mat& y, const std::vector<std::size_t>& idx) {
  LabeledDataset d;
  d.x = Mat(idx.size(), x.cols());
  d.y = Mat(idx.size(), y.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(x.row(idx[i]).begin(), x.row(idx[i]).end(), d.x.row(i).begin());
    std::copy(y.row(idx[i]).begin(), y.row(idx[i]).end(), d.y.row(i).begin());
  }
  return d;
}

}  // namespace

OosSplit parse_airquality(std::istream& in, const std::string& source_name,
                          AirQualityStats* stats) {
  std::string header;
  if (!std::getline(in, header)) throw DataError(source_name + ": empty file");
  const auto names = split_fields(header, ';');
  std::ptrdiff_t xcol = -1, ycol = -1;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string n = trim(names[i]);
    if (n == kAirQualityInputColumn) xcol = static_cast<std::ptrdiff_t>(i);
    if (n == kAirQualityTargetColumn) ycol = static_cast<std::ptrdiff_t>(i);
  }
  if (xcol < 0 || ycol < 0) {
    std::string missing;
    if (xcol < 0) missing += std::string(" '") + kAirQualityInputColumn + "'";
    if (ycol < 0) missing += std::string(" '") + kAirQualityTargetColumn + "'";
    throw DataError(source_name + ":1: missing required column(s)" + missing);
  }

  Vec xs, ys;
  AirQualityStats st;
  std::string line;
  while (std::getline(in, line)) {
    const bool blank = line.find_first_not_of(" ;\r\t") == std::string::npos;
    if (blank) continue;
    ++st.rows_read;
    const auto fields = split_fields(line, ';');
    double xv = 0.0, yv = 0.0;
    const auto need = static_cast<std::size_t>(std::max(xcol, ycol));
    const bool ok = fields.size() > need && parse_decimal(fields[xcol], xv) &&
                    parse_decimal(fields[ycol], yv) && xv != kAirQualityMissing &&
                    yv != kAirQualityMissing;
    if (!ok) {
      ++st.rows_dropped;
      continue;
    }
    xs.push_back(xv);
    ys.push_back(yv);
  }
  if (stats) *stats = st;
  if (xs.empty()) throw DataError(source_name + ": no rows retained after dropping missing values");

  const std::size_t n = xs.size();
  Mat x(n, 1, xs), y(n, 1, ys);
  const Normalization xn = Normalization::zscore(x);
  const Normalization yn = Normalization::zscore(y);
  const Mat xz = normalize(x, xn);
  const Mat yz = normalize(y, yn);

  OosSplit split;
  split.rule = {0, 1.0, false};
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < n; ++i) (xz(i, 0) > 1.0 ? test_idx : train_idx).push_back(i);
  split.train = subset(xz, yz, train_idx);
  split.test = subset(xz, yz, test_idx);
  const std::string prov = source_name + " (" + std::to_string(n) + " rows retained, " +
                           std::to_string(st.rows_dropped) + " dropped)";
  for (auto* d : {&split.train, &split.test}) {
    d->x_norm = xn;
    d->y_norm = yn;
    d->provenance = prov;
  }
  if (split.train.size() == 0) throw DataError(source_name + ": no training rows (all x > 1)");
  check_support_disjoint(split);
  return split;
}

OosSplit ingest_airquality(const std::filesystem::path& path, AirQualityStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open AirQuality file '" + path.string() + "'");
  return parse_airquality(in, path.string(), stats);
}

namespace {

std::vector<std::string> column_names(char prefix, std::size_t dim) {
  std::vector<std::string> out;
  if (dim == 1) return {std::string(1, prefix)};
  for (std::size_t i = 0; i < dim; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  std::string header;
  for (const auto& n : column_names('x', data.x.cols())) header += (header.empty() ? "" : ",") + n;
  for (const auto& n : column_names('y', data.y.cols())) header += "," + n;
  out << header << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::string row;
    for (std::size_t j = 0; j < data.x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.x(i, j));
      row += (j ? "," : "") + std::string(buf);
    }
    for (std::size_t j = 0; j < data.y.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.y(i, j));
      row += "," + std::string(buf);
    }
    out << row << '\n';
  }
  if (!out) throw DataError("error writing '" + path.string() + "'");
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto names = split_fields(line, ',');
  std::size_t dx = 0, dy = 0;
  for (const auto& raw : names) {
    const std::string n = trim(raw);
    if (!n.empty() && n[0] == 'x' && dy == 0) {
      ++dx;
    } else if (!n.empty() && n[0] == 'y') {
      ++dy;
    } else {
      throw DataError(path.string() + ":1: unexpected column '" + n + "'");
    }
  }
  if (dx == 0 || dy == 0) throw DataError(path.string() + ":1: need at least one x and one y column");

  Vec xs, ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, ',');
    if (fields.size() != dx + dy)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dx + dy) + " fields, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double v = 0.0;
      const std::string f = trim(fields[j]);
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + f + "'");
      (j < dx ? xs : ys).push_back(v);
    }
  }
  const std::size_t n = xs.size() / dx;
  if (n == 0) throw DataError(path.string() + ": no data rows");
  LabeledDataset d;
  d.x = Mat(n, dx, std::move(xs));
  d.y = Mat(n, dy, std::move(ys));
  d.x_norm = Normalization::identity(dx);
  d.y_norm = Normalization::identity(dy);
  d.provenance = path.string();
  return d;
}

}  // namespace weightcaster
