#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "weightcaster/numkit.hpp"

namespace weightcaster {

// Per-column affine map x' = (x - shift) / scale.
struct Normalization {
  Vec shift;
  Vec scale;

  static Normalization identity(std::size_t dim);
  // Column mean and population standard deviation.
  static Normalization zscore(const Mat& data);

  std::size_t dim() const { return shift.size(); }

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

Mat normalize(const Mat& data, const Normalization& norm);
Mat denormalize(const Mat& data, const Normalization& norm);

nlohmann::json to_json(const Normalization& norm);
Normalization normalization_from_json(const nlohmann::json& j);

struct LabeledDataset {
  Mat x;
  Mat y;
  Normalization x_norm;
  Normalization y_norm;
  std::string provenance;

  std::size_t size() const { return x.rows(); }
};

// Train/test separation along one input coordinate. With `symmetric` the
// split value is |x_c|, otherwise x_c; training points sit at or below the
// threshold and test points strictly above it.
struct SplitRule {
  std::size_t coordinate = 0;
  double threshold = 0.0;
  bool symmetric = false;

  std::string describe() const;
  double value(std::span<const double> x) const;
};

nlohmann::json to_json(const SplitRule& rule);
SplitRule split_rule_from_json(const nlohmann::json& j);

struct OosSplit {
  LabeledDataset train;
  LabeledDataset test;
  SplitRule rule;
};

// Throws DataError unless the largest training split value is strictly below
// the smallest test split value.
void check_support_disjoint(const OosSplit& split);

struct CosineOptions {
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  double train_radius = 1.5;
  double test_radius = 3.0;
  double noise_std = 0.005;
};

// Noiseless target cos(10 x) + 0.5 x.
double cosine_function(double x);

// Training inputs uniform on [-r, r), test inputs split evenly between
// [-R, -r) and (r, R]. Targets on both sides carry N(0, noise_std^2) noise.
OosSplit gen_cosine(const CosineOptions& options, Rng& rng);

inline constexpr const char* kAirQualitySource =
    "UCI Machine Learning Repository, Air Quality (id 360), AirQualityUCI.csv";
inline constexpr const char* kAirQualityInputColumn = "PT08.S5(O3)";
inline constexpr const char* kAirQualityTargetColumn = "PT08.S3(NOx)";
inline constexpr double kAirQualityMissing = -200.0;

struct AirQualityStats {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

// Reads the semicolon-delimited, decimal-comma UCI file. Rows with a missing
// (-200) or unparsable value in either column are dropped; both columns are
// z-scored over the retained rows and normalized x > 1 goes to the test set.
OosSplit parse_airquality(std::istream& in, const std::string& source_name,
                          AirQualityStats* stats = nullptr);
OosSplit ingest_airquality(const std::filesystem::path& path, AirQualityStats* stats = nullptr);

// Parses a number that may use a decimal comma. Returns false on any
// trailing garbage or empty field.
bool parse_decimal(std::string_view field, double& out);

// Plain CSV, header x,y (or x0..,y0.. for multi-dimensional data).
void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data);
LabeledDataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace weightcaster
