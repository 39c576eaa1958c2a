#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

namespace weightcaster {

inline constexpr int kMetricsVersion = 1;

struct Metrics {
  std::string method;   // WeightCaster | GP | MLP
  std::string dataset;  // cosine | airquality
  double mse_ind = 0.0;
  double mse_oos = 0.0;
  std::size_t params_count = 0;
  double wallclock_s = 0.0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

nlohmann::json to_json(const Metrics& m);
Metrics metrics_from_json(const nlohmann::json& j);
void save_metrics(const std::filesystem::path& path, const Metrics& m);
Metrics load_metrics(const std::filesystem::path& path);

// Reference numbers for Engression, which is not run here.
struct LiteratureRow {
  const char* method;
  double cosine_ind;
  double cosine_oos;
  double airquality_ind;
  double airquality_oos;
};

inline constexpr LiteratureRow kEngressionLiterature{"Engression", 0.50802, 1.3240, 0.3240,
                                                     0.1603};

// Markdown table with one row per method (MLP, GP, Engression, WeightCaster,
// then any others alphabetically) and columns Cosine InD/OoS, AirQuality
// InD/OoS. Engression is always present and flagged as a literature value.
// Throws DataError when two entries for one (method, dataset) disagree.
std::string render_report(std::span<const Metrics> metrics);

}  // namespace weightcaster
