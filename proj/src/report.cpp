#include "weightcaster/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>

#include "weightcaster/error.hpp"

namespace weightcaster {

nlohmann::json to_json(const Metrics& m) {
  return {{"version", kMetricsVersion}, {"method", m.method},
          {"dataset", m.dataset},       {"mse_ind", m.mse_ind},
          {"mse_oos", m.mse_oos},       {"params_count", m.params_count},
          {"wallclock_s", m.wallclock_s}};
}

Metrics metrics_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kMetricsVersion)
      throw DataError("unsupported metrics version " + std::to_string(version));
    Metrics m;
    m.method = j.at("method").get<std::string>();
    m.dataset = j.at("dataset").get<std::string>();
    m.mse_ind = j.at("mse_ind").get<double>();
    m.mse_oos = j.at("mse_oos").get<double>();
    m.params_count = j.at("params_count").get<std::size_t>();
    m.wallclock_s = j.at("wallclock_s").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics: ") + e.what());
  }
}

void save_metrics(const std::filesystem::path& path, const Metrics& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics '" + path.string() + "'");
  out << to_json(m).dump(2) << '\n';
}

Metrics load_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics '" + path.string() + "'");
  try {
    return metrics_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("metrics '" + path.string() + "' is not valid JSON: " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

namespace {

struct Cell {
  std::optional<double> ind;
  std::optional<double> oos;
};

int method_rank(const std::string& method) {
  if (method == "MLP") return 0;
  if (method == "GP") return 1;
  if (method == kEngressionLiterature.method) return 2;
  if (method == "WeightCaster") return 3;
  return 4;
}

std::string fmt(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5g", *v);
  return buf;
}

}  // namespace

std::string render_report(std::span<const Metrics> metrics) {
  // method -> dataset -> cell
  std::map<std::string, std::map<std::string, Cell>> table;
  std::map<std::pair<std::string, std::string>, const Metrics*> seen;
  for (const auto& m : metrics) {
    if (m.dataset != "cosine" && m.dataset != "airquality")
      throw DataError("report: unknown dataset '" + m.dataset + "' for method " + m.method);
    if (m.method == kEngressionLiterature.method)
      throw DataError("report: Engression is reported from literature values only");
    const auto key = std::make_pair(m.method, m.dataset);
    if (auto it = seen.find(key); it != seen.end()) {
      if (it->second->mse_ind != m.mse_ind || it->second->mse_oos != m.mse_oos) {
        throw DataError("report: conflicting entries for " + m.method + " on " + m.dataset);
      }
      continue;
    }
    seen.emplace(key, &m);
    table[m.method][m.dataset] = {m.mse_ind, m.mse_oos};
  }
  const auto& lit = kEngressionLiterature;
  table[lit.method]["cosine"] = {lit.cosine_ind, lit.cosine_oos};
  table[lit.method]["airquality"] = {lit.airquality_ind, lit.airquality_oos};

  std::vector<std::string> order;
  for (const auto& [method, _] : table) order.push_back(method);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return method_rank(a) < method_rank(b);
  });

  std::string out =
      "| Method | Cosine InD | Cosine OoS | AirQuality InD | AirQuality OoS | Source |\n"
      "|---|---|---|---|---|---|\n";
  for (const auto& method : order) {
    const auto& row = table[method];
    auto cell = [&](const char* ds) {
      auto it = row.find(ds);
      return it == row.end() ? Cell{} : it->second;
    };
    const Cell c = cell("cosine");
    const Cell a = cell("airquality");
    out += "| " + method + " | " + fmt(c.ind) + " | " + fmt(c.oos) + " | " + fmt(a.ind) + " | " +
           fmt(a.oos) + " | " + (method == lit.method ? "literature" : "measured") + " |\n";
  }
  return out;
}

}  // namespace weightcaster
