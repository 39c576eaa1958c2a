#include "weightcaster/run_config.hpp"

#include <fstream>

#include "weightcaster/error.hpp"

namespace weightcaster {

namespace {

template <typename T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void merge_baselines(BaselineConfig& b, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("'baselines' must be an object");
  std::string unknown;
  for (const auto& [key, v] : j.items()) {
    const std::string k = "baselines." + key;
    if (key == "gp") {
      b.gp = get_as<bool>(v, k);
    } else if (key == "mlp") {
      b.mlp = get_as<bool>(v, k);
    } else if (key == "mlp_hidden") {
      b.mlp_hidden = get_as<std::vector<std::size_t>>(v, k);
    } else if (key == "mlp_iters") {
      b.mlp_iters = get_as<std::size_t>(v, k);
    } else if (key == "mlp_learning_rate") {
      b.mlp_learning_rate = get_as<double>(v, k);
    } else if (key == "gp_max_rows") {
      b.gp_max_rows = get_as<std::size_t>(v, k);
    } else if (key == "gp_selection_rows") {
      b.gp_selection_rows = get_as<std::size_t>(v, k);
    } else {
      unknown += (unknown.empty() ? "" : ", ") + k;
    }
  }
  if (!unknown.empty()) throw ConfigError("unknown config key(s): " + unknown);
}

}  // namespace

std::vector<std::string> RunConfig::validation_errors() const {
  std::vector<std::string> errs;
  if (dataset != "cosine" && dataset != "airquality")
    errs.push_back("dataset must be \"cosine\" or \"airquality\", got \"" + dataset + "\"");
  if (baselines.mlp_hidden.empty()) errs.push_back("baselines.mlp_hidden must not be empty");
  for (std::size_t w : baselines.mlp_hidden)
    if (w == 0) errs.push_back("baselines.mlp_hidden widths must be >= 1");
  if (baselines.mlp_iters == 0) errs.push_back("baselines.mlp_iters must be >= 1");
  if (!(baselines.mlp_learning_rate > 0.0))
    errs.push_back("baselines.mlp_learning_rate must be > 0");
  if (baselines.gp_max_rows == 0 || baselines.gp_max_rows > 5000)
    errs.push_back("baselines.gp_max_rows must be in [1, 5000]");
  for (auto& e : train.validation_errors()) errs.push_back(std::move(e));
  return errs;
}

void RunConfig::validate() const {
  const auto errs = validation_errors();
  if (errs.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& e : errs) msg += "\n  - " + e;
  throw ConfigError(msg);
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = to_json(c.train);
  j["dataset"] = c.dataset;
  j["data_dir"] = c.data_dir;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.train.threads;
  j["baselines"] = {{"gp", c.baselines.gp},
                    {"mlp", c.baselines.mlp},
                    {"mlp_hidden", c.baselines.mlp_hidden},
                    {"mlp_iters", c.baselines.mlp_iters},
                    {"mlp_learning_rate", c.baselines.mlp_learning_rate},
                    {"gp_max_rows", c.baselines.gp_max_rows},
                    {"gp_selection_rows", c.baselines.gp_selection_rows}};
  return j;
}

void merge_run_config(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  nlohmann::json train_part = nlohmann::json::object();
  std::string unknown;
  for (const auto& [key, v] : j.items()) {
    if (key == "dataset") {
      c.dataset = get_as<std::string>(v, key);
    } else if (key == "data_dir") {
      c.data_dir = get_as<std::string>(v, key);
    } else if (key == "output_dir") {
      c.output_dir = get_as<std::string>(v, key);
    } else if (key == "threads") {
      c.train.threads = get_as<std::size_t>(v, key);
    } else if (key == "baselines") {
      merge_baselines(c.baselines, v);
    } else if (is_train_config_key(key)) {
      train_part[key] = v;
    } else {
      unknown += (unknown.empty() ? "" : ", ") + key;
    }
  }
  if (!unknown.empty()) throw ConfigError("unknown config key(s): " + unknown);
  merge_train_config(c.train, train_part);
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  merge_run_config(c, j);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace weightcaster
