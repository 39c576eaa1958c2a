#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "weightcaster/trainer.hpp"

namespace weightcaster {

struct BaselineConfig {
  bool gp = true;
  bool mlp = true;
  std::vector<std::size_t> mlp_hidden = {64, 64};
  std::size_t mlp_iters = 5000;
  double mlp_learning_rate = 1e-3;
  std::size_t gp_max_rows = 3000;
  std::size_t gp_selection_rows = 500;

  friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

// Everything one experiment needs: the training configuration plus the
// dataset selector, paths and baseline settings. Serialized flat, with the
// training keys at top level next to "dataset", "data_dir", "output_dir",
// "threads" and a "baselines" object.
struct RunConfig {
  std::string dataset = "cosine";  // cosine | airquality
  std::string data_dir;
  std::string output_dir;
  BaselineConfig baselines;
  TrainConfig train;

  std::vector<std::string> validation_errors() const;
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const RunConfig& config);
// Applies the keys of `j` on top of `config`; unknown keys are rejected.
void merge_run_config(RunConfig& config, const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace weightcaster
