#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "weightcaster/datasets.hpp"

namespace weightcaster {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

// A generated or ingested split on disk: train.csv, test.csv, meta.json.
struct DatasetFiles {
  std::string name;  // cosine | airquality
  OosSplit split;
};

void save_dataset_dir(const std::filesystem::path& dir, const std::string& name,
                      const OosSplit& split);
DatasetFiles load_dataset_dir(const std::filesystem::path& dir);

// Entry point of the `weightcaster` executable.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace weightcaster
