#pragma once

#include <string>

#include "weightcaster/datasets.hpp"
#include "weightcaster/inference.hpp"

namespace weightcaster {

struct PlotOptions {
  std::string title;
  int width = 800;
  int height = 480;
};

// Standalone SVG: training and test scatter, prediction curve sorted by x,
// and a mean +/- 2 sd band when the table has variances. One input
// dimension only; throws ConfigError otherwise. Output depends only on the
// arguments.
std::string render_svg(const LabeledDataset& train, const LabeledDataset& test,
                       const PredictionTable& predictions, const PlotOptions& options = {});

}  // namespace weightcaster
