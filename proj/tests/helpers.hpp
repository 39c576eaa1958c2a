#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "weightcaster/numkit.hpp"
#include "weightcaster/recurrence.hpp"

namespace testing {

inline oracle::Grid to_grid(const weightcaster::Mat& m) {
  oracle::Grid g(m.rows(), oracle::Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

// phi with entries N(0, scale^2 / s) around `diag` on the diagonal.
inline weightcaster::RecurrenceModel random_model(weightcaster::Mode mode, std::size_t theta_dim,
                                                  std::size_t augment, weightcaster::Rng& rng,
                                                  double diag = 0.9, double scale = 0.3) {
  using namespace weightcaster;
  RecurrenceModel m;
  m.mode = mode;
  m.theta_dim = theta_dim;
  m.augment_dim = augment;
  const std::size_t s = RecurrenceModel::state_dim_for(mode, theta_dim, augment);
  m.phi = Mat(s, s);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j)
      m.phi(i, j) = (i == j ? diag : 0.0) + scale * rng.normal() / std::sqrt(double(s));
  m.init_state = sample_std_normal(rng, s);
  return m;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
