#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <spdlog/spdlog.h>
#include <unistd.h>

#include "pcmp/matrix.hpp"
#include "pcmp/model.hpp"
#include "pcmp/outfit_data.hpp"

namespace fixtures {

// Training logs drown the test output; keep warnings and errors only.
inline const bool kQuietLogs = (spdlog::set_level(spdlog::level::warn), true);

inline pcmp::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  pcmp::Matrix m(rows, cols);
  for (double& v : m.values()) v = g(rng);
  return m;
}

/// Randomised parameters with non-trivial standardisation.
inline pcmp::ModelParams random_model(const pcmp::ModelConfig& cfg, std::uint64_t seed) {
  auto p = pcmp::make_model(cfg, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : p.feature_shift) v = u(rng);
  for (auto& v : p.feature_scale) v = 0.5 + 0.5 * (u(rng) + 1.0);
  for (auto& v : p.head.b) v = u(rng);
  return p;
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pcmp_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline pcmp::Dataset tiny_dataset(std::size_t n_items, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  pcmp::Dataset d;
  for (std::size_t i = 0; i < n_items; ++i) {
    std::vector<double> f(dim);
    for (double& v : f) v = g(rng);
    d.items.add({"i" + std::to_string(i), f});
  }
  return d;
}

}  // namespace fixtures
