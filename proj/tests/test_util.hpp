#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "apsynth/field.hpp"

namespace testutil {

inline std::filesystem::path data_dir() { return APSYNTH_TEST_DATA; }

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("apsynth_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline apsynth::RealGrid random_grid(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  apsynth::RealGrid g(w, h);
  for (double& v : g) v = u(rng);
  return g;
}

inline apsynth::ComplexField random_field(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  apsynth::ComplexField f(w, h);
  for (auto& z : f) z = {n(rng), n(rng)};
  return f;
}

}  // namespace testutil
