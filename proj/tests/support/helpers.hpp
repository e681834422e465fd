#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lc/dataset.hpp"
#include "lc/random.hpp"
#include "lc/tensor.hpp"

namespace lc::testing {

inline std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.gaussian();
  return v;
}

inline Tensor gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& x : t.storage()) x = rng.gaussian();
  return t;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Small separable 10-class problem: class c lights up pixel block c.
inline Dataset toy_digits(std::size_t n, std::uint64_t seed, std::size_t side = 8) {
  Rng rng(seed);
  Dataset d;
  d.inputs = Tensor::matrix(n, side * side);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::uint8_t>(i % 10);
    d.labels[i] = c;
    for (std::size_t j = 0; j < side * side; ++j) {
      double v = 0.15 * rng.uniform();
      if (j % 10 == c) v += 0.6 + 0.3 * rng.uniform();
      d.inputs(i, j) = std::round(v * 255.0) / 255.0;
    }
  }
  return d;
}

// Writes train/test IDX files with the standard names into `dir`.
inline void write_toy_mnist(const std::filesystem::path& dir, std::size_t train, std::size_t test,
                            std::size_t side = 8) {
  const MnistFiles f = mnist_files_in(dir);
  save_mnist_idx(toy_digits(train, 1, side), side, side, f.train_images, f.train_labels);
  save_mnist_idx(toy_digits(test, 2, side), side, side, f.test_images, f.test_labels);
}

}  // namespace lc::testing
