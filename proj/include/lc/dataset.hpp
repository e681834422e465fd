#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lc/tensor.hpp"

namespace lc {

// N labelled examples; inputs are N x D with pixels scaled to [0, 1].
struct Dataset {
  Tensor inputs;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return inputs.cols(); }

  // First n examples (all of them when n >= size()).
  Dataset head(std::size_t n) const;
};

// Reads an MNIST-style pair of IDX files: images magic 0x00000803 with dims
// [N, rows, cols] of unsigned bytes, labels magic 0x00000801 with [N].
// All integers big-endian. Throws IoError for unreadable files and
// ParseError (kBadMagic, kTruncated, kCountMismatch) for malformed ones.
Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Writes the same layout; pixels are rounded from [0, 1] back to bytes.
void save_mnist_idx(const Dataset& data, std::size_t rows, std::size_t cols,
                    const std::filesystem::path& images, const std::filesystem::path& labels);

struct MnistFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};

// Standard file names ("train-images-idx3-ubyte", ...) inside `dir`.
MnistFiles mnist_files_in(const std::filesystem::path& dir);

}  // namespace lc
