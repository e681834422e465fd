#include "lc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "lc/errors.hpp"

namespace lc {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off,
                   const std::filesystem::path& path) {
  if (b.size() < off + 4) {
    throw ParseError(ParseErrorKind::kTruncated, path.string() + ": truncated header");
  }
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    throw ParseError(ParseErrorKind::kBadMagic,
                     path.string() + ": bad magic number " + std::to_string(got) + ", expected " +
                         std::to_string(want));
  }
}

}  // namespace

Dataset Dataset::head(std::size_t n) const {
  if (n >= size()) return *this;
  if (n == 0) throw ArgumentError("Dataset::head: n must be >= 1");
  Dataset out;
  const std::size_t d = dim();
  out.inputs = Tensor(Shape{n, d},
                      std::vector<double>(inputs.storage().begin(),
                                          inputs.storage().begin() + static_cast<std::ptrdiff_t>(n * d)));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_all(images);
  const auto lab = read_all(labels);

  check_magic(be32(img, 0, images), kImagesMagic, images);
  const std::size_t n = be32(img, 4, images);
  const std::size_t rows = be32(img, 8, images);
  const std::size_t cols = be32(img, 12, images);
  check_magic(be32(lab, 0, labels), kLabelsMagic, labels);
  const std::size_t n_labels = be32(lab, 4, labels);

  const std::size_t d = rows * cols;
  if (img.size() < 16 + n * d) {
    throw ParseError(ParseErrorKind::kTruncated,
                     images.string() + ": expected " + std::to_string(n * d) + " pixel bytes, found " +
                         std::to_string(img.size() - 16));
  }
  if (lab.size() < 8 + n_labels) {
    throw ParseError(ParseErrorKind::kTruncated,
                     labels.string() + ": expected " + std::to_string(n_labels) +
                         " label bytes, found " + std::to_string(lab.size() - 8));
  }
  if (n != n_labels) {
    throw ParseError(ParseErrorKind::kCountMismatch,
                     "image count " + std::to_string(n) + " differs from label count " +
                         std::to_string(n_labels));
  }
  if (n == 0 || d == 0) throw ParseError(ParseErrorKind::kMalformed, images.string() + ": empty dataset");

  Dataset out;
  std::vector<double> pixels(n * d);
  for (std::size_t i = 0; i < n * d; ++i) pixels[i] = static_cast<double>(img[16 + i]) / 255.0;
  out.inputs = Tensor(Shape{n, d}, std::move(pixels));
  out.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(n));
  for (std::uint8_t l : out.labels) {
    if (l >= 10) {
      throw ParseError(ParseErrorKind::kMalformed,
                       labels.string() + ": label " + std::to_string(l) + " out of range");
    }
  }
  return out;
}

void save_mnist_idx(const Dataset& data, std::size_t rows, std::size_t cols,
                    const std::filesystem::path& images, const std::filesystem::path& labels) {
  if (rows * cols != data.dim()) throw ShapeError("save_mnist_idx: rows*cols != input dimension");
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img) throw IoError("cannot write " + images.string());
  if (!lab) throw IoError("cannot write " + labels.string());
  put_be32(img, kImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(data.size()));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  for (double v : data.inputs.values()) {
    const long b = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    img.put(static_cast<char>(b));
  }
  put_be32(lab, kLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (std::uint8_t l : data.labels) lab.put(static_cast<char>(l));
  if (!img || !lab) throw IoError("write failed for " + images.string());
}

MnistFiles mnist_files_in(const std::filesystem::path& dir) {
  return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
          dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
}

}  // namespace lc
