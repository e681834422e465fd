#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lc/tensor.hpp"

namespace lc {

// Codebook quantization: value[i] = codebook[assignments[i]].
// The codebook is strictly increasing.
struct QuantizedForm {
  std::vector<double> codebook;
  std::vector<std::uint32_t> assignments;

  bool operator==(const QuantizedForm&) const = default;
};

// Sparse vector of length `length`; indices strictly increasing.
struct SparseForm {
  std::size_t length = 0;
  std::vector<std::size_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  bool operator==(const SparseForm&) const = default;
};

// W ~= U V^T with U (m x r) and V (n x r). r may be 0, in which case the
// factors are absent and the decompression is the zero m x n matrix.
struct LowRankForm {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;
  std::vector<double> u;  // row-major m x r
  std::vector<double> v;  // row-major n x r

  bool operator==(const LowRankForm&) const = default;
};

struct CompressedForm;

// Sum of component decompressions, all over the same viewed shape.
struct AdditiveForm {
  std::vector<CompressedForm> components;

  bool operator==(const AdditiveForm&) const;
};

struct CompressedForm {
  std::variant<QuantizedForm, SparseForm, LowRankForm, AdditiveForm> value;

  CompressedForm() = default;
  CompressedForm(QuantizedForm f) : value(std::move(f)) {}
  CompressedForm(SparseForm f) : value(std::move(f)) {}
  CompressedForm(LowRankForm f) : value(std::move(f)) {}
  CompressedForm(AdditiveForm f) : value(std::move(f)) {}

  bool operator==(const CompressedForm&) const = default;
};

inline bool AdditiveForm::operator==(const AdditiveForm& o) const {
  return components == o.components;
}

// Number of elements the form decompresses into.
std::size_t decompressed_size(const CompressedForm& form);

// Δ(Θ), flattened row-major.
std::vector<double> decompress(const CompressedForm& form);
void decompress_into(const CompressedForm& form, std::span<double> out);

// ||u - Δ(Θ)||², recomputed from scratch.
double distortion(std::span<const double> u, const CompressedForm& form);

// Short human-readable description, e.g. "quantized K=2 P=1000".
std::string describe(const CompressedForm& form);

// A solver's answer: the form together with its exact distortion.
struct CStepResult {
  CompressedForm form;
  double distortion = 0.0;
};

}  // namespace lc
