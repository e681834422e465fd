#include "lc/forms.hpp"

#include <sstream>

#include "lc/errors.hpp"
#include "lc/overloaded.hpp"

namespace lc {

std::size_t decompressed_size(const CompressedForm& form) {
  return std::visit(
      Overloaded{
          [](const QuantizedForm& q) { return q.assignments.size(); },
          [](const SparseForm& s) { return s.length; },
          [](const LowRankForm& l) { return l.rows * l.cols; },
          [](const AdditiveForm& a) -> std::size_t {
            if (a.components.empty()) throw ArgumentError("additive form without components");
            return decompressed_size(a.components.front());
          },
      },
      form.value);
}

void decompress_into(const CompressedForm& form, std::span<double> out) {
  if (out.size() != decompressed_size(form)) {
    throw ShapeError("decompress_into: output length " + std::to_string(out.size()) +
                     " does not match form size " + std::to_string(decompressed_size(form)));
  }
  std::visit(
      Overloaded{
          [&](const QuantizedForm& q) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = q.codebook[q.assignments[i]];
          },
          [&](const SparseForm& s) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t k = 0; k < s.indices.size(); ++k) out[s.indices[k]] = s.values[k];
          },
          [&](const LowRankForm& l) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t i = 0; i < l.rows; ++i) {
              for (std::size_t j = 0; j < l.cols; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < l.rank; ++k) acc += l.u[i * l.rank + k] * l.v[j * l.rank + k];
                out[i * l.cols + j] = acc;
              }
            }
          },
          [&](const AdditiveForm& a) {
            std::fill(out.begin(), out.end(), 0.0);
            std::vector<double> part(out.size());
            for (const CompressedForm& c : a.components) {
              decompress_into(c, part);
              for (std::size_t i = 0; i < out.size(); ++i) out[i] += part[i];
            }
          },
      },
      form.value);
}

std::vector<double> decompress(const CompressedForm& form) {
  std::vector<double> out(decompressed_size(form));
  decompress_into(form, out);
  return out;
}

double distortion(std::span<const double> u, const CompressedForm& form) {
  return squared_distance(u, decompress(form));
}

std::string describe(const CompressedForm& form) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const QuantizedForm& q) {
                   os << "quantized K=" << q.codebook.size() << " P=" << q.assignments.size();
                 },
                 [&](const SparseForm& s) { os << "sparse nnz=" << s.nnz() << " P=" << s.length; },
                 [&](const LowRankForm& l) {
                   os << "low-rank r=" << l.rank << " " << l.rows << "x" << l.cols;
                 },
                 [&](const AdditiveForm& a) {
                   os << "additive[";
                   for (std::size_t i = 0; i < a.components.size(); ++i) {
                     if (i) os << " + ";
                     os << describe(a.components[i]);
                   }
                   os << "]";
                 },
             },
             form.value);
  return os.str();
}

}  // namespace lc
