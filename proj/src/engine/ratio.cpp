#include <cmath>
#include <limits>
#include <variant>

#include "lc/engine.hpp"
#include "lc/overloaded.hpp"

namespace lc {

namespace {

constexpr double kFloatBits = 32.0;

double index_bits(std::size_t n) {
  return n <= 1 ? 0.0 : std::ceil(std::log2(static_cast<double>(n)));
}

}  // namespace

double storage_bits(const CompressedForm& form) {
  return std::visit(
      Overloaded{
          [](const QuantizedForm& q) {
            return kFloatBits * static_cast<double>(q.codebook.size()) +
                   static_cast<double>(q.assignments.size()) * index_bits(q.codebook.size());
          },
          [](const SparseForm& s) {
            return static_cast<double>(s.nnz()) * (kFloatBits + index_bits(s.length));
          },
          [](const LowRankForm& l) {
            return kFloatBits * static_cast<double>(l.rank) * static_cast<double>(l.rows + l.cols);
          },
          [](const AdditiveForm& a) {
            double total = 0.0;
            for (const CompressedForm& c : a.components) total += storage_bits(c);
            return total;
          },
      },
      form.value);
}

RatioReport compression_ratio(const ParameterStore& params, const Plan& plan, const EngineState& state) {
  if (state.tasks.size() != plan.tasks.size()) throw ArgumentError("compression_ratio: state/plan mismatch");
  RatioReport r;
  std::size_t covered = 0;
  for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
    covered += plan.tasks[t].shape.size();
    r.covered_compressed_bits += storage_bits(state.tasks[t].theta);
  }
  const std::size_t total = params.total_elements();
  r.reference_bits = kFloatBits * static_cast<double>(total);
  r.covered_reference_bits = kFloatBits * static_cast<double>(covered);
  r.compressed_bits = r.covered_compressed_bits + kFloatBits * static_cast<double>(total - covered);
  auto ratio = [](double ref, double comp) {
    return comp > 0.0 ? ref / comp : std::numeric_limits<double>::infinity();
  };
  r.ratio = ratio(r.reference_bits, r.compressed_bits);
  r.covered_ratio = ratio(r.covered_reference_bits, r.covered_compressed_bits);
  return r;
}

std::vector<TaskSummary> summarize_tasks(const Plan& plan, const EngineState& state) {
  std::vector<TaskSummary> out;
  for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
    const ValidatedTask& vt = plan.tasks[t];
    TaskSummary s;
    for (std::size_t i = 0; i < vt.task.parameters.size(); ++i) {
      if (i) s.parameters += ",";
      s.parameters += vt.task.parameters[i];
    }
    s.view = vt.shape.is_matrix
                 ? "matrix(" + std::to_string(vt.shape.rows) + "x" + std::to_string(vt.shape.cols) + ")"
                 : "vector";
    s.scheme = vt.task.scheme->summary();
    if (t < state.tasks.size()) {
      s.form = describe(state.tasks[t].theta);
      s.storage_bits = storage_bits(state.tasks[t].theta);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace lc
