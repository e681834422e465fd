#include <algorithm>
#include <set>

#include "lc/engine.hpp"

namespace lc {

std::string to_string(ValidationCode code) {
  switch (code) {
    case ValidationCode::kNoTasks: return "no_tasks";
    case ValidationCode::kEmptyGroup: return "empty_group";
    case ValidationCode::kUnknownParameter: return "unknown_parameter";
    case ValidationCode::kDuplicateInGroup: return "duplicate_in_group";
    case ValidationCode::kOverlappingGroups: return "overlapping_groups";
    case ValidationCode::kMatrixViewMultiTensor: return "matrix_view_multi_tensor";
    case ValidationCode::kMatrixViewShape: return "matrix_view_shape";
    case ValidationCode::kMissingScheme: return "missing_scheme";
    case ValidationCode::kSchemeParameter: return "scheme_parameter";
  }
  return "unknown";
}

Plan validate_tasks(const ParameterStore& params, const std::vector<CompressionTask>& tasks) {
  if (tasks.empty()) throw ValidationError(ValidationCode::kNoTasks, 0, "no compression tasks given");
  Plan plan;
  std::vector<int> owner(params.size(), -1);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const CompressionTask& task = tasks[t];
    if (task.parameters.empty()) {
      throw ValidationError(ValidationCode::kEmptyGroup, t, "parameter group is empty");
    }
    if (!task.scheme) throw ValidationError(ValidationCode::kMissingScheme, t, "no compression scheme");

    ValidatedTask v;
    v.task = task;
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const std::string& name : task.parameters) {
      if (!seen.insert(name).second) {
        throw ValidationError(ValidationCode::kDuplicateInGroup, t, "'" + name + "' listed twice");
      }
      const auto idx = params.index_of(name);
      if (!idx) throw ValidationError(ValidationCode::kUnknownParameter, t, "no parameter named '" + name + "'");
      if (owner[*idx] >= 0) {
        throw ValidationError(ValidationCode::kOverlappingGroups, t,
                              "'" + name + "' is already compressed by task " + std::to_string(owner[*idx]));
      }
      owner[*idx] = static_cast<int>(t);
      v.indices.push_back(*idx);
      total += params[*idx].value.size();
    }

    if (task.view.matrix) {
      if (v.indices.size() != 1) {
        throw ValidationError(ValidationCode::kMatrixViewMultiTensor, t,
                              "a matrix view needs exactly one tensor, got " +
                                  std::to_string(v.indices.size()));
      }
      if (task.view.rows == 0 || task.view.cols == 0 || task.view.rows * task.view.cols != total) {
        throw ValidationError(ValidationCode::kMatrixViewShape, t,
                              "matrix view " + std::to_string(task.view.rows) + "x" +
                                  std::to_string(task.view.cols) + " does not hold " +
                                  std::to_string(total) + " elements");
      }
      v.shape = ViewShape::matrix(task.view.rows, task.view.cols);
    } else {
      v.shape = ViewShape::vector(total);
    }

    try {
      task.scheme->validate(v.shape);
    } catch (const ArgumentError& e) {
      throw ValidationError(ValidationCode::kSchemeParameter, t, e.what());
    }
    plan.tasks.push_back(std::move(v));
  }
  return plan;
}

std::vector<double> gather(const ParameterStore& params, const ValidatedTask& task) {
  std::vector<double> out;
  out.reserve(task.shape.size());
  for (std::size_t idx : task.indices) {
    const auto v = params[idx].value.values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void scatter(ParameterStore& params, const ValidatedTask& task, std::span<const double> values) {
  if (values.size() != task.shape.size()) {
    throw ShapeError("scatter: got " + std::to_string(values.size()) + " values for a view of " +
                     std::to_string(task.shape.size()));
  }
  std::size_t offset = 0;
  for (std::size_t idx : task.indices) {
    auto dst = params[idx].value.values();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
    offset += dst.size();
  }
}

}  // namespace lc
