#include "lc/errors.hpp"
#include "lc/model.hpp"

namespace lc {

QuadraticModel::QuadraticModel(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw ArgumentError("QuadraticModel: no blocks");
  for (const Block& b : blocks_) {
    if (b.target.shape() != b.curvature.shape()) {
      throw ShapeError("QuadraticModel: curvature shape differs from target for '" + b.name + "'");
    }
    for (double a : b.curvature.values()) {
      if (!(a > 0.0)) throw ArgumentError("QuadraticModel: curvature must be positive");
    }
    params_.add(b.name, b.target);
  }
}

QuadraticModel::QuadraticModel(Tensor target, Tensor curvature)
    : QuadraticModel(std::vector<Block>{{"w", std::move(target), std::move(curvature)}}) {}

double QuadraticModel::loss_at(std::span<const Tensor> point) const {
  if (point.size() != blocks_.size()) throw ShapeError("QuadraticModel::loss_at: block count mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const Block& b = blocks_[k];
    if (point[k].size() != b.target.size()) throw ShapeError("QuadraticModel::loss_at: size mismatch");
    for (std::size_t i = 0; i < b.target.size(); ++i) {
      const double d = point[k][i] - b.target[i];
      total += 0.5 * b.curvature[i] * d * d;
    }
  }
  return total;
}

double QuadraticModel::loss(const Batch&) const {
  std::vector<Tensor> point;
  point.reserve(params_.size());
  for (const auto& p : params_) point.push_back(p.value);
  return loss_at(point);
}

double QuadraticModel::loss_and_gradient(const Batch& batch, std::vector<Tensor>& grads) const {
  grads.resize(blocks_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const Block& b = blocks_[k];
    const Tensor& w = params_[k].value;
    grads[k] = Tensor(w.shape());
    for (std::size_t i = 0; i < w.size(); ++i) grads[k][i] = b.curvature[i] * (w[i] - b.target[i]);
  }
  return loss(batch);
}

}  // namespace lc
