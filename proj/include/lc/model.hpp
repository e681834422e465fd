#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lc/dataset.hpp"
#include "lc/tensor.hpp"

namespace lc {

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Ordered, named weights of a model. Names are unique.
class ParameterStore {
 public:
  void add(std::string name, Tensor value);

  std::size_t size() const { return entries_.size(); }
  NamedTensor& operator[](std::size_t i) { return entries_[i]; }
  const NamedTensor& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  std::size_t total_elements() const;

 private:
  std::vector<NamedTensor> entries_;
};

// A slice of a dataset handed to loss/gradient evaluation. Models without
// data (the quadratic toy) ignore it.
struct Batch {
  const Dataset* data = nullptr;
  std::span<const std::size_t> rows;
};

// Differentiable model: weights plus loss L(w) and its gradient.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual ParameterStore& parameters() = 0;
  virtual const ParameterStore& parameters() const = 0;

  virtual double loss(const Batch& batch) const = 0;
  // Writes dL/dw into `grads` (resized to match parameters()) and returns L.
  virtual double loss_and_gradient(const Batch& batch, std::vector<Tensor>& grads) const = 0;
  // Classification error in [0, 1]. Models without labels return their loss.
  virtual double error_rate(const Dataset& data) const = 0;
  virtual std::unique_ptr<LossModel> clone() const = 0;

  std::vector<Tensor> gradient(const Batch& batch) const;
};

enum class Activation { kTanh, kRelu };

std::string to_string(Activation a);
Activation parse_activation(std::string_view s);

// Fully connected network with softmax cross-entropy output. Layer l has
// weight "l<l>.weight" of shape [out, in] and bias "l<l>.bias" of shape [out].
// Evaluation is single-threaded and therefore bit-reproducible.
class MlpModel final : public LossModel {
 public:
  static constexpr std::size_t kNumClasses = 10;

  // Weights ~ N(0, 1/fan_in), biases zero.
  MlpModel(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed);
  static MlpModel lenet300(Activation activation, std::uint64_t seed) {
    return MlpModel({784, 300, 100, 10}, activation, seed);
  }

  ParameterStore& parameters() override { return params_; }
  const ParameterStore& parameters() const override { return params_; }

  double loss(const Batch& batch) const override;
  double loss_and_gradient(const Batch& batch, std::vector<Tensor>& grads) const override;
  double error_rate(const Dataset& data) const override;
  std::unique_ptr<LossModel> clone() const override { return std::make_unique<MlpModel>(*this); }

  // Class probabilities, one row per input row.
  Tensor forward(const Tensor& inputs) const;

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }

 private:
  std::vector<std::size_t> sizes_;
  Activation activation_;
  ParameterStore params_;
};

// L(w) = ½ Σ_i a_i (w_i - w̄_i)² over one or more named blocks.
class QuadraticModel final : public LossModel {
 public:
  struct Block {
    std::string name;
    Tensor target;     // w̄
    Tensor curvature;  // a > 0, same shape as target
  };

  explicit QuadraticModel(std::vector<Block> blocks);
  // Single block "w".
  QuadraticModel(Tensor target, Tensor curvature);

  ParameterStore& parameters() override { return params_; }
  const ParameterStore& parameters() const override { return params_; }

  double loss(const Batch& batch) const override;
  double loss_and_gradient(const Batch& batch, std::vector<Tensor>& grads) const override;
  double error_rate(const Dataset&) const override { return loss({}); }
  std::unique_ptr<LossModel> clone() const override {
    return std::make_unique<QuadraticModel>(*this);
  }

  // L evaluated at an arbitrary point laid out like parameters().
  double loss_at(std::span<const Tensor> point) const;

  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  std::vector<Block> blocks_;
  ParameterStore params_;
};

}  // namespace lc
