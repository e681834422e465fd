#include "lc/errors.hpp"
#include "lc/model.hpp"

namespace lc {

void ParameterStore::add(std::string name, Tensor value) {
  if (index_of(name)) throw ArgumentError("duplicate parameter name '" + name + "'");
  entries_.push_back({std::move(name), std::move(value)});
}

std::optional<std::size_t> ParameterStore::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  return std::nullopt;
}

Tensor& ParameterStore::at(std::string_view name) {
  const auto i = index_of(name);
  if (!i) throw ArgumentError("unknown parameter '" + std::string(name) + "'");
  return entries_[*i].value;
}

const Tensor& ParameterStore::at(std::string_view name) const {
  const auto i = index_of(name);
  if (!i) throw ArgumentError("unknown parameter '" + std::string(name) + "'");
  return entries_[*i].value;
}

std::size_t ParameterStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::vector<Tensor> LossModel::gradient(const Batch& batch) const {
  std::vector<Tensor> grads;
  loss_and_gradient(batch, grads);
  return grads;
}

}  // namespace lc
