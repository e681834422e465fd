#include <cmath>
#include <numeric>

#include <Eigen/Core>

#include "lc/errors.hpp"
#include "lc/model.hpp"
#include "lc/random.hpp"

namespace lc {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const Mat>;
using MutMap = Eigen::Map<Mat>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;

ConstMap as_mat(const Tensor& t) { return ConstMap(t.data(), t.rows(), t.cols()); }

Mat gather_rows(const Dataset& data, std::span<const std::size_t> rows) {
  const std::size_t d = data.dim();
  Mat x(rows.size(), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* src = data.inputs.data() + rows[r] * d;
    std::copy(src, src + d, x.row(static_cast<Eigen::Index>(r)).data());
  }
  return x;
}

void activate(Mat& z, Activation a) {
  if (a == Activation::kTanh) {
    z = z.array().tanh();
  } else {
    z = z.array().max(0.0);
  }
}

// Multiplies dH in place by the activation derivative, given h = act(z).
void activation_backward(Mat& dh, const Mat& h, Activation a) {
  if (a == Activation::kTanh) {
    dh.array() *= 1.0 - h.array().square();
  } else {
    dh.array() *= (h.array() > 0.0).cast<double>();
  }
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double m = row(0);
  for (Eigen::Index j = 1; j < row.size(); ++j) m = std::max(m, row(j));
  double sum = 0.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) sum += std::exp(row(j) - m);
  return m + std::log(sum);
}

// Mean softmax cross-entropy; optionally leaves (softmax - onehot)/B in `logits`.
double cross_entropy(Mat& logits, std::span<const std::uint8_t> labels, bool want_grad) {
  const Eigen::Index b = logits.rows();
  double total = 0.0;
  for (Eigen::Index r = 0; r < b; ++r) {
    auto row = logits.row(r);
    const double lse = log_sum_exp(row);
    total += lse - row(labels[static_cast<std::size_t>(r)]);
    if (want_grad) {
      row = (row.array() - lse).exp();
      row(labels[static_cast<std::size_t>(r)]) -= 1.0;
      row /= static_cast<double>(b);
    }
  }
  return total / static_cast<double>(b);
}

// Pre-softmax outputs of the network for the rows of h.
Mat logits(const ParameterStore& params, std::size_t layers, Activation act, Mat h) {
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor& w = params[2 * l].value;
    const Tensor& b = params[2 * l + 1].value;
    Mat z = h * as_mat(w).transpose();
    z.rowwise() += ConstVec(b.data(), static_cast<Eigen::Index>(b.size())).transpose();
    if (l + 1 < layers) activate(z, act);
    h = std::move(z);
  }
  return h;
}

std::vector<std::uint8_t> batch_labels(const Dataset& data, std::span<const std::size_t> rows) {
  std::vector<std::uint8_t> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = data.labels[rows[r]];
  return out;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw ArgumentError("unknown activation '" + std::string(s) + "' (expected tanh or relu)");
}

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw ArgumentError("MlpModel: need at least input and output sizes");
  if (sizes_.back() != kNumClasses) {
    throw ArgumentError("MlpModel: output layer must have " + std::to_string(kNumClasses) + " units");
  }
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    Tensor w = Tensor::matrix(out, in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& x : w.values()) x = scale * rng.gaussian();
    const std::string prefix = "l" + std::to_string(l + 1);
    params_.add(prefix + ".weight", std::move(w));
    params_.add(prefix + ".bias", Tensor(Shape{out}, 0.0));
  }
}

Tensor MlpModel::forward(const Tensor& inputs) const {
  if (inputs.rank() != 2 || inputs.cols() != sizes_.front()) {
    throw ShapeError("MlpModel::forward: expected inputs with " + std::to_string(sizes_.front()) +
                     " columns, got " + shape_string(inputs.shape()));
  }
  Mat h = logits(params_, sizes_.size() - 1, activation_, as_mat(inputs));
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    auto row = h.row(r);
    const double lse = log_sum_exp(row);
    row = (row.array() - lse).exp();
  }
  Tensor out = Tensor::matrix(static_cast<std::size_t>(h.rows()), static_cast<std::size_t>(h.cols()));
  MutMap(out.data(), h.rows(), h.cols()) = h;
  return out;
}

double MlpModel::loss(const Batch& batch) const {
  if (!batch.data || batch.rows.empty()) throw ArgumentError("MlpModel::loss: empty batch");
  Mat h = logits(params_, sizes_.size() - 1, activation_, gather_rows(*batch.data, batch.rows));
  const auto labels = batch_labels(*batch.data, batch.rows);
  return cross_entropy(h, labels, false);
}

double MlpModel::loss_and_gradient(const Batch& batch, std::vector<Tensor>& grads) const {
  if (!batch.data || batch.rows.empty()) throw ArgumentError("MlpModel::loss_and_gradient: empty batch");
  const std::size_t layers = sizes_.size() - 1;
  std::vector<Mat> acts;
  acts.reserve(layers + 1);
  acts.push_back(gather_rows(*batch.data, batch.rows));
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor& w = params_[2 * l].value;
    const Tensor& b = params_[2 * l + 1].value;
    Mat z = acts.back() * as_mat(w).transpose();
    z.rowwise() += ConstVec(b.data(), static_cast<Eigen::Index>(b.size())).transpose();
    if (l + 1 < layers) activate(z, activation_);
    acts.push_back(std::move(z));
  }
  const auto labels = batch_labels(*batch.data, batch.rows);
  Mat delta = std::move(acts.back());
  acts.pop_back();
  const double value = cross_entropy(delta, labels, true);

  grads.resize(params_.size());
  for (std::size_t l = layers; l-- > 0;) {
    const Tensor& w = params_[2 * l].value;
    Tensor& gw = grads[2 * l];
    Tensor& gb = grads[2 * l + 1];
    if (gw.shape() != w.shape()) gw = Tensor(w.shape());
    if (gb.shape() != params_[2 * l + 1].value.shape()) gb = Tensor(params_[2 * l + 1].value.shape());
    MutMap(gw.data(), static_cast<Eigen::Index>(w.rows()), static_cast<Eigen::Index>(w.cols())).noalias() =
        delta.transpose() * acts[l];
    // Row by row: Eigen's partial reduction order depends on the destination address.
    std::fill(gb.values().begin(), gb.values().end(), 0.0);
    for (Eigen::Index r = 0; r < delta.rows(); ++r) {
      for (Eigen::Index j = 0; j < delta.cols(); ++j) gb.data()[j] += delta(r, j);
    }
    if (l > 0) {
      Mat dh = delta * as_mat(w);
      activation_backward(dh, acts[l], activation_);
      delta = std::move(dh);
    }
  }
  return value;
}

double MlpModel::error_rate(const Dataset& data) const {
  if (data.dim() != sizes_.front()) {
    throw ShapeError("MlpModel::error_rate: dataset dimension " + std::to_string(data.dim()) +
                     " does not match input layer " + std::to_string(sizes_.front()));
  }
  constexpr std::size_t kChunk = 1000;
  std::size_t wrong = 0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, data.size() - start);
    rows.resize(n);
    std::iota(rows.begin(), rows.end(), start);
    Mat h = gather_rows(data, rows);
    h = logits(params_, sizes_.size() - 1, activation_, std::move(h));
    for (std::size_t r = 0; r < n; ++r) {
      Eigen::Index arg;
      h.row(static_cast<Eigen::Index>(r)).maxCoeff(&arg);
      if (static_cast<std::size_t>(arg) != data.labels[start + r]) ++wrong;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

}  // namespace lc
