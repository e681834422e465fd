#include "lc/lstep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lc/errors.hpp"
#include "lc/random.hpp"

namespace lc {

namespace {

void check_penalty(const ParameterStore& params, const PenaltyTerm& penalty) {
  if (!(penalty.mu >= 0.0) || !std::isfinite(penalty.mu)) {
    throw ArgumentError("penalty mu must be finite and >= 0");
  }
  if (penalty.anchors.size() != params.size()) {
    throw ShapeError("penalty has " + std::to_string(penalty.anchors.size()) + " anchors for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (penalty.anchors[i] && penalty.anchors[i]->size() != params[i].value.size()) {
      throw ShapeError("penalty anchor for '" + params[i].name + "' has " +
                       std::to_string(penalty.anchors[i]->size()) + " elements, expected " +
                       std::to_string(params[i].value.size()));
    }
  }
}

double full_loss(const LossModel& model, const Dataset* data) {
  if (!data) return model.loss({});
  constexpr std::size_t kChunk = 2000;
  std::vector<std::size_t> rows;
  double total = 0.0;
  for (std::size_t start = 0; start < data->size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, data->size() - start);
    rows.resize(n);
    std::iota(rows.begin(), rows.end(), start);
    total += model.loss({data, rows}) * static_cast<double>(n);
  }
  return total / static_cast<double>(data->size());
}

}  // namespace

PenaltyTerm PenaltyTerm::none(const ParameterStore& params) {
  PenaltyTerm p;
  p.anchors.resize(params.size());
  return p;
}

double PenaltyTerm::value(const ParameterStore& params) const {
  if (mu == 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (anchors[i]) total += squared_distance(params[i].value.values(), anchors[i]->values());
  }
  return 0.5 * mu * total;
}

void PenaltyTerm::add_gradient(const ParameterStore& params, std::vector<Tensor>& grads) const {
  if (mu == 0.0) return;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!anchors[i]) continue;
    const Tensor& w = params[i].value;
    const Tensor& c = *anchors[i];
    Tensor& g = grads[i];
    for (std::size_t j = 0; j < w.size(); ++j) g[j] += mu * (w[j] - c[j]);
  }
}

double penalized_loss(const LossModel& model, const Dataset* data, const PenaltyTerm& penalty) {
  check_penalty(model.parameters(), penalty);
  return full_loss(model, data) + penalty.value(model.parameters());
}

LStepOutcome sgd_l_step(LossModel& model, const Dataset* data, const PenaltyTerm& penalty,
                        const LStepHyper& hyper) {
  ParameterStore& params = model.parameters();
  check_penalty(params, penalty);
  if (hyper.epochs < 0) throw ArgumentError("L step: epochs must be >= 0");
  if (!(hyper.lr_base > 0.0) || !(hyper.decay > 0.0)) {
    throw ArgumentError("L step: lr_base and decay must be positive");
  }
  if (hyper.momentum < 0.0 || hyper.momentum >= 1.0) {
    throw ArgumentError("L step: momentum must lie in [0, 1)");
  }
  if (data && (data->size() == 0 || hyper.batch == 0)) {
    throw ArgumentError("L step: empty dataset or zero batch size");
  }

  LStepOutcome out;
  out.loss_before = full_loss(model, data) + penalty.value(params);
  const double lr = hyper.lr_base * std::pow(hyper.decay, hyper.step_index);

  std::vector<Tensor> grads;
  std::vector<Tensor> velocity;
  velocity.reserve(params.size());
  for (const auto& p : params) velocity.emplace_back(p.value.shape());

  Rng rng(hyper.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(hyper.step_index + 1)));
  std::vector<std::size_t> order(data ? data->size() : 0);
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto update = [&](const Batch& batch) {
    const double l = model.loss_and_gradient(batch, grads);
    penalty.add_gradient(params, grads);
    for (std::size_t i = 0; i < params.size(); ++i) {
      double* w = params[i].value.data();
      double* v = velocity[i].data();
      const double* g = grads[i].data();
      const std::size_t n = params[i].value.size();
      for (std::size_t j = 0; j < n; ++j) {
        v[j] = hyper.momentum * v[j] + g[j];
        const double step = hyper.nesterov ? g[j] + hyper.momentum * v[j] : v[j];
        w[j] -= lr * step;
      }
    }
    return l;
  };

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    double sum = 0.0;
    if (!data) {
      sum = update({});
    } else {
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
        const std::size_t n = std::min(hyper.batch, order.size() - start);
        sum += update({data, std::span<const std::size_t>(order).subspan(start, n)});
      }
    }
    bool finite = std::isfinite(sum);
    for (std::size_t i = 0; finite && i < params.size(); ++i) finite = all_finite(params[i].value.values());
    if (!finite) {
      throw DivergenceError("L step diverged in epoch " + std::to_string(epoch + 1) +
                                " (lr " + std::to_string(lr) + ", mu " + std::to_string(penalty.mu) + ")",
                            epoch + 1);
    }
  }

  out.loss_after = full_loss(model, data) + penalty.value(params);
  if (!std::isfinite(out.loss_after)) {
    throw DivergenceError("L step produced a non-finite loss", hyper.epochs);
  }
  return out;
}

Tensor exact_l_step_quadratic(const QuadraticModel& model, const Tensor& theta, const Tensor& lambda,
                              double mu) {
  if (model.blocks().size() != 1) {
    throw ArgumentError("exact_l_step_quadratic: expected a single-block model");
  }
  if (!(mu >= 0.0)) throw ArgumentError("exact_l_step_quadratic: mu must be >= 0");
  const auto& b = model.blocks().front();
  if (theta.size() != b.target.size() || lambda.size() != b.target.size()) {
    throw ShapeError("exact_l_step_quadratic: theta/lambda size differs from the model");
  }
  Tensor w(b.target.shape());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = (b.curvature[i] * b.target[i] + mu * theta[i] + lambda[i]) / (b.curvature[i] + mu);
  }
  return w;
}

LStepOutcome exact_l_step_quadratic(QuadraticModel& model, const PenaltyTerm& penalty) {
  ParameterStore& params = model.parameters();
  check_penalty(params, penalty);
  LStepOutcome out;
  out.loss_before = model.loss({}) + penalty.value(params);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& b = model.blocks()[k];
    Tensor& w = params[k].value;
    const std::optional<Tensor>& c = penalty.anchors[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      // Anchor already folds in λ/μ, so μ·anchor = μθ + λ.
      w[i] = c ? (b.curvature[i] * b.target[i] + penalty.mu * (*c)[i]) / (b.curvature[i] + penalty.mu)
               : b.target[i];
    }
  }
  out.loss_after = model.loss({}) + penalty.value(params);
  return out;
}

double finite_diff_gradcheck(LossModel& model, const Batch& batch, const GradCheckOptions& options) {
  if (!(options.h >= 1e-7 && options.h <= 1e-3)) {
    throw ArgumentError("finite_diff_gradcheck: h must lie in [1e-7, 1e-3]");
  }
  ParameterStore& params = model.parameters();
  const std::vector<Tensor> grads = model.gradient(batch);
  const std::size_t total = params.total_elements();
  if (total == 0) return 0.0;

  Rng rng(options.seed);
  double worst = 0.0;
  for (std::size_t c = 0; c < options.coordinates; ++c) {
    std::size_t flat = rng.below(total);
    std::size_t k = 0;
    while (flat >= params[k].value.size()) flat -= params[k++].value.size();
    double& w = params[k].value[flat];
    const double saved = w;
    w = saved + options.h;
    const double up = model.loss(batch);
    w = saved - options.h;
    const double down = model.loss(batch);
    w = saved;
    const double fd = (up - down) / (2.0 * options.h);
    const double g = grads[k][flat];
    const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-6});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace lc
