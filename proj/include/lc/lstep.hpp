#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lc/dataset.hpp"
#include "lc/model.hpp"

namespace lc {

// The quadratic attraction (μ/2) ||w - Δ(Θ) - λ/μ||² added to the loss in
// the L step. anchors[i] holds Δ(Θ) + λ/μ for parameter i of the model's
// store, or nothing when no task covers that parameter.
struct PenaltyTerm {
  double mu = 0.0;
  std::vector<std::optional<Tensor>> anchors;

  // No attraction at all (plain training).
  static PenaltyTerm none(const ParameterStore& params);

  double value(const ParameterStore& params) const;
  // grads[i] += μ (w_i - anchor_i) for covered parameters.
  void add_gradient(const ParameterStore& params, std::vector<Tensor>& grads) const;
};

struct LStepHyper {
  double lr_base = 0.1;
  double decay = 0.98;  // lr = lr_base * decay^step_index
  int epochs = 20;
  std::size_t batch = 128;
  double momentum = 0.9;
  bool nesterov = true;
  int step_index = 0;
  std::uint64_t seed = 0;  // shuffling stream; combined with step_index
};

struct LStepOutcome {
  double loss_before = 0.0;  // penalized loss on the full training set
  double loss_after = 0.0;
};

// L(w) + penalty over the whole dataset (or the data-free loss when null).
double penalized_loss(const LossModel& model, const Dataset* data, const PenaltyTerm& penalty);

// Mini-batch SGD with (Nesterov) momentum on L(w) + penalty. With a null
// dataset each epoch is a single full-gradient step. Throws DivergenceError
// naming the epoch if the loss becomes non-finite.
LStepOutcome sgd_l_step(LossModel& model, const Dataset* data, const PenaltyTerm& penalty,
                        const LStepHyper& hyper);

// Closed-form minimizer of ½ Σ a_i (w_i - w̄_i)² + (μ/2)||w - θ - λ/μ||²:
// w_i = (a_i w̄_i + μ θ_i + λ_i) / (a_i + μ). Single-block models only.
Tensor exact_l_step_quadratic(const QuadraticModel& model, const Tensor& theta, const Tensor& lambda,
                              double mu);

// Engine-facing form: sets every block of the model to the exact minimizer
// for the given penalty (uncovered blocks return to w̄).
LStepOutcome exact_l_step_quadratic(QuadraticModel& model, const PenaltyTerm& penalty);

struct GradCheckOptions {
  double h = 1e-5;
  std::size_t coordinates = 50;
  std::uint64_t seed = 0;
};

// Largest relative difference between the analytic gradient and central
// differences over randomly chosen coordinates. The relative error of a
// coordinate is |g - fd| / max(|g|, |fd|, 1e-6).
double finite_diff_gradcheck(LossModel& model, const Batch& batch, const GradCheckOptions& options = {});

}  // namespace lc
