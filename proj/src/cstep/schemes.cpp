#include "lc/schemes.hpp"

#include <cmath>
#include <sstream>

#include "lc/errors.hpp"

namespace lc {

namespace {

Tensor as_matrix(std::span<const double> u, const ViewShape& view) {
  return Tensor(Shape{view.rows, view.cols}, std::vector<double>(u.begin(), u.end()));
}

template <typename T>
std::string with_param(const std::string& name, const char* key, T value) {
  std::ostringstream os;
  os << name << "(" << key << "=" << value << ")";
  return os.str();
}

}  // namespace

double CompressionScheme::penalty(const CompressedForm&, const ViewShape&) const { return 0.0; }

double c_step_objective(const CompressionScheme& scheme, const CompressedForm& form,
                        const ViewShape& view, double distortion, double mu) {
  if (!scheme.is_penalty()) return distortion;
  return distortion + 2.0 / mu * scheme.penalty(form, view);
}

std::string AdaptiveQuantization::summary() const {
  return with_param(name(), "k", k_) + (method_ == Method::kLloyd ? "[lloyd]" : "[dp]");
}

void AdaptiveQuantization::validate(const ViewShape& view) const {
  if (k_ < 1 || static_cast<std::size_t>(k_) > view.size()) {
    throw ArgumentError("adaptive_quantization: k=" + std::to_string(k_) + " outside [1, " +
                        std::to_string(view.size()) + "]");
  }
}

CStepResult AdaptiveQuantization::compress(std::span<const double> u, const ViewShape&, double,
                                           const CompressedForm* previous) const {
  if (method_ == Method::kLloyd) {
    const auto* q = previous ? std::get_if<QuantizedForm>(&previous->value) : nullptr;
    if (q && !q->codebook.empty() && q->codebook.size() <= static_cast<std::size_t>(k_) &&
        q->assignments.size() == u.size()) {
      return quantize_lloyd_from(u, q->codebook, k_);
    }
    return quantize_lloyd(u, k_, seed_);
  }
  return quantize_dp(u, k_);
}

std::string L0Constraint::summary() const { return with_param(name(), "kappa", kappa_); }

void L0Constraint::validate(const ViewShape& view) const {
  if (kappa_ < 0 || static_cast<std::size_t>(kappa_) > view.size()) {
    throw ArgumentError("l0_constraint: kappa=" + std::to_string(kappa_) + " outside [0, " +
                        std::to_string(view.size()) + "]");
  }
}

std::string L1Constraint::summary() const { return with_param(name(), "kappa", kappa_); }

void L1Constraint::validate(const ViewShape&) const {
  if (!(kappa_ >= 0.0)) throw ArgumentError("l1_constraint: kappa must be >= 0");
}

std::string L0Penalty::summary() const { return with_param(name(), "alpha", alpha_); }

void L0Penalty::validate(const ViewShape&) const {
  if (!(alpha_ >= 0.0)) throw ArgumentError("l0_penalty: alpha must be >= 0");
}

double L0Penalty::penalty(const CompressedForm& form, const ViewShape&) const {
  return alpha_ * static_cast<double>(std::get<SparseForm>(form.value).nnz());
}

std::string L1Penalty::summary() const { return with_param(name(), "alpha", alpha_); }

void L1Penalty::validate(const ViewShape&) const {
  if (!(alpha_ >= 0.0)) throw ArgumentError("l1_penalty: alpha must be >= 0");
}

double L1Penalty::penalty(const CompressedForm& form, const ViewShape&) const {
  double s = 0.0;
  for (double v : std::get<SparseForm>(form.value).values) s += std::abs(v);
  return alpha_ * s;
}

std::string LowRank::summary() const { return with_param(name(), "rank", rank_); }

void LowRank::validate(const ViewShape& view) const {
  if (!view.is_matrix) throw ArgumentError("low_rank: requires a matrix view");
  const std::size_t max_rank = std::min(view.rows, view.cols);
  if (rank_ < 0 || static_cast<std::size_t>(rank_) > max_rank) {
    throw ArgumentError("low_rank: rank=" + std::to_string(rank_) + " outside [0, " +
                        std::to_string(max_rank) + "]");
  }
}

CStepResult LowRank::compress(std::span<const double> u, const ViewShape& view, double,
                              const CompressedForm*) const {
  return lowrank_fixed(as_matrix(u, view), rank_);
}

std::string RankSelection::name() const {
  return cost_.kind == CostModel::Kind::kFlops ? "rank_select_flops" : "rank_select_storage";
}

std::string RankSelection::summary() const { return with_param(name(), "alpha", lambda_); }

void RankSelection::validate(const ViewShape& view) const {
  if (!view.is_matrix) throw ArgumentError(name() + ": requires a matrix view");
  if (!(lambda_ >= 0.0)) throw ArgumentError(name() + ": alpha must be >= 0");
  if (!(cost_.coefficient >= 0.0)) throw ArgumentError(name() + ": layer coefficient must be >= 0");
}

CStepResult RankSelection::compress(std::span<const double> u, const ViewShape& view, double mu,
                                    const CompressedForm*) const {
  return rank_select(as_matrix(u, view), lambda_, mu, cost_).result;
}

double RankSelection::penalty(const CompressedForm& form, const ViewShape& view) const {
  return lambda_ * cost_.cost(std::get<LowRankForm>(form.value).rank, view.rows, view.cols);
}

}  // namespace lc
