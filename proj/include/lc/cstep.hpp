#pragma once

// Exact solvers for the compression step: each returns the Θ minimizing
// ||u - Δ(Θ)||² (plus the scheme's penalty term where one exists) together
// with the recomputed distortion. Solvers receive the already shifted target
// u = w - λ/μ and never see the multipliers.

#include <cstdint>
#include <span>

#include "lc/forms.hpp"
#include "lc/tensor.hpp"

namespace lc {

// Globally optimal scalar k-means over P values, K clusters. Works on the
// sorted values, where optimal clusters are contiguous, with a
// divide-and-conquer DP that exploits monotone split points:
// O(K P log P) time and O(K P) memory. If u has fewer than K distinct values
// the codebook shrinks to the distinct values.
// Throws ArgumentError unless 1 <= k <= P.
CStepResult quantize_dp(std::span<const double> u, std::int64_t k);

// Lloyd's algorithm from k-means++ seeding. Stops when assignments are stable
// or after 300 iterations. An emptied cluster is re-seeded at the point with
// the largest current error.
CStepResult quantize_lloyd(std::span<const double> u, std::int64_t k, std::uint64_t seed);

// Lloyd's algorithm started from an existing codebook (1..K entries; missing
// centers are placed at the worst-fit values). The result never has a larger
// distortion than the initial codebook with nearest-center assignments.
CStepResult quantize_lloyd_from(std::span<const double> u, std::span<const double> codebook,
                                std::int64_t k);

// Codebook {-1, +1}; u_i = 0 maps to +1.
CStepResult binarize_fixed(std::span<const double> u);

// Codebook {-a, +a} with a = mean |u_i|; u_i <= 0 maps to -a.
CStepResult binarize_scaled(std::span<const double> u);

// Codebook {-c, 0, +c}. With |u| sorted descending and prefix sums S_k, the
// support is the top k* entries where k* maximizes S_k² / k, and c = S_k* / k*.
CStepResult ternarize_scaled(std::span<const double> u);

// Keep the kappa largest magnitudes; magnitude ties keep the lower index.
CStepResult prune_l0_constraint(std::span<const double> u, std::int64_t kappa);

// Euclidean projection onto {θ : ||θ||_1 <= kappa} by sort-and-scan.
CStepResult prune_l1_constraint(std::span<const double> u, double kappa);

// argmin alpha ||θ||_0 + (mu/2) ||u - θ||²; equal costs prune.
CStepResult prune_l0_penalty(std::span<const double> u, double alpha, double mu);

// Soft thresholding at alpha / mu.
CStepResult prune_l1_penalty(std::span<const double> u, double alpha, double mu);

// Truncated SVD: U = U_r diag(σ_1..σ_r), V = V_r.
CStepResult lowrank_fixed(const Tensor& w, std::int64_t rank);

struct CostModel {
  enum class Kind { kStorage, kFlops };
  Kind kind = Kind::kStorage;
  double coefficient = 1.0;  // α_l

  // α_l · r · (m + n)
  double cost(std::size_t rank, std::size_t rows, std::size_t cols) const {
    return coefficient * static_cast<double>(rank) * static_cast<double>(rows + cols);
  }
};

struct RankSelectionResult {
  CStepResult result;
  std::size_t rank = 0;
  double objective = 0.0;  // λ C(r) + (μ/2) Σ_{i>r} σ_i²
};

// argmin over r in [0, min(m, n)] of λ C(r) + (μ/2) Σ_{i>r} σ_i²; ties take
// the smaller r.
RankSelectionResult rank_select(const Tensor& w, double lambda, double mu, const CostModel& cost);

}  // namespace lc
