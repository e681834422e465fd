#pragma once

// Brute-force reference solvers. They enumerate their whole search space and
// are only meant for small instances; each throws ArgumentError when its size
// bound is exceeded. Solver tests compare against these, and downstream code
// can use them to certify a new compression solver.

#include <cstdint>
#include <span>
#include <vector>

#include "lc/cstep.hpp"
#include "lc/model.hpp"
#include "lc/tensor.hpp"

namespace lc {

struct KmeansOracleResult {
  double distortion = 0.0;
  std::vector<double> codebook;  // ascending, one entry per non-empty cluster
};

// Minimum over all partitions of sorted u into K contiguous non-empty runs.
// P <= 12, 1 <= K <= min(3, P). For P <= 8 the result is also checked against
// oracle_kmeans_assignments and a NumericError is thrown if they disagree.
KmeansOracleResult oracle_kmeans_exhaustive(std::span<const double> u, std::int64_t k);

// Minimum over all K^P assignments with centers at the cluster means. P <= 8.
KmeansOracleResult oracle_kmeans_assignments(std::span<const double> u, std::int64_t k);

// Projection onto the l1 ball of radius kappa, found by bisection on the
// soft-threshold level t (the map t -> Σ max(|u_i| - t, 0) is monotone).
// P <= 50.
std::vector<double> oracle_l1_projection(std::span<const double> u, double kappa);

struct TernaryOracleResult {
  double distortion = 0.0;
  double scale = 0.0;              // c
  std::vector<bool> support;       // entries mapped to ±c
};

// All 2^P supports with c = mean |u_i| over the support. P <= 12.
TernaryOracleResult oracle_ternary_exhaustive(std::span<const double> u);

// Minimum of ||u - θ||² over all θ in {-1, +1}^P. P <= 12.
double oracle_binarize_fixed_exhaustive(std::span<const double> u);

struct PenaltyOracleResult {
  double objective = 0.0;  // alpha nnz + (mu/2) ||u - θ||²
  std::vector<bool> keep;  // ties resolved toward fewer kept entries
};

// All 2^P keep/drop patterns for alpha ||θ||_0 + (mu/2)||u - θ||². P <= 12.
PenaltyOracleResult oracle_l0_penalty_exhaustive(std::span<const double> u, double alpha, double mu);

// Eigenvalues of the smaller Gram matrix (W^T W or W W^T) by the cyclic
// Jacobi eigenvalue method, clamped at zero and sorted descending. These are
// the squared singular values of W. min(m, n) <= 64.
std::vector<double> oracle_squared_singular_values(const Tensor& w);

struct RankOracleResult {
  std::size_t rank = 0;
  double objective = 0.0;
};

// Enumerates r = 0..min(m, n) of λ C(r) + (μ/2) Σ_{i>r} σ_i² using
// oracle_squared_singular_values; ties take the smaller r.
RankOracleResult oracle_rank_select(const Tensor& w, double lambda, double mu, const CostModel& cost);

// Joint optimum of ||u - s - Δ(c, z)||² over one-sparse s (κ = 1), codebooks
// of size K and all assignments z: every support {j} (and the empty support)
// crossed with all K^P assignment patterns. P <= 8, K <= 3.
double oracle_additive_l0_kmeans(std::span<const double> u, std::int64_t k);

struct LcGlobalResult {
  std::vector<double> weights;  // w* = Δ(Θ*)
  std::vector<double> codebook;
  double loss = 0.0;
};

// Global minimizer of the single-block quadratic loss subject to w taking at
// most K distinct values: all K^P assignments, each cluster value being the
// curvature-weighted mean of its targets. P <= 6.
LcGlobalResult oracle_lc_global(const QuadraticModel& model, std::int64_t k);

}  // namespace lc
