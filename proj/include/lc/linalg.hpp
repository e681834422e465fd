#pragma once

#include <vector>

#include "lc/tensor.hpp"

namespace lc {

// Thin SVD A = U diag(S) V^T with k = min(m, n) columns in U (m x k) and V (n x k).
struct SvdResult {
  Tensor u;
  std::vector<double> s;  // non-negative, non-increasing
  Tensor v;
};

struct SvdOptions {
  double tolerance = 1e-12;  // relative off-diagonal threshold for a rotation
  int max_sweeps = 60;
};

// One-sided (Hestenes) Jacobi SVD. Singular values are sorted descending;
// ties keep their input-column order. Columns of U belonging to numerically
// zero singular values are completed to an orthonormal set.
// Throws NumericError on non-finite input or when max_sweeps is exhausted.
SvdResult svd(const Tensor& a, const SvdOptions& options = {});

// U[:, :r] diag(S[:r]) V[:, :r]^T.
Tensor reconstruct(const SvdResult& svd, std::size_t r);

}  // namespace lc
