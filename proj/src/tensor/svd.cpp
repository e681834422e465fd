#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lc/errors.hpp"
#include "lc/linalg.hpp"

namespace lc {

namespace {

using Column = std::vector<double>;

double col_dot(const Column& a, const Column& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void rotate(Column& p, Column& q, double c, double s) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double xp = p[i];
    const double xq = q[i];
    p[i] = c * xp - s * xq;
    q[i] = s * xp + c * xq;
  }
}

// Orthonormal vector orthogonal to every column in `basis`, built by
// Gram-Schmidt (applied twice) from the best-conditioned unit vector.
Column complete_basis(const std::vector<Column>& basis, std::size_t m) {
  Column best;
  double best_norm = -1.0;
  for (std::size_t i = 0; i < m; ++i) {
    Column v(m, 0.0);
    v[i] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const Column& b : basis) {
        const double proj = col_dot(v, b);
        for (std::size_t r = 0; r < m; ++r) v[r] -= proj * b[r];
      }
    }
    const double n = std::sqrt(col_dot(v, v));
    if (n > best_norm) {
      best_norm = n;
      best = std::move(v);
      if (best_norm > 0.5) break;
    }
  }
  for (double& x : best) x /= best_norm;
  return best;
}

// Requires m >= n. Returns U (m x n), S, V (n x n).
SvdResult jacobi_tall(const Tensor& a, const SvdOptions& opt) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();

  std::vector<Column> work(n, Column(m));
  std::vector<Column> vcols(n, Column(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) work[j][i] = a(i, j);
    vcols[j][j] = 1.0;
  }

  const double norm_a = frobenius_norm(a);
  const double eps = std::numeric_limits<double>::epsilon();
  const double negligible = eps * norm_a;
  const double negligible_sq = negligible * negligible;

  bool converged = false;
  for (int sweep = 0; sweep < opt.max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = col_dot(work[p], work[p]);
        const double beta = col_dot(work[q], work[q]);
        if (alpha <= negligible_sq || beta <= negligible_sq) continue;
        const double gamma = col_dot(work[p], work[q]);
        if (std::abs(gamma) <= opt.tolerance * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(work[p], work[q], c, s);
        rotate(vcols[p], vcols[q], c, s);
      }
    }
  }
  if (!converged) throw NumericError("svd: Jacobi iteration did not converge");

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(work[j], work[j]));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  // Columns whose norm is at roundoff level of ||A|| carry no direction.
  const double zero_level = negligible * std::sqrt(static_cast<double>(n));
  std::vector<Column> ucols;
  ucols.reserve(n);
  std::vector<std::size_t> deferred;
  std::vector<Column> sorted_u(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    if (sigma[j] > zero_level) {
      Column u = work[j];
      for (double& x : u) x /= sigma[j];
      ucols.push_back(u);
      sorted_u[k] = std::move(u);
    } else {
      deferred.push_back(k);
    }
  }
  for (std::size_t k : deferred) {
    Column u = complete_basis(ucols, m);
    ucols.push_back(u);
    sorted_u[k] = std::move(u);
  }

  SvdResult out{Tensor::matrix(m, n), std::vector<double>(n), Tensor::matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.s[k] = sigma[j];
    for (std::size_t i = 0; i < m; ++i) out.u(i, k) = sorted_u[k][i];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vcols[j][i];
  }
  return out;
}

}  // namespace

SvdResult svd(const Tensor& a, const SvdOptions& options) {
  if (a.rank() != 2) throw ShapeError("svd: expected a matrix, got " + shape_string(a.shape()));
  if (!all_finite(a.values())) throw NumericError("svd: input contains non-finite entries");
  if (a.rows() >= a.cols()) return jacobi_tall(a, options);
  // A^T = U' S V'^T  =>  A = V' S U'^T.
  SvdResult t = jacobi_tall(a.transposed(), options);
  return SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
}

Tensor reconstruct(const SvdResult& f, std::size_t r) {
  const std::size_t m = f.u.rows();
  const std::size_t n = f.v.rows();
  if (r > f.s.size()) throw ArgumentError("reconstruct: rank exceeds number of singular values");
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t k = 0; k < r; ++k) {
    const double sk = f.s[k];
    if (sk == 0.0) continue;
    for (std::size_t i = 0; i < m; ++i) {
      const double uik = f.u(i, k) * sk;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += uik * f.v(j, k);
    }
  }
  return out;
}

}  // namespace lc
