#include <algorithm>

#include "lc/cstep.hpp"
#include "lc/errors.hpp"
#include "lc/linalg.hpp"

namespace lc {

namespace {

void check_matrix(const Tensor& w, const char* who) {
  if (w.rank() != 2) {
    throw ArgumentError(std::string(who) + ": expected a matrix view, got shape " +
                        shape_string(w.shape()));
  }
}

LowRankForm truncate(const SvdResult& f, std::size_t m, std::size_t n, std::size_t r) {
  LowRankForm form;
  form.rows = m;
  form.cols = n;
  form.rank = r;
  form.u.resize(m * r);
  form.v.resize(n * r);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < r; ++k) form.u[i * r + k] = f.u(i, k) * f.s[k];
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < r; ++k) form.v[j * r + k] = f.v(j, k);
  return form;
}

CStepResult finish(const Tensor& w, LowRankForm form) {
  CStepResult r{CompressedForm(std::move(form)), 0.0};
  r.distortion = distortion(w.values(), r.form);
  return r;
}

}  // namespace

CStepResult lowrank_fixed(const Tensor& w, std::int64_t rank) {
  check_matrix(w, "lowrank_fixed");
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  if (rank < 0 || static_cast<std::size_t>(rank) > std::min(m, n)) {
    throw ArgumentError("lowrank_fixed: rank " + std::to_string(rank) + " outside [0, " +
                        std::to_string(std::min(m, n)) + "]");
  }
  const SvdResult f = svd(w);
  return finish(w, truncate(f, m, n, static_cast<std::size_t>(rank)));
}

RankSelectionResult rank_select(const Tensor& w, double lambda, double mu, const CostModel& cost) {
  check_matrix(w, "rank_select");
  if (!(mu > 0.0)) throw ArgumentError("rank_select: mu must be > 0");
  if (!(lambda >= 0.0)) throw ArgumentError("rank_select: lambda must be >= 0");
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  const SvdResult f = svd(w);
  const std::size_t k = f.s.size();

  // tail[r] = sum_{i >= r} σ_i² (0-based), accumulated from the smallest.
  std::vector<double> tail(k + 1, 0.0);
  for (std::size_t i = k; i-- > 0;) tail[i] = tail[i + 1] + f.s[i] * f.s[i];

  std::size_t best_r = 0;
  double best = lambda * cost.cost(0, m, n) + 0.5 * mu * tail[0];
  for (std::size_t r = 1; r <= k; ++r) {
    const double obj = lambda * cost.cost(r, m, n) + 0.5 * mu * tail[r];
    if (obj < best) {
      best = obj;
      best_r = r;
    }
  }
  RankSelectionResult out;
  out.rank = best_r;
  out.objective = best;
  out.result = finish(w, truncate(f, m, n, best_r));
  return out;
}

}  // namespace lc
