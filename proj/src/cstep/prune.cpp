#include <algorithm>
#include <cmath>
#include <numeric>

#include "lc/cstep.hpp"
#include "lc/errors.hpp"

namespace lc {

namespace {

CStepResult finish(std::span<const double> u, SparseForm form) {
  CStepResult r{CompressedForm(std::move(form)), 0.0};
  r.distortion = distortion(u, r.form);
  return r;
}

// Builds a sparse form from a dense vector, dropping exact zeros.
SparseForm from_dense(const std::vector<double>& theta) {
  SparseForm s;
  s.length = theta.size();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] != 0.0) {
      s.indices.push_back(i);
      s.values.push_back(theta[i]);
    }
  }
  return s;
}

void check_mu(double mu, const char* who) {
  if (!(mu > 0.0)) throw ArgumentError(std::string(who) + ": mu must be > 0");
}

void check_alpha(double alpha, const char* who) {
  if (!(alpha >= 0.0)) throw ArgumentError(std::string(who) + ": alpha must be >= 0");
}

}  // namespace

CStepResult prune_l0_constraint(std::span<const double> u, std::int64_t kappa) {
  if (kappa < 0 || static_cast<std::uint64_t>(kappa) > u.size()) {
    throw ArgumentError("prune_l0_constraint: kappa=" + std::to_string(kappa) +
                        " outside [0, " + std::to_string(u.size()) + "]");
  }
  const std::size_t keep = static_cast<std::size_t>(kappa);
  std::vector<std::size_t> idx(u.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto larger = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(u[a]);
    const double mb = std::abs(u[b]);
    return ma != mb ? ma > mb : a < b;
  };
  if (keep < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), larger);
  }
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  SparseForm s;
  s.length = u.size();
  for (std::size_t i : idx) {
    if (u[i] == 0.0) continue;
    s.indices.push_back(i);
    s.values.push_back(u[i]);
  }
  return finish(u, std::move(s));
}

CStepResult prune_l1_constraint(std::span<const double> u, double kappa) {
  if (!(kappa >= 0.0)) throw ArgumentError("prune_l1_constraint: kappa must be >= 0");
  double l1 = 0.0;
  for (double x : u) l1 += std::abs(x);
  std::vector<double> theta(u.begin(), u.end());
  if (l1 <= kappa) return finish(u, from_dense(theta));
  if (kappa == 0.0) return finish(u, from_dense(std::vector<double>(u.size(), 0.0)));

  std::vector<double> mags(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) mags[i] = std::abs(u[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  // Largest rho with mags[rho-1] > (sum_{r<rho} mags[r] - kappa) / rho.
  double prefix = 0.0;
  double threshold = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    prefix += mags[j];
    const double t = (prefix - kappa) / static_cast<double>(j + 1);
    if (mags[j] > t) threshold = t;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double m = std::abs(u[i]) - threshold;
    theta[i] = m > 0.0 ? std::copysign(m, u[i]) : 0.0;
  }
  return finish(u, from_dense(theta));
}

CStepResult prune_l0_penalty(std::span<const double> u, double alpha, double mu) {
  check_alpha(alpha, "prune_l0_penalty");
  check_mu(mu, "prune_l0_penalty");
  std::vector<double> theta(u.size(), 0.0);
  // Keeping costs alpha, dropping costs (mu/2) u_i². Equal costs prune.
  for (std::size_t i = 0; i < u.size(); ++i)
    if (0.5 * mu * u[i] * u[i] > alpha) theta[i] = u[i];
  return finish(u, from_dense(theta));
}

CStepResult prune_l1_penalty(std::span<const double> u, double alpha, double mu) {
  check_alpha(alpha, "prune_l1_penalty");
  check_mu(mu, "prune_l1_penalty");
  const double t = alpha / mu;
  std::vector<double> theta(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double m = std::abs(u[i]) - t;
    if (m > 0.0) theta[i] = std::copysign(m, u[i]);
  }
  return finish(u, from_dense(theta));
}

}  // namespace lc
