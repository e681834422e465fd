#include "lc/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lc/errors.hpp"

namespace lc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

// Sum of squared deviations from the mean, two passes.
double sse(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s;
}

double mean_of(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

// Calls f(z) for every z in [0, k)^p.
template <typename F>
void for_each_assignment(std::size_t p, std::size_t k, F&& f) {
  std::vector<std::size_t> z(p, 0);
  while (true) {
    f(z);
    std::size_t i = 0;
    while (i < p && ++z[i] == k) z[i++] = 0;
    if (i == p) return;
  }
}

// Distortion and sorted non-empty centers for a given assignment of u,
// skipping the entry `skip` (pass u.size() to skip nothing).
KmeansOracleResult evaluate_assignment(std::span<const double> u, const std::vector<std::size_t>& z,
                                       std::size_t k, std::size_t skip) {
  KmeansOracleResult r;
  std::vector<double> members;
  for (std::size_t c = 0; c < k; ++c) {
    members.clear();
    for (std::size_t i = 0; i < u.size(); ++i)
      if (i != skip && z[i] == c) members.push_back(u[i]);
    if (members.empty()) continue;
    r.distortion += sse(members);
    r.codebook.push_back(mean_of(members));
  }
  std::sort(r.codebook.begin(), r.codebook.end());
  return r;
}

}  // namespace

KmeansOracleResult oracle_kmeans_assignments(std::span<const double> u, std::int64_t k) {
  require(!u.empty() && u.size() <= 8, "oracle_kmeans_assignments: need 1 <= P <= 8");
  require(k >= 1 && k <= 3 && static_cast<std::size_t>(k) <= u.size(),
          "oracle_kmeans_assignments: need 1 <= K <= min(3, P)");
  KmeansOracleResult best;
  bool have = false;
  for_each_assignment(u.size(), static_cast<std::size_t>(k), [&](const std::vector<std::size_t>& z) {
    KmeansOracleResult r = evaluate_assignment(u, z, static_cast<std::size_t>(k), u.size());
    if (!have || r.distortion < best.distortion) {
      best = std::move(r);
      have = true;
    }
  });
  return best;
}

KmeansOracleResult oracle_kmeans_exhaustive(std::span<const double> u, std::int64_t k) {
  require(!u.empty() && u.size() <= 12, "oracle_kmeans_exhaustive: need 1 <= P <= 12");
  require(k >= 1 && k <= 3 && static_cast<std::size_t>(k) <= u.size(),
          "oracle_kmeans_exhaustive: need 1 <= K <= min(3, P)");
  std::vector<double> v(u.begin(), u.end());
  std::sort(v.begin(), v.end());
  const std::size_t p = v.size();
  const std::span<const double> s(v);

  KmeansOracleResult best;
  bool have = false;
  auto consider = [&](std::vector<std::span<const double>> parts) {
    KmeansOracleResult r;
    for (auto part : parts) {
      r.distortion += sse(part);
      r.codebook.push_back(mean_of(part));
    }
    if (!have || r.distortion < best.distortion) {
      best = std::move(r);
      have = true;
    }
  };
  if (k == 1) {
    consider({s});
  } else if (k == 2) {
    for (std::size_t a = 1; a < p; ++a) consider({s.subspan(0, a), s.subspan(a)});
  } else {
    for (std::size_t a = 1; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b)
        consider({s.subspan(0, a), s.subspan(a, b - a), s.subspan(b)});
  }

  if (p <= 8) {
    const KmeansOracleResult full = oracle_kmeans_assignments(u, k);
    const double scale = 1.0 + std::abs(best.distortion);
    if (std::abs(full.distortion - best.distortion) > 1e-9 * scale) {
      throw NumericError("oracle_kmeans_exhaustive: contiguous and full enumerations disagree");
    }
  }
  return best;
}

std::vector<double> oracle_l1_projection(std::span<const double> u, double kappa) {
  require(u.size() <= 50, "oracle_l1_projection: need P <= 50");
  require(kappa >= 0.0, "oracle_l1_projection: kappa must be >= 0");
  double norm1 = 0.0;
  double hi = 0.0;
  for (double x : u) {
    norm1 += std::abs(x);
    hi = std::max(hi, std::abs(x));
  }
  if (norm1 <= kappa) return {u.begin(), u.end()};
  auto mass = [&](double t) {
    double m = 0.0;
    for (double x : u) m += std::max(std::abs(x) - t, 0.0);
    return m;
  };
  double lo = 0.0;
  for (int it = 0; it < 2000 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (mass(mid) > kappa ? lo : hi) = mid;
  }
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = std::copysign(std::max(std::abs(u[i]) - hi, 0.0), u[i]);
  }
  return out;
}

TernaryOracleResult oracle_ternary_exhaustive(std::span<const double> u) {
  require(!u.empty() && u.size() <= 12, "oracle_ternary_exhaustive: need 1 <= P <= 12");
  const std::size_t p = u.size();
  TernaryOracleResult best;
  best.distortion = 0.0;
  for (double x : u) best.distortion += x * x;
  best.support.assign(p, false);
  for (std::uint32_t mask = 1; mask < (1u << p); ++mask) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < p; ++i) {
      if (mask >> i & 1u) {
        sum += std::abs(u[i]);
        ++count;
      }
    }
    const double c = sum / count;
    double d = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      const double theta = (mask >> i & 1u) ? std::copysign(c, u[i]) : 0.0;
      d += (u[i] - theta) * (u[i] - theta);
    }
    if (d < best.distortion) {
      best.distortion = d;
      best.scale = c;
      for (std::size_t i = 0; i < p; ++i) best.support[i] = mask >> i & 1u;
    }
  }
  return best;
}

double oracle_binarize_fixed_exhaustive(std::span<const double> u) {
  require(!u.empty() && u.size() <= 12, "oracle_binarize_fixed_exhaustive: need 1 <= P <= 12");
  double best = INFINITY;
  for (std::uint32_t mask = 0; mask < (1u << u.size()); ++mask) {
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double t = (mask >> i & 1u) ? 1.0 : -1.0;
      d += (u[i] - t) * (u[i] - t);
    }
    best = std::min(best, d);
  }
  return best;
}

PenaltyOracleResult oracle_l0_penalty_exhaustive(std::span<const double> u, double alpha, double mu) {
  require(!u.empty() && u.size() <= 12, "oracle_l0_penalty_exhaustive: need 1 <= P <= 12");
  require(mu > 0.0 && alpha >= 0.0, "oracle_l0_penalty_exhaustive: need mu > 0, alpha >= 0");
  PenaltyOracleResult best;
  int best_nnz = 0;
  bool have = false;
  for (std::uint32_t mask = 0; mask < (1u << u.size()); ++mask) {
    double obj = 0.0;
    int nnz = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (mask >> i & 1u) {
        obj += alpha;
        ++nnz;
      } else {
        obj += 0.5 * mu * u[i] * u[i];
      }
    }
    if (!have || obj < best.objective || (obj == best.objective && nnz < best_nnz)) {
      have = true;
      best.objective = obj;
      best_nnz = nnz;
      best.keep.assign(u.size(), false);
      for (std::size_t i = 0; i < u.size(); ++i) best.keep[i] = mask >> i & 1u;
    }
  }
  return best;
}

std::vector<double> oracle_squared_singular_values(const Tensor& w) {
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  const std::size_t k = std::min(m, n);
  require(k <= 64, "oracle_squared_singular_values: need min(m, n) <= 64");
  // G = W^T W when n is the smaller side, else W W^T.
  std::vector<double> g(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      if (n <= m) {
        for (std::size_t r = 0; r < m; ++r) s += w(r, i) * w(r, j);
      } else {
        for (std::size_t c = 0; c < n; ++c) s += w(i, c) * w(j, c);
      }
      g[i * k + j] = s;
    }
  }
  auto at = [&](std::size_t i, std::size_t j) -> double& { return g[i * k + j]; };

  double total = 0.0;
  for (double x : g) total += x * x;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        if (i != j) off += at(i, j) * at(i, j);
    if (off <= 1e-30 * total) break;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        if (at(p, q) == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < k; ++r) {
          const double grp = at(r, p);
          const double grq = at(r, q);
          at(r, p) = c * grp - s * grq;
          at(r, q) = s * grp + c * grq;
        }
        for (std::size_t r = 0; r < k; ++r) {
          const double gpr = at(p, r);
          const double gqr = at(q, r);
          at(p, r) = c * gpr - s * gqr;
          at(q, r) = s * gpr + c * gqr;
        }
      }
    }
  }
  std::vector<double> eig(k);
  for (std::size_t i = 0; i < k; ++i) eig[i] = std::max(at(i, i), 0.0);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

RankOracleResult oracle_rank_select(const Tensor& w, double lambda, double mu, const CostModel& cost) {
  require(mu > 0.0 && lambda >= 0.0, "oracle_rank_select: need mu > 0, lambda >= 0");
  const std::vector<double> eig = oracle_squared_singular_values(w);
  RankOracleResult best;
  for (std::size_t r = 0; r <= eig.size(); ++r) {
    double tail = 0.0;
    for (std::size_t i = r; i < eig.size(); ++i) tail += eig[i];
    const double obj = lambda * cost.cost(r, w.rows(), w.cols()) + 0.5 * mu * tail;
    if (r == 0 || obj < best.objective) best = {r, obj};
  }
  return best;
}

double oracle_additive_l0_kmeans(std::span<const double> u, std::int64_t k) {
  require(!u.empty() && u.size() <= 8, "oracle_additive_l0_kmeans: need 1 <= P <= 8");
  require(k >= 1 && k <= 3, "oracle_additive_l0_kmeans: need 1 <= K <= 3");
  double best = INFINITY;
  // skip == P is the empty support; otherwise the sparse value at `skip`
  // absorbs that entry's residual completely.
  for (std::size_t skip = 0; skip <= u.size(); ++skip) {
    for_each_assignment(u.size(), static_cast<std::size_t>(k), [&](const std::vector<std::size_t>& z) {
      best = std::min(best, evaluate_assignment(u, z, static_cast<std::size_t>(k), skip).distortion);
    });
  }
  return best;
}

LcGlobalResult oracle_lc_global(const QuadraticModel& model, std::int64_t k) {
  require(model.blocks().size() == 1, "oracle_lc_global: expected a single-block model");
  const auto& b = model.blocks().front();
  const std::size_t p = b.target.size();
  require(p >= 1 && p <= 6, "oracle_lc_global: need 1 <= P <= 6");
  require(k >= 1, "oracle_lc_global: need K >= 1");
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), p);

  LcGlobalResult best;
  best.loss = INFINITY;
  std::vector<double> num(kk), den(kk), w(p);
  for_each_assignment(p, kk, [&](const std::vector<std::size_t>& z) {
    std::fill(num.begin(), num.end(), 0.0);
    std::fill(den.begin(), den.end(), 0.0);
    for (std::size_t i = 0; i < p; ++i) {
      num[z[i]] += b.curvature[i] * b.target[i];
      den[z[i]] += b.curvature[i];
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      w[i] = num[z[i]] / den[z[i]];
      loss += 0.5 * b.curvature[i] * (w[i] - b.target[i]) * (w[i] - b.target[i]);
    }
    if (loss < best.loss) {
      best.loss = loss;
      best.weights = w;
      best.codebook.clear();
      for (std::size_t c = 0; c < kk; ++c)
        if (den[c] > 0.0) best.codebook.push_back(num[c] / den[c]);
      std::sort(best.codebook.begin(), best.codebook.end());
    }
  });
  return best;
}

}  // namespace lc
