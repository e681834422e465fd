#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lc/cstep.hpp"
#include "lc/errors.hpp"
#include "lc/random.hpp"

namespace lc {

namespace {

void check_k(std::size_t p, std::int64_t k) {
  if (k <= 0) throw ArgumentError("quantize: codebook size K must be >= 1, got " + std::to_string(k));
  if (static_cast<std::uint64_t>(k) > p) {
    throw ArgumentError("quantize: codebook size K=" + std::to_string(k) +
                        " exceeds the number of values P=" + std::to_string(p));
  }
}

// Codebook entry = plain mean of the values assigned to it, accumulated in
// input order so that every quantizer produces bit-identical means.
std::vector<double> cluster_means(std::span<const double> u, const std::vector<std::uint32_t>& z,
                                  std::size_t k) {
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    sum[z[i]] += u[i];
    ++count[z[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (count[c]) sum[c] /= static_cast<double>(count[c]);
  return sum;
}

// Sorts the codebook, merges equal entries and drops unused ones.
QuantizedForm canonicalize(std::vector<double> centers, std::vector<std::uint32_t> z) {
  std::vector<bool> used(centers.size(), false);
  for (auto zi : z) used[zi] = true;
  std::vector<std::uint32_t> order;
  for (std::uint32_t c = 0; c < centers.size(); ++c)
    if (used[c]) order.push_back(c);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return centers[a] < centers[b]; });
  std::vector<std::uint32_t> remap(centers.size(), 0);
  QuantizedForm out;
  for (std::uint32_t c : order) {
    if (out.codebook.empty() || out.codebook.back() != centers[c]) out.codebook.push_back(centers[c]);
    remap[c] = static_cast<std::uint32_t>(out.codebook.size() - 1);
  }
  out.assignments.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.assignments[i] = remap[z[i]];
  return out;
}

CStepResult finish(std::span<const double> u, QuantizedForm form) {
  CStepResult r{CompressedForm(std::move(form)), 0.0};
  r.distortion = distortion(u, r.form);
  return r;
}

// Weighted sum of squared errors of distinct values [i, j) around their mean,
// from prefix sums of (centered) values.
struct SegmentCost {
  std::vector<double> w, s1, s2;

  double operator()(std::size_t i, std::size_t j) const {
    const double n = w[j] - w[i];
    const double s = s1[j] - s1[i];
    const double c = (s2[j] - s2[i]) - s * s / n;
    return c > 0.0 ? c : 0.0;
  }
};

class DpLayer {
 public:
  DpLayer(const SegmentCost& cost, const std::vector<double>& prev, std::vector<double>& cur,
          std::vector<std::uint32_t>& split, std::size_t k)
      : cost_(cost), prev_(prev), cur_(cur), split_(split), k_(k) {}

  // Fills cur[j] for j in [jlo, jhi] knowing the optimal split lies in [olo, ohi].
  void solve(std::size_t jlo, std::size_t jhi, std::size_t olo, std::size_t ohi) {
    if (jlo > jhi) return;
    const std::size_t j = jlo + (jhi - jlo) / 2;
    const std::size_t lo = std::max(olo, k_ - 1);
    const std::size_t hi = std::min(ohi, j - 1);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = lo;
    for (std::size_t i = lo; i <= hi; ++i) {
      const double v = prev_[i] + cost_(i, j);
      if (v < best) {
        best = v;
        arg = i;
      }
    }
    cur_[j] = best;
    split_[j] = static_cast<std::uint32_t>(arg);
    if (j > jlo) solve(jlo, j - 1, olo, arg);
    solve(j + 1, jhi, arg, ohi);
  }

 private:
  const SegmentCost& cost_;
  const std::vector<double>& prev_;
  std::vector<double>& cur_;
  std::vector<std::uint32_t>& split_;
  std::size_t k_;
};

// Lloyd iterations from the given centers until the assignments repeat or
// 300 iterations pass. Every step is non-increasing in distortion.
CStepResult lloyd_iterate(std::span<const double> u, std::vector<double> centers) {
  const std::size_t p = u.size();
  const std::size_t k = centers.size();
  std::vector<std::uint32_t> z(p, 0);
  std::vector<std::uint32_t> previous;
  std::vector<std::size_t> order(k);
  std::vector<double> sorted_centers(k);
  for (int iter = 0; iter < 300; ++iter) {
    // Assignment: nearest center (ties to the lower center value).
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return centers[a] < centers[b]; });
    for (std::size_t c = 0; c < k; ++c) sorted_centers[c] = centers[order[c]];
    for (std::size_t i = 0; i < p; ++i) {
      auto it = std::lower_bound(sorted_centers.begin(), sorted_centers.end(), u[i]);
      std::size_t hi = static_cast<std::size_t>(it - sorted_centers.begin());
      std::size_t best;
      if (hi == 0) {
        best = 0;
      } else if (hi == k) {
        best = k - 1;
      } else {
        best = (u[i] - sorted_centers[hi - 1] <= sorted_centers[hi] - u[i]) ? hi - 1 : hi;
      }
      z[i] = static_cast<std::uint32_t>(order[best]);
    }
    if (z == previous) break;
    previous = z;

    // Update step; empty clusters move to the worst-fit point.
    std::vector<std::size_t> count(k, 0);
    for (auto zi : z) ++count[zi];
    std::vector<double> means = cluster_means(u, z, k);
    for (std::size_t c = 0; c < k; ++c)
      if (count[c]) centers[c] = means[c];
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c]) continue;
      std::size_t worst = 0;
      double worst_err = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        const double e = std::abs(u[i] - centers[z[i]]);
        if (e > worst_err) {
          worst_err = e;
          worst = i;
        }
      }
      if (worst_err == 0.0) break;
      --count[z[worst]];
      centers[c] = u[worst];
      z[worst] = static_cast<std::uint32_t>(c);
      count[c] = 1;
    }
  }
  std::vector<double> means = cluster_means(u, z, k);
  return finish(u, canonicalize(std::move(means), std::move(z)));
}

}  // namespace

CStepResult quantize_dp(std::span<const double> u, std::int64_t k_requested) {
  check_k(u.size(), k_requested);
  if (!all_finite(u)) throw NumericError("quantize_dp: non-finite input");

  std::vector<double> sorted(u.begin(), u.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  std::vector<double> weight;
  for (double x : sorted) {
    if (distinct.empty() || distinct.back() != x) {
      distinct.push_back(x);
      weight.push_back(1.0);
    } else {
      weight.back() += 1.0;
    }
  }
  const std::size_t d = distinct.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_requested), d);

  const double shift = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
  SegmentCost cost;
  cost.w.assign(d + 1, 0.0);
  cost.s1.assign(d + 1, 0.0);
  cost.s2.assign(d + 1, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double x = distinct[i] - shift;
    cost.w[i + 1] = cost.w[i] + weight[i];
    cost.s1[i + 1] = cost.s1[i] + weight[i] * x;
    cost.s2[i + 1] = cost.s2[i] + weight[i] * x * x;
  }

  // splits[c][j]: start of the last segment when the first j distinct values
  // form c + 1 clusters.
  std::vector<std::vector<std::uint32_t>> splits(k, std::vector<std::uint32_t>(d + 1, 0));
  std::vector<double> prev(d + 1, std::numeric_limits<double>::infinity());
  std::vector<double> cur(d + 1, std::numeric_limits<double>::infinity());
  for (std::size_t j = 1; j <= d; ++j) prev[j] = cost(0, j);
  for (std::size_t c = 1; c < k; ++c) {
    std::fill(cur.begin(), cur.end(), std::numeric_limits<double>::infinity());
    DpLayer layer(cost, prev, cur, splits[c], c + 1);
    layer.solve(c + 1, d, c, d - 1);
    std::swap(prev, cur);
  }

  // Backtrack segment boundaries over the distinct values.
  std::vector<std::uint32_t> segment_of(d, 0);
  std::size_t end = d;
  for (std::size_t c = k; c-- > 0;) {
    const std::size_t start = c == 0 ? 0 : splits[c][end];
    for (std::size_t i = start; i < end; ++i) segment_of[i] = static_cast<std::uint32_t>(c);
    end = start;
  }

  std::vector<std::uint32_t> z(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), u[i]);
    z[i] = segment_of[static_cast<std::size_t>(it - distinct.begin())];
  }
  std::vector<double> means = cluster_means(u, z, k);
  return finish(u, canonicalize(std::move(means), std::move(z)));
}

CStepResult quantize_lloyd(std::span<const double> u, std::int64_t k_requested, std::uint64_t seed) {
  check_k(u.size(), k_requested);
  if (!all_finite(u)) throw NumericError("quantize_lloyd: non-finite input");
  const std::size_t p = u.size();
  const std::size_t k = static_cast<std::size_t>(k_requested);
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<double> centers;
  centers.reserve(k);
  centers.push_back(u[rng.below(p)]);
  std::vector<double> d2(p);
  for (std::size_t i = 0; i < p; ++i) d2[i] = (u[i] - centers[0]) * (u[i] - centers[0]);
  while (centers.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      pick = p - 1;
      for (std::size_t i = 0; i < p; ++i) {
        r -= d2[i];
        if (r < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(p);
    }
    centers.push_back(u[pick]);
    for (std::size_t i = 0; i < p; ++i) {
      const double e = (u[i] - u[pick]) * (u[i] - u[pick]);
      d2[i] = std::min(d2[i], e);
    }
  }

  return lloyd_iterate(u, std::move(centers));
}

CStepResult quantize_lloyd_from(std::span<const double> u, std::span<const double> codebook,
                                std::int64_t k_requested) {
  check_k(u.size(), k_requested);
  if (!all_finite(u)) throw NumericError("quantize_lloyd_from: non-finite input");
  const std::size_t k = static_cast<std::size_t>(k_requested);
  if (codebook.empty() || codebook.size() > k) {
    throw ArgumentError("quantize_lloyd_from: initial codebook must hold 1..K entries");
  }
  std::vector<double> centers(codebook.begin(), codebook.end());
  // Missing centers start at the worst-fit values, one at a time.
  while (centers.size() < k) {
    std::size_t worst = 0;
    double worst_err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      double e = std::numeric_limits<double>::infinity();
      for (double c : centers) e = std::min(e, std::abs(u[i] - c));
      if (e > worst_err) {
        worst_err = e;
        worst = i;
      }
    }
    if (worst_err == 0.0) break;
    centers.push_back(u[worst]);
  }
  return lloyd_iterate(u, std::move(centers));
}

CStepResult binarize_fixed(std::span<const double> u) {
  QuantizedForm q;
  q.codebook = {-1.0, 1.0};
  q.assignments.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) q.assignments[i] = u[i] < 0.0 ? 0u : 1u;
  return finish(u, std::move(q));
}

CStepResult binarize_scaled(std::span<const double> u) {
  double a = 0.0;
  for (double x : u) a += std::abs(x);
  if (!u.empty()) a /= static_cast<double>(u.size());
  QuantizedForm q;
  q.assignments.assign(u.size(), 0u);
  if (a == 0.0) {
    q.codebook = {0.0};
    return finish(u, std::move(q));
  }
  q.codebook = {-a, a};
  for (std::size_t i = 0; i < u.size(); ++i) q.assignments[i] = u[i] > 0.0 ? 1u : 0u;
  return finish(u, std::move(q));
}

CStepResult ternarize_scaled(std::span<const double> u) {
  const std::size_t p = u.size();
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(u[a]) > std::abs(u[b]); });
  double prefix = 0.0;
  double best_score = 0.0;
  double best_sum = 0.0;
  std::size_t best_k = 0;
  for (std::size_t k = 1; k <= p; ++k) {
    prefix += std::abs(u[order[k - 1]]);
    const double score = prefix * prefix / static_cast<double>(k);
    if (score > best_score) {
      best_score = score;
      best_sum = prefix;
      best_k = k;
    }
  }
  QuantizedForm q;
  if (best_k == 0) {
    q.codebook = {0.0};
    q.assignments.assign(p, 0u);
    return finish(u, std::move(q));
  }
  const double c = best_sum / static_cast<double>(best_k);
  q.codebook = {-c, 0.0, c};
  q.assignments.assign(p, 1u);
  for (std::size_t t = 0; t < best_k; ++t) {
    const std::size_t i = order[t];
    q.assignments[i] = u[i] < 0.0 ? 0u : 2u;
  }
  return finish(u, std::move(q));
}

}  // namespace lc
