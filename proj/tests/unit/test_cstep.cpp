#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "lc/cstep.hpp"
#include "lc/errors.hpp"
#include "lc/linalg.hpp"
#include "lc/oracles.hpp"
#include "lc/schemes.hpp"

using namespace lc;
using lc::testing::gaussian_matrix;
using lc::testing::gaussian_vector;
using lc::testing::max_abs_diff;

namespace {

const QuantizedForm& quantized(const CStepResult& r) { return std::get<QuantizedForm>(r.form.value); }
const SparseForm& sparse(const CStepResult& r) { return std::get<SparseForm>(r.form.value); }

std::vector<double> values_of(const CStepResult& r) { return decompress(r.form); }

// Each solver's reported distortion equals the recomputed one, and
// recompressing its own output costs nothing.
template <class Solve>
void check_solver_properties(Solve solve, std::span<const double> u) {
  const CStepResult r = solve(u);
  CHECK(std::abs(r.distortion - distortion(u, r.form)) <= 1e-10 * std::max(1.0, r.distortion));
  const std::vector<double> d = decompress(r.form);
  CHECK(solve(d).distortion <= 1e-12);
}

}  // namespace

TEST_CASE("quantize_dp examples") {
  const std::vector<double> u{1, 2, 3, 10};
  const CStepResult r = quantize_dp(u, 2);
  CHECK(r.distortion == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(quantized(r).codebook == std::vector<double>{2, 10});

  const CStepResult all = quantize_dp(u, 4);
  CHECK(all.distortion == 0.0);
  CHECK(quantized(all).codebook == std::vector<double>{1, 2, 3, 10});

  const CStepResult one = quantize_dp(u, 1);
  CHECK(quantized(one).codebook[0] == doctest::Approx(4.0));
  CHECK(one.distortion == doctest::Approx(50.0));  // P·var = 4·12.5

  const std::vector<double> dup{1, 1, 2};
  CHECK(quantized(quantize_dp(dup, 3)).codebook == std::vector<double>{1, 2});
  CHECK_THROWS_AS(quantize_dp(u, 0), ArgumentError);
  CHECK_THROWS_AS(quantize_dp(u, 5), ArgumentError);
}

TEST_CASE("quantize_dp assignments are monotone on sorted input") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> u = gaussian_vector(rng, 40);
    std::sort(u.begin(), u.end());
    const CStepResult r = quantize_dp(u, 1 + static_cast<std::int64_t>(rng.below(6)));
    const auto& z = quantized(r).assignments;
    CHECK(std::is_sorted(z.begin(), z.end()));
  }
}

TEST_CASE("quantize_dp matches the exhaustive oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 1 + rng.below(12);
    const auto k = static_cast<std::int64_t>(1 + rng.below(std::min<std::size_t>(3, p)));
    const auto u = gaussian_vector(rng, p);
    CHECK(std::abs(quantize_dp(u, k).distortion - oracle_kmeans_exhaustive(u, k).distortion) <= 1e-9);
  }
}

TEST_CASE("quantize_dp on a large input agrees with a quadratic-time DP") {
  Rng rng(6);
  std::vector<double> u = gaussian_vector(rng, 300);
  std::vector<double> s = u;
  std::sort(s.begin(), s.end());
  const std::size_t p = s.size();
  const int k = 7;
  std::vector<double> pre(p + 1, 0.0), pre2(p + 1, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    pre[i + 1] = pre[i] + s[i];
    pre2[i + 1] = pre2[i] + s[i] * s[i];
  }
  auto cost = [&](std::size_t a, std::size_t b) {  // [a, b)
    const double n = static_cast<double>(b - a);
    const double sum = pre[b] - pre[a];
    return pre2[b] - pre2[a] - sum * sum / n;
  };
  std::vector<std::vector<double>> dp(k + 1, std::vector<double>(p + 1, INFINITY));
  dp[0][0] = 0.0;
  for (int c = 1; c <= k; ++c)
    for (std::size_t j = 1; j <= p; ++j)
      for (std::size_t i = c - 1; i < j; ++i) dp[c][j] = std::min(dp[c][j], dp[c - 1][i] + cost(i, j));
  CHECK(std::abs(quantize_dp(u, k).distortion - dp[k][p]) <= 1e-9);
}

TEST_CASE("quantize_lloyd") {
  const std::vector<double> sep{0, 0, 10, 10};
  const CStepResult r = quantize_lloyd(sep, 2, 1);
  CHECK(r.distortion == 0.0);
  CHECK(quantized(r).codebook == std::vector<double>{0, 10});

  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = gaussian_vector(rng, 2 + rng.below(30));
    const auto k = static_cast<std::int64_t>(1 + rng.below(std::min<std::size_t>(5, u.size())));
    CHECK(quantize_lloyd(u, k, trial).distortion >= quantize_dp(u, k).distortion - 1e-12);
  }
  const auto u = gaussian_vector(rng, 20);
  CHECK(quantize_lloyd(u, 1, 3).distortion == doctest::Approx(quantize_dp(u, 1).distortion).epsilon(1e-12));
}

TEST_CASE("quantize_lloyd_from never worsens its starting codebook") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = gaussian_vector(rng, 50);
    std::vector<double> start = gaussian_vector(rng, 3);
    std::sort(start.begin(), start.end());
    double initial = 0.0;
    for (double x : u) {
      double best = INFINITY;
      for (double c : start) best = std::min(best, (x - c) * (x - c));
      initial += best;
    }
    CHECK(quantize_lloyd_from(u, start, 3).distortion <= initial + 1e-12);
    CHECK(quantized(quantize_lloyd_from(u, std::span(start).first(1), 3)).codebook.size() <= 3);
  }
}

TEST_CASE("binarize_fixed") {
  CHECK(values_of(binarize_fixed(std::vector<double>{0.3, -2})) == std::vector<double>{1, -1});
  CHECK(values_of(binarize_fixed(std::vector<double>{0})) == std::vector<double>{1});
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = gaussian_vector(rng, 1 + rng.below(12));
    CHECK(std::abs(binarize_fixed(u).distortion - oracle_binarize_fixed_exhaustive(u)) <= 1e-12);
  }
}

TEST_CASE("binarize_scaled") {
  const CStepResult r = binarize_scaled(std::vector<double>{1, -2, 3});
  CHECK(values_of(r) == std::vector<double>{2, -2, 2});
  const CStepResult z = binarize_scaled(std::vector<double>{0, 0});
  CHECK(values_of(z) == std::vector<double>{0, 0});

  Rng rng(10);
  const auto u = gaussian_vector(rng, 25);
  const double d = binarize_scaled(u).distortion;
  for (int i = 0; i <= 10000; ++i) {
    const double c = 3.0 * i / 10000.0;
    double g = 0.0;
    for (double x : u) g += (x - (x > 0 ? c : -c)) * (x - (x > 0 ? c : -c));
    CHECK(d <= g + 1e-12);
  }
}

TEST_CASE("ternarize_scaled") {
  const CStepResult r = ternarize_scaled(std::vector<double>{2, 1.9, 0.1});
  CHECK(max_abs_diff(values_of(r), {1.95, 1.95, 0}) <= 1e-15);
  CHECK(r.distortion == doctest::Approx(0.015).epsilon(1e-12));
  const CStepResult s = ternarize_scaled(std::vector<double>{5, 0, 0});
  CHECK(values_of(s) == std::vector<double>{5, 0, 0});
  CHECK(s.distortion == 0.0);
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = gaussian_vector(rng, 1 + rng.below(12));
    CHECK(std::abs(ternarize_scaled(u).distortion - oracle_ternary_exhaustive(u).distortion) <= 1e-12);
  }
}

TEST_CASE("prune_l0_constraint") {
  const std::vector<double> u{3, -1, 0.5, 2};
  CHECK(values_of(prune_l0_constraint(u, 2)) == std::vector<double>{3, 0, 0, 2});
  CHECK(prune_l0_constraint(u, 4).distortion == 0.0);
  CHECK(prune_l0_constraint(u, 0).distortion == doctest::Approx(14.25));
  CHECK_THROWS_AS(prune_l0_constraint(u, 5), ArgumentError);
  CHECK_THROWS_AS(prune_l0_constraint(u, -1), ArgumentError);
}

TEST_CASE("prune_l0_constraint supports are scale invariant") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = gaussian_vector(rng, 30);
    std::vector<double> scaled = u;
    const double c = rng.uniform(0.01, 100.0);
    for (double& x : scaled) x *= c;
    CHECK(sparse(prune_l0_constraint(u, 7)).indices == sparse(prune_l0_constraint(scaled, 7)).indices);
  }
}

TEST_CASE("prune_l1_constraint") {
  CHECK(max_abs_diff(values_of(prune_l1_constraint(std::vector<double>{2, 1}, 1.0)), {1, 0}) <= 1e-15);
  const std::vector<double> inner{0.2, -0.3};
  CHECK(values_of(prune_l1_constraint(inner, 1.0)) == inner);
  CHECK(values_of(prune_l1_constraint(inner, 0.0)) == std::vector<double>{0, 0});
  CHECK_THROWS_AS(prune_l1_constraint(inner, -1.0), ArgumentError);
}

TEST_CASE("projection distortion is loosely Lipschitz") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = gaussian_vector(rng, 20);
    auto v = u;
    for (double& x : v) x += 0.1 * rng.gaussian();
    const double duv = std::sqrt(squared_distance(u, v));
    for (auto solve : {+[](std::span<const double> x) { return prune_l0_constraint(x, 5); },
                       +[](std::span<const double> x) { return prune_l1_constraint(x, 2.0); }}) {
      const double dv = solve(v).distortion;
      CHECK(solve(u).distortion <= duv * duv + dv + 2.0 * duv * std::sqrt(dv) + 1e-12);
    }
  }
}

TEST_CASE("prune_l0_penalty") {
  CHECK(values_of(prune_l0_penalty(std::vector<double>{3, 1.5, -2}, 2.0, 1.0)) == std::vector<double>{3, 0, 0});
  const std::vector<double> u{0.1, -4};
  CHECK(values_of(prune_l0_penalty(u, 0.0, 1.0)) == u);
  CHECK_THROWS_AS(prune_l0_penalty(u, 1.0, 0.0), ArgumentError);
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = gaussian_vector(rng, 1 + rng.below(12));
    const double alpha = rng.uniform(0.0, 1.0), mu = rng.uniform(0.5, 5.0);
    const CStepResult r = prune_l0_penalty(v, alpha, mu);
    const auto oracle = oracle_l0_penalty_exhaustive(v, alpha, mu);
    const double obj = alpha * static_cast<double>(sparse(r).nnz()) + 0.5 * mu * r.distortion;
    CHECK(std::abs(obj - oracle.objective) <= 1e-12);
  }
}

TEST_CASE("prune_l1_penalty") {
  CHECK(values_of(prune_l1_penalty(std::vector<double>{3, -0.5}, 2.0, 2.0)) == std::vector<double>{2, 0});
  const std::vector<double> u{0.1, -4};
  CHECK(values_of(prune_l1_penalty(u, 0.0, 1.0)) == u);

  Rng rng(15);
  const auto v = gaussian_vector(rng, 10);
  const double alpha = 0.4, mu = 1.3;
  auto objective = [&](const std::vector<double>& t) {
    double l1 = 0.0;
    for (double x : t) l1 += std::abs(x);
    return alpha * l1 + 0.5 * mu * squared_distance(v, t);
  };
  const auto theta = values_of(prune_l1_penalty(v, alpha, mu));
  const double best = objective(theta);
  for (int i = 0; i < 10000; ++i) {
    auto t = theta;
    for (double& x : t) x += 0.01 * rng.gaussian();
    CHECK(best <= objective(t) + 1e-12);
  }
}

TEST_CASE("lowrank_fixed") {
  const Tensor d = Tensor::matrix({{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
  CHECK(lowrank_fixed(d, 2).distortion == doctest::Approx(1.0).epsilon(1e-12));
  Rng rng(16);
  const Tensor w = gaussian_matrix(rng, 8, 5);
  const double fro2 = squared_norm(w.values());
  CHECK(lowrank_fixed(w, 5).distortion <= 1e-10 * fro2);
  const auto eig = oracle_squared_singular_values(w);
  CHECK(std::abs(lowrank_fixed(w, 2).distortion - (eig[2] + eig[3] + eig[4])) <= 1e-8 * fro2);
  CHECK_THROWS_AS(lowrank_fixed(w, 6), ArgumentError);
}

TEST_CASE("rank_select") {
  const Tensor d = Tensor::matrix({{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
  const RankSelectionResult r = rank_select(d, 1.0, 2.0, CostModel{CostModel::Kind::kStorage, 1.0});
  CHECK(r.rank == 1);
  CHECK(r.objective == doctest::Approx(11.0).epsilon(1e-12));

  const Tensor rank2 = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 0}});
  CHECK(rank_select(rank2, 0.0, 1.0, {}).rank == 2);
  CHECK(rank_select(d, 0.0, 1.0, {}).rank == 3);
  const RankSelectionResult huge = rank_select(d, 1e9, 1.0, {});
  CHECK(huge.rank == 0);
  CHECK(values_of(huge.result) == std::vector<double>(9, 0.0));
}

TEST_CASE("additive combinations") {
  const std::vector<double> u{5, 0.1};
  const std::vector<SchemePtr> schemes{std::make_shared<L0Constraint>(1), std::make_shared<BinarizeScaled>()};
  const CStepResult both = additive_cstep(u, ViewShape::vector(2), schemes, 1.0);
  CHECK(both.distortion <= prune_l0_constraint(u, 1).distortion + 1e-12);
  CHECK(both.distortion <= binarize_scaled(u).distortion + 1e-12);

  const std::vector<SchemePtr> keep_all{std::make_shared<L0Constraint>(2), std::make_shared<BinarizeScaled>()};
  const CStepResult exact = additive_cstep(u, ViewShape::vector(2), keep_all, 1.0);
  CHECK(exact.distortion <= 1e-24);
  CHECK_THROWS_AS(additive_cstep(u, ViewShape::vector(2), {schemes[0]}, 1.0), ArgumentError);
}

TEST_CASE("every solver: recomputed distortion and fixed point") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = gaussian_vector(rng, 16);
    check_solver_properties([](std::span<const double> x) { return quantize_dp(x, 3); }, u);
    check_solver_properties([](std::span<const double> x) { return quantize_lloyd(x, 3, 1); }, u);
    check_solver_properties([](std::span<const double> x) { return binarize_fixed(x); }, u);
    check_solver_properties([](std::span<const double> x) { return binarize_scaled(x); }, u);
    check_solver_properties([](std::span<const double> x) { return ternarize_scaled(x); }, u);
    check_solver_properties([](std::span<const double> x) { return prune_l0_constraint(x, 4); }, u);
    check_solver_properties([](std::span<const double> x) { return prune_l1_constraint(x, 1.5); }, u);
    check_solver_properties(
        [](std::span<const double> x) { return lowrank_fixed(Tensor({4, 4}, {x.begin(), x.end()}), 2); }, u);
  }
}

TEST_CASE("scheme validation against the view") {
  CHECK_THROWS_AS(LowRank(500).validate(ViewShape::matrix(300, 100)), ArgumentError);
  CHECK_NOTHROW(LowRank(10).validate(ViewShape::matrix(300, 100)));
  CHECK_THROWS_AS(LowRank(2).validate(ViewShape::vector(10)), ArgumentError);
  CHECK_THROWS_AS(AdaptiveQuantization(11).validate(ViewShape::vector(10)), ArgumentError);
  CHECK_THROWS_AS(L0Constraint(11).validate(ViewShape::vector(10)), ArgumentError);
}
