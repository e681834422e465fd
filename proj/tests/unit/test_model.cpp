#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "lc/errors.hpp"
#include "lc/lstep.hpp"
#include "lc/model.hpp"

using namespace lc;
using lc::testing::gaussian_vector;
using lc::testing::temp_dir;
using lc::testing::toy_digits;

namespace {

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

QuadraticModel random_quadratic(std::uint64_t seed, std::size_t p) {
  Rng rng(seed);
  std::vector<double> a(p);
  for (double& x : a) x = rng.uniform(0.5, 2.0);
  return QuadraticModel(Tensor::vector(gaussian_vector(rng, p)), Tensor::vector(a));
}

}  // namespace

TEST_CASE("parameter store rejects duplicate names") {
  ParameterStore s;
  s.add("w", Tensor::vector({1}));
  CHECK_THROWS_AS(s.add("w", Tensor::vector({2})), ArgumentError);
  CHECK(s.index_of("w") == 0u);
  CHECK_FALSE(s.index_of("v").has_value());
  CHECK(s.total_elements() == 1);
}

TEST_CASE("mlp forward yields probability rows") {
  const Dataset d = toy_digits(20, 3);
  const MlpModel m({64, 16, 10}, Activation::kTanh, 4);
  const Tensor p = m.forward(d.inputs);
  REQUIRE(p.rows() == 20);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      CHECK(p(i, j) >= 0.0);
      s += p(i, j);
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  CHECK(m.parameters().index_of("l1.weight").has_value());
  CHECK(m.parameters().at("l2.bias").size() == 10);
  CHECK(m.parameters().at("l1.weight").shape() == Shape{16, 64});
}

TEST_CASE("cross-entropy at uniform and confident outputs") {
  const Dataset d = toy_digits(10, 5);
  const auto rows = all_rows(d);
  MlpModel m({64, 16, 10}, Activation::kRelu, 6);
  for (double& x : m.parameters().at("l2.weight").storage()) x = 0.0;
  for (double& x : m.parameters().at("l2.bias").storage()) x = 0.0;
  CHECK(std::abs(m.loss({&d, rows}) - std::log(10.0)) <= 1e-9);

  const std::size_t one[] = {3};
  m.parameters().at("l2.bias")[d.labels[3]] = 30.0;
  CHECK(m.loss({&d, one}) <= 1e-6);
}

TEST_CASE("mlp gradient matches finite differences") {
  const Dataset d = toy_digits(30, 7);
  const auto rows = all_rows(d);
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    MlpModel m({64, 12, 10}, act, 8);
    GradCheckOptions opt;
    opt.h = 1e-5;
    opt.coordinates = 80;
    opt.seed = 9;
    CHECK(finite_diff_gradcheck(m, {&d, rows}, opt) <= 1e-4);
  }
}

TEST_CASE("quadratic gradient check and zero gradient at the target") {
  QuadraticModel q = random_quadratic(1, 12);
  for (double& x : q.parameters()[0].value.storage()) x += 0.3;
  CHECK(finite_diff_gradcheck(q, {}) <= 1e-7);
  QuadraticModel at_min = random_quadratic(1, 12);
  for (const Tensor& g : at_min.gradient({})) {
    for (double x : g.storage()) CHECK(std::abs(x) <= 1e-12);
  }
  CHECK(at_min.loss({}) == 0.0);
  CHECK_THROWS_AS(finite_diff_gradcheck(q, {}, {1.0, 5, 0}), ArgumentError);
}

TEST_CASE("quadratic model validates curvature") {
  CHECK_THROWS_AS(QuadraticModel(Tensor::vector({1, 2}), Tensor::vector({1, 0})), ArgumentError);
  CHECK_THROWS_AS(QuadraticModel(Tensor::vector({1, 2}), Tensor::vector({1})), ShapeError);
}

TEST_CASE("sgd with no penalty reaches the quadratic minimum") {
  QuadraticModel q = random_quadratic(2, 8);
  for (double& x : q.parameters()[0].value.storage()) x = 0.0;
  LStepHyper h;
  h.lr_base = 0.1;
  h.decay = 1.0;
  h.epochs = 3000;
  const LStepOutcome out = sgd_l_step(q, nullptr, PenaltyTerm::none(q.parameters()), h);
  CHECK(out.loss_after <= 1e-8);
  CHECK(out.loss_before > out.loss_after);
}

TEST_CASE("sgd matches the closed-form penalized minimizer") {
  Rng rng(3);
  const std::vector<double> target = gaussian_vector(rng, 5);
  const std::vector<double> theta = gaussian_vector(rng, 5);
  QuadraticModel q(Tensor::vector(target), Tensor({5}, 1.0));
  const double mu = 3.0;
  PenaltyTerm pen;
  pen.mu = mu;
  pen.anchors = {Tensor::vector(theta)};
  LStepHyper h;
  h.lr_base = 0.05;
  h.decay = 1.0;
  h.epochs = 2000;
  sgd_l_step(q, nullptr, pen, h);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(std::abs(q.parameters()[0].value[i] - (target[i] + mu * theta[i]) / (1.0 + mu)) <= 1e-6);
  }
}

TEST_CASE("sgd with a small learning rate never increases the penalized loss") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    QuadraticModel q = random_quadratic(seed, 10);
    Rng rng(seed + 100);
    for (double& x : q.parameters()[0].value.storage()) x += rng.gaussian();
    PenaltyTerm pen;
    pen.mu = 0.5;
    pen.anchors = {Tensor::vector(gaussian_vector(rng, 10))};
    LStepHyper h;
    h.lr_base = 1e-3;
    h.epochs = 50;
    const LStepOutcome out = sgd_l_step(q, nullptr, pen, h);
    CHECK(out.loss_after <= out.loss_before);
  }
}

TEST_CASE("sgd reports divergence") {
  QuadraticModel q(Tensor::vector({1, 2}), Tensor::vector({1, 1}));
  for (double& x : q.parameters()[0].value.storage()) x = 5.0;
  LStepHyper h;
  h.lr_base = 1e3;
  h.momentum = 0.0;
  h.epochs = 500;
  CHECK_THROWS_AS(sgd_l_step(q, nullptr, PenaltyTerm::none(q.parameters()), h), DivergenceError);
}

TEST_CASE("mini-batch sgd is deterministic for a seed") {
  const Dataset d = toy_digits(64, 11);
  MlpModel a({64, 8, 10}, Activation::kTanh, 1);
  MlpModel b = a;
  LStepHyper h;
  h.epochs = 2;
  h.batch = 16;
  h.seed = 5;
  sgd_l_step(a, &d, PenaltyTerm::none(a.parameters()), h);
  sgd_l_step(b, &d, PenaltyTerm::none(b.parameters()), h);
  CHECK(a.parameters()[0].value == b.parameters()[0].value);
}

TEST_CASE("gradients do not depend on buffer placement") {
  const Dataset d = toy_digits(32, 12);
  const MlpModel m({64, 16, 10}, Activation::kTanh, 3);
  std::vector<std::size_t> rows(32);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<Tensor> first;
  m.loss_and_gradient({&d, rows}, first);
  std::vector<std::vector<double>> padding;
  for (std::size_t t = 1; t <= 16; ++t) {
    padding.emplace_back(t, 0.0);
    std::vector<Tensor> g;
    m.loss_and_gradient({&d, rows}, g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == first[i]);
  }
}

TEST_CASE("exact quadratic L step") {
  const QuadraticModel q(Tensor::vector({1, 0}), Tensor::vector({1, 2}));
  const Tensor w = exact_l_step_quadratic(q, Tensor::vector({0, 1}), Tensor::vector({0, 0}), 2.0);
  CHECK(std::abs(w[0] - 1.0 / 3.0) <= 1e-15);
  CHECK(std::abs(w[1] - 0.5) <= 1e-15);

  const Tensor at_zero = exact_l_step_quadratic(q, Tensor::vector({7, 7}), Tensor::vector({0, 0}), 0.0);
  CHECK(at_zero == q.blocks()[0].target);
  const Tensor huge = exact_l_step_quadratic(q, Tensor::vector({7, -7}), Tensor::vector({0, 0}), 1e12);
  CHECK(std::abs(huge[0] - 7.0) <= 1e-9);
  CHECK(std::abs(huge[1] + 7.0) <= 1e-9);
}

TEST_CASE("exact quadratic L step is stationary") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    QuadraticModel q = random_quadratic(seed, 6);
    Rng rng(seed);
    const Tensor theta = Tensor::vector(gaussian_vector(rng, 6));
    const Tensor lambda = Tensor::vector(gaussian_vector(rng, 6));
    const double mu = rng.uniform(0.1, 10.0);
    q.parameters()[0].value = exact_l_step_quadratic(q, theta, lambda, mu);
    PenaltyTerm pen;
    pen.mu = mu;
    Tensor anchor = theta;
    for (std::size_t i = 0; i < 6; ++i) anchor[i] += lambda[i] / mu;
    pen.anchors = {anchor};
    std::vector<Tensor> g = q.gradient({});
    pen.add_gradient(q.parameters(), g);
    for (double x : g[0].storage()) CHECK(std::abs(x) <= 1e-9);
  }
}

TEST_CASE("idx fixture round trip") {
  const auto dir = temp_dir("idx");
  Dataset d;
  d.inputs = Tensor::matrix({{0, 1, 2.0 / 255, 1.0 / 255}, {1, 0, 128.0 / 255, 0}});
  d.labels = {3, 7};
  save_mnist_idx(d, 2, 2, dir / "img", dir / "lbl");
  const Dataset back = load_mnist_idx(dir / "img", dir / "lbl");
  CHECK(back.inputs == d.inputs);
  CHECK(back.labels == d.labels);
  CHECK(back.dim() == 4);
  CHECK(back.head(1).size() == 1);
}

TEST_CASE("idx parse errors") {
  const auto dir = temp_dir("idx_bad");
  Dataset d;
  d.inputs = Tensor::matrix({{0, 1, 0, 1}});
  d.labels = {1};
  save_mnist_idx(d, 2, 2, dir / "img", dir / "lbl");
  try {
    load_mnist_idx(dir / "img", dir / "img");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::kBadMagic);
  }
  {
    std::ifstream in(dir / "img", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(dir / "short", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 1);
  }
  try {
    load_mnist_idx(dir / "short", dir / "lbl");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::kTruncated);
  }
  Dataset two = d;
  two.inputs = Tensor::matrix({{0, 1, 0, 1}, {1, 1, 1, 1}});
  two.labels = {1, 2};
  save_mnist_idx(two, 2, 2, dir / "img2", dir / "lbl2");
  try {
    load_mnist_idx(dir / "img2", dir / "lbl");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::kCountMismatch);
  }
  CHECK_THROWS_AS(load_mnist_idx(dir / "missing", dir / "lbl"), IoError);
}

TEST_CASE("official t10k files") {
  const char* dir = std::getenv("LC_DATA_DIR");
  if (!dir || !std::filesystem::exists(mnist_files_in(dir).test_images)) {
    MESSAGE("LC_DATA_DIR not set; skipping the t10k check");
    return;
  }
  const MnistFiles f = mnist_files_in(dir);
  const Dataset t = load_mnist_idx(f.test_images, f.test_labels);
  CHECK(t.size() == 10000);
  CHECK(t.dim() == 784);
  CHECK(std::filesystem::file_size(f.test_images) == 16 + 10000u * 784u);
}
