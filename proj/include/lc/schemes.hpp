#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lc/cstep.hpp"
#include "lc/forms.hpp"

namespace lc {

// Shape of the viewed parameters a scheme compresses. Vector views have
// rows == 1 and is_matrix == false.
struct ViewShape {
  std::size_t rows = 1;
  std::size_t cols = 0;
  bool is_matrix = false;

  std::size_t size() const { return rows * cols; }
  static ViewShape vector(std::size_t p) { return {1, p, false}; }
  static ViewShape matrix(std::size_t m, std::size_t n) { return {m, n, true}; }
};

// A compression type: the C step Π together with its parameters.
// Implementations must be pure; compress() may be called concurrently.
class CompressionScheme {
 public:
  virtual ~CompressionScheme() = default;

  // Config-file type name, e.g. "adaptive_quantization".
  virtual std::string name() const = 0;
  virtual std::string summary() const { return name(); }

  // Throws ArgumentError when the parameters do not fit the viewed shape.
  virtual void validate(const ViewShape& view) const = 0;

  // Solves the C step for target u. `previous` is the form from the last C
  // step of the same task (nullptr at initialization); exact solvers ignore it.
  virtual CStepResult compress(std::span<const double> u, const ViewShape& view, double mu,
                               const CompressedForm* previous) const = 0;

  // Penalty-form schemes minimize penalty(Θ) + (μ/2)||u - Δ(Θ)||² and need μ > 0.
  virtual bool is_penalty() const { return false; }
  virtual double penalty(const CompressedForm& form, const ViewShape& view) const;
};

using SchemePtr = std::shared_ptr<const CompressionScheme>;

// C-step objective in distortion units: ||u - Δ||² + (2/μ) penalty(Θ).
double c_step_objective(const CompressionScheme& scheme, const CompressedForm& form,
                        const ViewShape& view, double distortion, double mu);

class AdaptiveQuantization final : public CompressionScheme {
 public:
  enum class Method { kDynamicProgramming, kLloyd };
  explicit AdaptiveQuantization(std::int64_t k, Method method = Method::kDynamicProgramming,
                                std::uint64_t seed = 0)
      : k_(k), method_(method), seed_(seed) {}
  std::string name() const override { return "adaptive_quantization"; }
  std::string summary() const override;
  void validate(const ViewShape& view) const override;
  CStepResult compress(std::span<const double> u, const ViewShape& view, double mu,
                       const CompressedForm* previous) const override;
  std::int64_t k() const { return k_; }

 private:
  std::int64_t k_;
  Method method_;
  std::uint64_t seed_;
};

class BinarizeFixed final : public CompressionScheme {
 public:
  std::string name() const override { return "binarize_fixed"; }
  void validate(const ViewShape&) const override {}
  CStepResult compress(std::span<const double> u, const ViewShape&, double,
                       const CompressedForm*) const override {
    return binarize_fixed(u);
  }
};

class BinarizeScaled final : public CompressionScheme {
 public:
  std::string name() const override { return "binarize_scaled"; }
  void validate(const ViewShape&) const override {}
  CStepResult compress(std::span<const double> u, const ViewShape&, double,
                       const CompressedForm*) const override {
    return binarize_scaled(u);
  }
};

class TernarizeScaled final : public CompressionScheme {
 public:
  std::string name() const override { return "ternarize_scaled"; }
  void validate(const ViewShape&) const override {}
  CStepResult compress(std::span<const double> u, const ViewShape&, double,
                       const CompressedForm*) const override {
    return ternarize_scaled(u);
  }
};

class L0Constraint final : public CompressionScheme {
 public:
  explicit L0Constraint(std::int64_t kappa) : kappa_(kappa) {}
  std::string name() const override { return "l0_constraint"; }
  std::string summary() const override;
  void validate(const ViewShape& view) const override;
  CStepResult compress(std::span<const double> u, const ViewShape&, double,
                       const CompressedForm*) const override {
    return prune_l0_constraint(u, kappa_);
  }

 private:
  std::int64_t kappa_;
};

class L1Constraint final : public CompressionScheme {
 public:
  explicit L1Constraint(double kappa) : kappa_(kappa) {}
  std::string name() const override { return "l1_constraint"; }
  std::string summary() const override;
  void validate(const ViewShape& view) const override;
  CStepResult compress(std::span<const double> u, const ViewShape&, double,
                       const CompressedForm*) const override {
    return prune_l1_constraint(u, kappa_);
  }

 private:
  double kappa_;
};

class L0Penalty final : public CompressionScheme {
 public:
  explicit L0Penalty(double alpha) : alpha_(alpha) {}
  std::string name() const override { return "l0_penalty"; }
  std::string summary() const override;
  void validate(const ViewShape& view) const override;
  CStepResult compress(std::span<const double> u, const ViewShape&, double mu,
                       const CompressedForm*) const override {
    return prune_l0_penalty(u, alpha_, mu);
  }
  bool is_penalty() const override { return true; }
  double penalty(const CompressedForm& form, const ViewShape& view) const override;

 private:
  double alpha_;
};

class L1Penalty final : public CompressionScheme {
 public:
  explicit L1Penalty(double alpha) : alpha_(alpha) {}
  std::string name() const override { return "l1_penalty"; }
  std::string summary() const override;
  void validate(const ViewShape& view) const override;
  CStepResult compress(std::span<const double> u, const ViewShape&, double mu,
                       const CompressedForm*) const override {
    return prune_l1_penalty(u, alpha_, mu);
  }
  bool is_penalty() const override { return true; }
  double penalty(const CompressedForm& form, const ViewShape& view) const override;

 private:
  double alpha_;
};

class LowRank final : public CompressionScheme {
 public:
  explicit LowRank(std::int64_t rank) : rank_(rank) {}
  std::string name() const override { return "low_rank"; }
  std::string summary() const override;
  void validate(const ViewShape& view) const override;
  CStepResult compress(std::span<const double> u, const ViewShape& view, double mu,
                       const CompressedForm* previous) const override;

 private:
  std::int64_t rank_;
};

class RankSelection final : public CompressionScheme {
 public:
  RankSelection(double lambda, CostModel cost) : lambda_(lambda), cost_(cost) {}
  std::string name() const override;
  std::string summary() const override;
  void validate(const ViewShape& view) const override;
  CStepResult compress(std::span<const double> u, const ViewShape& view, double mu,
                       const CompressedForm* previous) const override;
  bool is_penalty() const override { return true; }
  double penalty(const CompressedForm& form, const ViewShape& view) const override;

 private:
  double lambda_;
  CostModel cost_;
};

struct AdditiveOptions {
  double relative_tol = 1e-10;  // stop when the sweep improves by < tol·||u||²
  int max_iters = 50;
};

// Sum of components, each solved by block coordinate descent on the residual
// left by the others. Component order is the order given.
class Additive final : public CompressionScheme {
 public:
  explicit Additive(std::vector<SchemePtr> components, AdditiveOptions options = {});
  std::string name() const override { return "additive"; }
  std::string summary() const override;
  void validate(const ViewShape& view) const override;
  CStepResult compress(std::span<const double> u, const ViewShape& view, double mu,
                       const CompressedForm* previous) const override;
  bool is_penalty() const override;
  double penalty(const CompressedForm& form, const ViewShape& view) const override;
  const std::vector<SchemePtr>& components() const { return components_; }

 private:
  std::vector<SchemePtr> components_;
  AdditiveOptions options_;
};

// Block coordinate descent over the components, all initialized to zero:
// each sweep re-solves component j on u - Σ_{k≠j} Δ_k. The objective
// (distortion plus scaled penalties) never increases. When `warm_start` holds
// an additive form with matching components, a second descent starts from it
// and the better of the two results is returned.
// Throws ArgumentError for fewer than two components or mismatched shapes.
CStepResult additive_cstep(std::span<const double> u, const ViewShape& view,
                           const std::vector<SchemePtr>& schemes, double mu,
                           const AdditiveOptions& options = {},
                           const CompressedForm* warm_start = nullptr);

}  // namespace lc
