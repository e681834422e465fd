#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lc/errors.hpp"
#include "lc/forms.hpp"
#include "lc/lstep.hpp"
#include "lc/model.hpp"
#include "lc/schemes.hpp"

namespace lc {

// How a parameter group is presented to its compression scheme.
struct ViewKind {
  bool matrix = false;
  std::size_t rows = 0;
  std::size_t cols = 0;

  static ViewKind as_vector() { return {}; }
  static ViewKind as_matrix(std::size_t rows, std::size_t cols) { return {true, rows, cols}; }
  bool operator==(const ViewKind&) const = default;
};

// (parameters) -> (view, scheme). Additive combinations are expressed by an
// Additive scheme.
struct CompressionTask {
  std::vector<std::string> parameters;
  ViewKind view;
  SchemePtr scheme;
};

enum class ValidationCode {
  kNoTasks,
  kEmptyGroup,
  kUnknownParameter,
  kDuplicateInGroup,
  kOverlappingGroups,
  kMatrixViewMultiTensor,
  kMatrixViewShape,
  kMissingScheme,
  kSchemeParameter,
};

std::string to_string(ValidationCode code);

class ValidationError : public ArgumentError {
 public:
  ValidationError(ValidationCode code, std::size_t task, const std::string& what)
      : ArgumentError("task " + std::to_string(task) + ": " + to_string(code) + ": " + what),
        code_(code),
        task_(task) {}
  ValidationCode code() const { return code_; }
  std::size_t task_index() const { return task_; }

 private:
  ValidationCode code_;
  std::size_t task_;
};

struct ValidatedTask {
  CompressionTask task;
  std::vector<std::size_t> indices;  // positions in the parameter store, in group order
  ViewShape shape;
};

struct Plan {
  std::vector<ValidatedTask> tasks;
};

// Checks names, disjointness, view shapes and scheme parameters.
Plan validate_tasks(const ParameterStore& params, const std::vector<CompressionTask>& tasks);

// Viewed parameters of one task, flattened row-major (a matrix view is the
// single tensor's storage reinterpreted as rows x cols).
std::vector<double> gather(const ParameterStore& params, const ValidatedTask& task);
void scatter(ParameterStore& params, const ValidatedTask& task, std::span<const double> values);

enum class ScheduleMode { kAugmentedLagrangian, kQuadraticPenalty };

std::string to_string(ScheduleMode mode);

struct ScheduleSpec {
  double mu0 = 9e-5;
  double a = 1.1;
  int steps = 40;
  ScheduleMode mode = ScheduleMode::kAugmentedLagrangian;
  // Stop once ||w - Δ(Θ)|| <= stop_tol_relative * ||w̄|| over the covered
  // parameters, or below stop_tol_absolute when that is set.
  double stop_tol_relative = 1e-6;
  std::optional<double> stop_tol_absolute;

  // μ for L step i (0-based): μ0 a^i.
  double mu(int i) const;
  void validate() const;
};

struct TaskState {
  CompressedForm theta;
  std::vector<double> lambda;  // viewed length; all zero in quadratic-penalty mode
};

struct EngineState {
  std::vector<TaskState> tasks;
};

struct CStepStats {
  double distortion = 0.0;      // ||u - Δ(Θ_new)||²
  double pre_distortion = 0.0;  // ||u - Δ(Θ_prev)||², NaN at initialization
  double objective = 0.0;       // distortion + (2/μ) penalty
  double pre_objective = 0.0;
};

struct CStepOptions {
  bool sequential = false;
  // Initialization: u = w, no previous Θ, and `mu` only weighs penalty schemes.
  bool init = false;
};

// One C step for every task: u = gather(w) - λ/μ, Θ = Π(u). Tasks run
// concurrently unless options.sequential. Solver errors are rethrown with the
// task index in the message.
std::vector<CStepStats> c_step_all(const ParameterStore& params, const Plan& plan, EngineState& state,
                                   double mu, const CStepOptions& options = {});

// Direct compression: state with Θ = Π(w) and λ = 0.
EngineState init_state(const ParameterStore& params, const Plan& plan, double penalty_mu,
                       std::vector<CStepStats>* stats = nullptr, bool sequential = false);

// λ ← λ - μ (w - Δ(Θ)) on the viewed parameters.
void multipliers_step(const ParameterStore& params, const Plan& plan, EngineState& state, double mu);

// ||w - Δ(Θ)|| jointly over all tasks.
double mismatch(const ParameterStore& params, const Plan& plan, const EngineState& state);

// Penalty handed to the L step: anchors Δ(Θ) + λ/μ on covered parameters.
PenaltyTerm make_penalty(const ParameterStore& params, const Plan& plan, const EngineState& state,
                         double mu);

// Copy of the model whose covered parameters are replaced by Δ(Θ).
std::unique_ptr<LossModel> compressed_model(const LossModel& model, const Plan& plan,
                                            const EngineState& state);

struct StepRecord {
  int step = 0;       // 0 is the direct-compression initialization
  double mu = 0.0;    // 0 at initialization
  std::optional<double> l_loss_before;
  std::optional<double> l_loss_after;
  std::vector<CStepStats> c_steps;  // one per task
  double mismatch = 0.0;
  std::optional<double> train_err;  // on the compressed model Δ(Θ)
  std::optional<double> test_err;
  std::optional<double> train_err_w;  // on the uncompressed working weights w
  std::optional<double> test_err_w;

  double c_distortion() const;
  bool operator==(const StepRecord&) const = default;
};

struct TaskSummary {
  std::string parameters;  // comma-joined names
  std::string view;        // "vector" or "matrix(RxC)"
  std::string scheme;      // CompressionScheme::summary()
  std::string form;        // describe(Θ)
  double storage_bits = 0.0;
  bool operator==(const TaskSummary&) const = default;
};

struct RatioReport {
  double reference_bits = 0.0;       // 32 bits per model parameter
  double compressed_bits = 0.0;      // compressed tasks plus 32 bits per uncovered parameter
  double ratio = 0.0;                // reference / compressed
  double covered_reference_bits = 0.0;
  double covered_compressed_bits = 0.0;
  double covered_ratio = 0.0;        // over compressed parameters only
  bool operator==(const RatioReport&) const = default;
};

struct RunReport {
  std::string config;  // echo of the configuration, free-form (JSON in the CLI)
  std::vector<StepRecord> records;
  bool converged = false;
  std::optional<std::string> aborted;  // reason when the run stopped on an error
  RatioReport ratio;
  std::vector<TaskSummary> tasks;
  bool operator==(const RunReport&) const = default;
};

// Bits needed to store a form under the accounting: quantized K·32 +
// P·ceil(log2 K); sparse nnz·(32 + ceil(log2 P)); low-rank 32·r·(m + n);
// additive the sum of its components.
double storage_bits(const CompressedForm& form);

RatioReport compression_ratio(const ParameterStore& params, const Plan& plan, const EngineState& state);

std::vector<TaskSummary> summarize_tasks(const Plan& plan, const EngineState& state);

enum class Severity { kWarning, kViolation };

struct MonitorEvent {
  Severity severity;
  int step;
  std::optional<std::size_t> task;
  std::string message;
};

// WARNING when an L step does not reduce its penalized loss; VIOLATION when a
// C step ends above ||u - Δ(Θ_prev)||² (objective units for penalty schemes)
// by more than 1e-10 relative.
std::vector<MonitorEvent> monitor_check(const std::vector<StepRecord>& history);

using LStepFn = std::function<LStepOutcome(LossModel& model, const PenaltyTerm& penalty, int step_index)>;

struct EvalResult {
  std::optional<double> train_err;
  std::optional<double> test_err;
};
using EvalFn = std::function<EvalResult(const LossModel& model)>;

struct RunOptions {
  bool sequential = false;
  int eval_every = 1;             // evaluate every n-th step; init and last step always
  bool eval_uncompressed = false;  // also evaluate the working weights w
  std::function<void(const StepRecord&)> on_step;
};

struct RunResult {
  RunReport report;
  EngineState state;
};

// Thrown when the L step diverges; carries the history up to that point.
class RunAborted : public DivergenceError {
 public:
  RunAborted(const DivergenceError& cause, RunReport report)
      : DivergenceError(cause.what(), cause.epoch()), report_(std::move(report)) {}
  const RunReport& report() const { return report_; }

 private:
  RunReport report_;
};

// The LC loop: Θ = Π(w̄), λ = 0; then for μ_i: L step, C step, multipliers
// step (augmented Lagrangian only), evaluation, and a stop test on the
// mismatch. The model keeps its uncompressed working weights w; use
// compressed_model() for the deliverable Δ(Θ).
RunResult run(LossModel& model, const Plan& plan, const ScheduleSpec& schedule, const LStepFn& l_step,
              const EvalFn& eval, const RunOptions& options = {});

}  // namespace lc
