#include <cmath>
#include <future>
#include <limits>

#include "lc/engine.hpp"

namespace lc {

namespace {

// Rethrows a solver error with the failing task identified.
[[noreturn]] void rethrow_for_task(std::size_t t, const ValidatedTask& task) {
  const std::string prefix = "task " + std::to_string(t) + " (" + task.task.scheme->summary() + "): ";
  try {
    throw;
  } catch (const ArgumentError& e) {
    throw ArgumentError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  }
}

CStepStats solve_task(const ParameterStore& params, const ValidatedTask& vt, std::size_t t,
                      TaskState& ts, double mu, bool init) {
  try {
    std::vector<double> u = gather(params, vt);
    const CompressionScheme& scheme = *vt.task.scheme;
    CStepStats stats;
    const CompressedForm* previous = nullptr;
    if (init) {
      stats.pre_distortion = std::numeric_limits<double>::quiet_NaN();
      stats.pre_objective = stats.pre_distortion;
    } else {
      if (mu > 0.0) {
        for (std::size_t i = 0; i < u.size(); ++i) u[i] -= ts.lambda[i] / mu;
      }
      previous = &ts.theta;
      stats.pre_distortion = distortion(u, ts.theta);
      stats.pre_objective = c_step_objective(scheme, ts.theta, vt.shape, stats.pre_distortion, mu);
    }
    CStepResult r = scheme.compress(u, vt.shape, mu, previous);
    if (decompressed_size(r.form) != u.size()) {
      throw ShapeError("solver returned a form of " + std::to_string(decompressed_size(r.form)) +
                       " elements for " + std::to_string(u.size()));
    }
    stats.distortion = r.distortion;
    stats.objective = c_step_objective(scheme, r.form, vt.shape, r.distortion, mu);
    ts.theta = std::move(r.form);
    return stats;
  } catch (const Error&) {
    rethrow_for_task(t, vt);
  }
}

void check_state(const Plan& plan, const EngineState& state) {
  if (state.tasks.size() != plan.tasks.size()) {
    throw ArgumentError("engine state holds " + std::to_string(state.tasks.size()) + " tasks, plan has " +
                        std::to_string(plan.tasks.size()));
  }
}

}  // namespace

std::string to_string(ScheduleMode mode) {
  return mode == ScheduleMode::kAugmentedLagrangian ? "augmented_lagrangian" : "quadratic_penalty";
}

double ScheduleSpec::mu(int i) const { return mu0 * std::pow(a, i); }

void ScheduleSpec::validate() const {
  if (!(mu0 > 0.0) || !std::isfinite(mu0)) throw ArgumentError("schedule: mu0 must be finite and > 0");
  if (!(a > 1.0) || !std::isfinite(a)) throw ArgumentError("schedule: a must be finite and > 1");
  if (steps < 0) throw ArgumentError("schedule: steps must be >= 0");
  if (!(stop_tol_relative >= 0.0)) throw ArgumentError("schedule: stop_tol_relative must be >= 0");
  if (stop_tol_absolute && !(*stop_tol_absolute >= 0.0)) {
    throw ArgumentError("schedule: stop_tol_absolute must be >= 0");
  }
}

double StepRecord::c_distortion() const {
  double total = 0.0;
  for (const CStepStats& s : c_steps) total += s.distortion;
  return total;
}

std::vector<CStepStats> c_step_all(const ParameterStore& params, const Plan& plan, EngineState& state,
                                   double mu, const CStepOptions& options) {
  if (options.init) {
    state.tasks.resize(plan.tasks.size());
    for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
      state.tasks[t].lambda.assign(plan.tasks[t].shape.size(), 0.0);
    }
  }
  check_state(plan, state);
  if (!(mu >= 0.0)) throw ArgumentError("c_step_all: mu must be >= 0");

  const std::size_t n = plan.tasks.size();
  std::vector<CStepStats> stats(n);
  if (options.sequential || n == 1) {
    for (std::size_t t = 0; t < n; ++t) {
      stats[t] = solve_task(params, plan.tasks[t], t, state.tasks[t], mu, options.init);
    }
    return stats;
  }
  std::vector<std::future<CStepStats>> futures;
  futures.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    futures.push_back(std::async(std::launch::async, [&, t] {
      return solve_task(params, plan.tasks[t], t, state.tasks[t], mu, options.init);
    }));
  }
  // Wait for every task before surfacing the first error.
  for (auto& f : futures) f.wait();
  for (std::size_t t = 0; t < n; ++t) stats[t] = futures[t].get();
  return stats;
}

EngineState init_state(const ParameterStore& params, const Plan& plan, double penalty_mu,
                       std::vector<CStepStats>* stats, bool sequential) {
  EngineState state;
  auto s = c_step_all(params, plan, state, penalty_mu, {sequential, true});
  if (stats) *stats = std::move(s);
  return state;
}

void multipliers_step(const ParameterStore& params, const Plan& plan, EngineState& state, double mu) {
  check_state(plan, state);
  for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
    const std::vector<double> w = gather(params, plan.tasks[t]);
    const std::vector<double> d = decompress(state.tasks[t].theta);
    std::vector<double>& lambda = state.tasks[t].lambda;
    for (std::size_t i = 0; i < w.size(); ++i) lambda[i] -= mu * (w[i] - d[i]);
  }
}

double mismatch(const ParameterStore& params, const Plan& plan, const EngineState& state) {
  check_state(plan, state);
  double total = 0.0;
  for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
    total += distortion(gather(params, plan.tasks[t]), state.tasks[t].theta);
  }
  return std::sqrt(total);
}

PenaltyTerm make_penalty(const ParameterStore& params, const Plan& plan, const EngineState& state,
                         double mu) {
  check_state(plan, state);
  PenaltyTerm penalty = PenaltyTerm::none(params);
  penalty.mu = mu;
  ParameterStore anchors;
  for (const auto& p : params) anchors.add(p.name, Tensor(p.value.shape()));
  for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
    std::vector<double> target = decompress(state.tasks[t].theta);
    if (mu > 0.0) {
      const std::vector<double>& lambda = state.tasks[t].lambda;
      for (std::size_t i = 0; i < target.size(); ++i) target[i] += lambda[i] / mu;
    }
    scatter(anchors, plan.tasks[t], target);
    for (std::size_t idx : plan.tasks[t].indices) penalty.anchors[idx] = std::move(anchors[idx].value);
  }
  return penalty;
}

std::unique_ptr<LossModel> compressed_model(const LossModel& model, const Plan& plan,
                                            const EngineState& state) {
  check_state(plan, state);
  std::unique_ptr<LossModel> out = model.clone();
  for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
    scatter(out->parameters(), plan.tasks[t], decompress(state.tasks[t].theta));
  }
  return out;
}

RunResult run(LossModel& model, const Plan& plan, const ScheduleSpec& schedule, const LStepFn& l_step,
              const EvalFn& eval, const RunOptions& options) {
  schedule.validate();
  if (options.eval_every < 1) throw ArgumentError("run: eval_every must be >= 1");
  ParameterStore& params = model.parameters();

  double reference_norm = 0.0;
  for (const ValidatedTask& t : plan.tasks) reference_norm += squared_norm(gather(params, t));
  reference_norm = std::sqrt(reference_norm);
  const double stop_tol = schedule.stop_tol_absolute.value_or(schedule.stop_tol_relative * reference_norm);

  RunResult result;
  RunReport& report = result.report;
  EngineState& state = result.state;

  auto evaluate = [&](StepRecord& rec) {
    if (!eval) return;
    const EvalResult e = eval(*compressed_model(model, plan, state));
    rec.train_err = e.train_err;
    rec.test_err = e.test_err;
    if (options.eval_uncompressed) {
      const EvalResult ew = eval(model);
      rec.train_err_w = ew.train_err;
      rec.test_err_w = ew.test_err;
    }
  };
  auto finish = [&] {
    report.ratio = compression_ratio(params, plan, state);
    report.tasks = summarize_tasks(plan, state);
  };

  {
    StepRecord rec;
    state = init_state(params, plan, schedule.mu0, &rec.c_steps, options.sequential);
    rec.mismatch = mismatch(params, plan, state);
    evaluate(rec);
    report.records.push_back(rec);
    if (options.on_step) options.on_step(rec);
  }

  for (int i = 0; i < schedule.steps; ++i) {
    const double mu = schedule.mu(i);
    StepRecord rec;
    rec.step = i + 1;
    rec.mu = mu;

    LStepOutcome outcome;
    try {
      outcome = l_step(model, make_penalty(params, plan, state, mu), i);
    } catch (const DivergenceError& e) {
      report.aborted = std::string("L step ") + std::to_string(i + 1) + ": " + e.what();
      finish();
      throw RunAborted(e, report);
    }
    rec.l_loss_before = outcome.loss_before;
    rec.l_loss_after = outcome.loss_after;

    rec.c_steps = c_step_all(params, plan, state, mu, {options.sequential, false});
    if (schedule.mode == ScheduleMode::kAugmentedLagrangian) multipliers_step(params, plan, state, mu);
    rec.mismatch = mismatch(params, plan, state);
    report.converged = rec.mismatch <= stop_tol;

    const bool last = report.converged || i + 1 == schedule.steps;
    if (last || (i + 1) % options.eval_every == 0) evaluate(rec);
    report.records.push_back(rec);
    if (options.on_step) options.on_step(rec);
    if (report.converged) break;
  }
  finish();
  return result;
}

}  // namespace lc
