#include "lc/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

#include "json.hpp"
#include "lc/lstep.hpp"

namespace lc {

namespace fs = std::filesystem;

namespace {

RunConfig apply_context(RunConfig config, const CommandContext& ctx) {
  if (ctx.seed) config.model.seed = *ctx.seed;
  if (ctx.out_dir) config.output.dir = *ctx.out_dir;
  return config;
}

void logf(const CommandContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << std::endl;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("missing file: " + path.string());
}

std::string step_line(const StepRecord& r) {
  std::string s = "step " + std::to_string(r.step) + "  mu " + fmt("%.3g", r.mu);
  if (r.l_loss_after) s += "  loss " + fmt("%.5g", *r.l_loss_after);
  s += "  mismatch " + fmt("%.4g", r.mismatch);
  if (r.train_err) s += "  train_err " + fmt("%.4f", *r.train_err);
  if (r.test_err) s += "  test_err " + fmt("%.4f", *r.test_err);
  return s;
}

}  // namespace

fs::path resolve_data_dir(const DataConfig& data, const std::optional<std::string>& override_dir) {
  if (override_dir && !override_dir->empty()) return *override_dir;
  if (!data.dir.empty()) return data.dir;
  if (const char* env = std::getenv("LC_DATA_DIR"); env && *env) return env;
  throw IoError("no data directory: set data.dir, pass --data or set LC_DATA_DIR");
}

DataSplits load_data(const DataConfig& data, const std::optional<std::string>& override_dir) {
  const fs::path dir = resolve_data_dir(data, override_dir);
  const fs::path paths[] = {dir / data.train_images, dir / data.train_labels, dir / data.test_images,
                            dir / data.test_labels};
  for (const fs::path& p : paths) require_file(p);
  DataSplits out{load_mnist_idx(paths[0], paths[1]), load_mnist_idx(paths[2], paths[3])};
  if (data.train_limit) out.train = out.train.head(*data.train_limit);
  if (data.test_limit) out.test = out.test.head(*data.test_limit);
  return out;
}

std::vector<CheckpointEntry> model_meta(const MlpModel& model) {
  std::vector<double> sizes;
  for (std::size_t s : model.layer_sizes()) sizes.push_back(static_cast<double>(s));
  return {{"meta/layers", Tensor::vector(sizes), true},
          {"meta/activation", Tensor::vector({model.activation() == Activation::kRelu ? 1.0 : 0.0}), true}};
}

MlpModel model_from_checkpoint(const LoadedCheckpoint& checkpoint, const ModelConfig& fallback) {
  std::vector<std::size_t> layers = fallback.layers;
  Activation activation = fallback.activation;
  for (const CheckpointEntry& e : checkpoint.meta) {
    if (e.name == "meta/layers") {
      layers.clear();
      for (std::size_t i = 0; i < e.value.size(); ++i) layers.push_back(static_cast<std::size_t>(e.value[i]));
    } else if (e.name == "meta/activation" && e.value.size() == 1) {
      activation = e.value[0] == 1.0 ? Activation::kRelu : Activation::kTanh;
    }
  }
  MlpModel model(layers, activation, 0);
  restore_weights(model, checkpoint.weights);
  return model;
}

TrainOutcome cmd_train(const RunConfig& raw, const CommandContext& ctx) {
  const RunConfig config = apply_context(raw, ctx);
  const DataSplits data = load_data(config.data, ctx.data_dir);
  MlpModel model(config.model.layers, config.model.activation, config.model.seed);
  const PenaltyTerm none = PenaltyTerm::none(model.parameters());

  LStepHyper hyper;
  hyper.lr_base = config.train.lr_base;
  hyper.decay = config.train.decay;
  hyper.epochs = 1;
  hyper.batch = config.train.batch;
  hyper.momentum = config.train.momentum;
  hyper.nesterov = config.train.nesterov;
  hyper.seed = config.model.seed;
  TrainOutcome out;
  out.loss = penalized_loss(model, &data.train, none);
  for (int epoch = 0; epoch < config.train.epochs; ++epoch) {
    hyper.step_index = epoch;  // lr = lr_base · decay^epoch
    try {
      out.loss = sgd_l_step(model, &data.train, none, hyper).loss_after;
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.what(), epoch + 1);
    }
    logf(ctx, "epoch " + std::to_string(epoch + 1) + "  loss " + fmt("%.6g", out.loss));
  }
  out.train_err = model.error_rate(data.train);
  out.test_err = model.error_rate(data.test);
  logf(ctx, "train_err " + fmt("%.4f", out.train_err) + "  test_err " + fmt("%.4f", out.test_err));

  const fs::path dir = ensure_dir(config.output.dir);
  out.checkpoint = dir / "reference.lcck";
  CheckpointOptions opts;
  opts.f32 = config.output.checkpoint_f32;
  save_checkpoint(out.checkpoint, model, nullptr, opts, model_meta(model));
  nlohmann::json metrics = {{"train_err", out.train_err},
                            {"test_err", out.test_err},
                            {"loss", out.loss},
                            {"epochs", config.train.epochs},
                            {"train_size", data.train.size()},
                            {"test_size", data.test.size()},
                            {"config", nlohmann::json::parse(config_json(config))}};
  write_text(dir / "reference_metrics.json", metrics.dump(2) + "\n");
  return out;
}

CompressOutcome cmd_compress(const RunConfig& raw, const std::optional<std::string>& reference,
                             const CommandContext& ctx) {
  const RunConfig config = resolve_defaults(apply_context(raw, ctx));
  const std::string ref = reference.value_or(config.reference);
  if (ref.empty()) throw IoError("no reference checkpoint: set \"reference\" or pass --reference");
  require_file(ref);
  MlpModel model = model_from_checkpoint(load_checkpoint(ref), config.model);
  const Plan plan = validate_tasks(model.parameters(), build_tasks(config, model.parameters()));
  const ScheduleSpec schedule = build_schedule(config);
  const DataSplits data = load_data(config.data, ctx.data_dir);

  const LStepFn l_step = [&](LossModel& m, const PenaltyTerm& penalty, int step_index) {
    return sgd_l_step(m, &data.train, penalty, build_l_step(config, step_index));
  };
  const bool train_eval = config.eval.train;
  const EvalFn eval = [&](const LossModel& m) {
    EvalResult r;
    if (train_eval) r.train_err = m.error_rate(data.train);
    r.test_err = m.error_rate(data.test);
    return r;
  };
  RunOptions options;
  options.sequential = ctx.sequential;
  options.eval_every = config.eval.every;
  options.eval_uncompressed = config.eval.uncompressed;
  options.on_step = [&](const StepRecord& r) { logf(ctx, step_line(r)); };

  const fs::path dir = ensure_dir(config.output.dir);
  const std::string echo = config_json(config);
  write_text(dir / "config.json", echo + "\n");
  auto write_reports = [&](RunReport& report) {
    report.config = echo;
    if (config.output.csv) emit_report(report, dir / "report.csv", ReportFormat::kCsv);
    if (config.output.json) emit_report(report, dir / "report.json", ReportFormat::kJson);
  };

  RunResult result;
  try {
    result = run(model, plan, schedule, l_step, eval, options);
  } catch (const RunAborted& e) {
    RunReport partial = e.report();
    write_reports(partial);
    throw;
  }
  write_reports(result.report);

  const auto compressed = compressed_model(model, plan, result.state);
  CheckpointOptions opts;
  opts.f32 = config.output.checkpoint_f32;
  save_checkpoint(dir / "compressed.lcck", *compressed, &result.state, opts, model_meta(model));

  CompressOutcome out{result.report, monitor_check(result.report.records), dir};
  for (const MonitorEvent& ev : out.events) {
    logf(ctx, std::string(ev.severity == Severity::kViolation ? "VIOLATION" : "WARNING") + " step " +
                  std::to_string(ev.step) + (ev.task ? " task " + std::to_string(*ev.task) : "") + ": " +
                  ev.message);
  }
  logf(ctx, "ratio " + fmt("%.4g", out.report.ratio.ratio) + "  converged " +
                (out.report.converged ? "yes" : "no") + "  written to " + dir.string());
  return out;
}

EvalOutcome cmd_eval(const EvalRequest& request, const CommandContext& ctx) {
  require_file(request.checkpoint);
  const MlpModel model = model_from_checkpoint(load_checkpoint(request.checkpoint), ModelConfig{});
  DataConfig data;
  data.train_limit = request.train_limit;
  data.test_limit = request.test_limit;
  const DataSplits splits = load_data(data, request.data_dir ? request.data_dir : ctx.data_dir);
  EvalOutcome out;
  out.train_err = model.error_rate(splits.train);
  out.test_err = model.error_rate(splits.test);
  out.parameters = model.parameters().total_elements();
  logf(ctx, "train_err " + fmt("%.17g", out.train_err) + "  test_err " + fmt("%.17g", out.test_err));
  return out;
}

std::vector<SweepRow> cmd_sweep(const std::string& config_text, const std::string& axis,
                                const std::vector<std::string>& values,
                                const std::optional<std::string>& reference, const CommandContext& ctx) {
  if (values.empty()) throw ArgumentError("sweep needs at least one value");
  const RunConfig base = apply_context(parse_config(config_text), ctx);
  // Check the axis and every value before the first (expensive) run.
  std::vector<RunConfig> points;
  for (const std::string& v : values) points.push_back(parse_config(set_config_value(config_text, axis, v)));

  const fs::path root = ensure_dir(base.output.dir);
  const std::string name = axis.substr(axis.find_last_of('/') + 1);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    CommandContext point_ctx = ctx;
    point_ctx.out_dir = (root / ("point_" + std::to_string(i))).string();
    logf(ctx, "sweep point " + std::to_string(i) + ": " + name + "=" + values[i]);
    const CompressOutcome r = cmd_compress(points[i], reference, point_ctx);
    SweepRow row;
    row.label = name + "=" + values[i];
    char* end = nullptr;
    row.value = std::strtod(values[i].c_str(), &end);
    if (end == values[i].c_str()) row.value = std::nan("");
    row.ratio = r.report.ratio.ratio;
    row.covered_ratio = r.report.ratio.covered_ratio;
    row.mismatch = r.report.records.empty() ? std::nan("") : r.report.records.back().mismatch;
    row.converged = r.report.converged;
    for (auto it = r.report.records.rbegin(); it != r.report.records.rend(); ++it) {
      if (it->test_err) {
        row.train_err = it->train_err;
        row.test_err = it->test_err;
        break;
      }
    }
    rows.push_back(row);
  }
  write_text(root / "sweep.csv", sweep_csv(rows));
  return rows;
}

}  // namespace lc
