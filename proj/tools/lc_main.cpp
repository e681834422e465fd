#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lc/commands.hpp"

namespace {

enum ExitCode { kOk = 0, kNumeric = 1, kUsage = 2, kValidation = 3 };

int fail(int code, const std::string& what) {
  std::cerr << "lc: " << what << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-compression of neural network weights"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  lc::CommandContext ctx;
  ctx.log = &std::cerr;
  std::string out_dir;
  app.add_option("--seed", seed, "Model and shuffling seed (overrides the config)");
  app.add_flag("--sequential", ctx.sequential, "Run the C steps of all tasks on one thread");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only print errors and final results");

  std::string config_path, reference, data_dir, checkpoint, axis;
  std::vector<std::string> values;
  std::size_t train_limit = 0, test_limit = 0;

  auto* train = app.add_subcommand("train", "Train the uncompressed reference model");
  train->add_option("--config", config_path, "Run config (JSON)")->required();
  train->add_option("--data", data_dir, "Dataset directory");

  auto* compress = app.add_subcommand("compress", "Compress a reference model with the LC algorithm");
  compress->add_option("--config", config_path, "Run config (JSON)")->required();
  compress->add_option("--reference", reference, "Reference checkpoint (overrides the config)");
  compress->add_option("--data", data_dir, "Dataset directory");

  auto* eval = app.add_subcommand("eval", "Report train and test error of a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", data_dir, "Dataset directory");
  eval->add_option("--train-limit", train_limit, "Use only the first N training examples");
  eval->add_option("--test-limit", test_limit, "Use only the first N test examples");

  auto* sweep = app.add_subcommand("sweep", "Compress once per value of one config field");
  sweep->add_option("--config", config_path, "Base run config (JSON)")->required();
  sweep->add_option("--axis", axis, "JSON pointer of the field, e.g. /tasks/0/scheme/kappa")->required();
  sweep->add_option("--values", values, "Values, comma separated")->delimiter(',')->required();
  sweep->add_option("--reference", reference, "Reference checkpoint (overrides the config)");
  sweep->add_option("--data", data_dir, "Dataset directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (app.count("--seed")) ctx.seed = seed;
  if (!out_dir.empty()) ctx.out_dir = out_dir;
  if (!data_dir.empty()) ctx.data_dir = data_dir;
  if (quiet) ctx.log = nullptr;
  const std::optional<std::string> ref = reference.empty() ? std::nullopt : std::optional(reference);

  try {
    if (*train) {
      const auto r = lc::cmd_train(lc::load_config(config_path), ctx);
      std::printf("train_err %.6f test_err %.6f checkpoint %s\n", r.train_err, r.test_err,
                  r.checkpoint.string().c_str());
    } else if (*compress) {
      const auto r = lc::cmd_compress(lc::load_config(config_path), ref, ctx);
      const auto& last = r.report.records.back();
      std::printf("ratio %.6g test_err %s converged %s\n", r.report.ratio.ratio,
                  last.test_err ? std::to_string(*last.test_err).c_str() : "n/a",
                  r.report.converged ? "yes" : "no");
    } else if (*eval) {
      lc::EvalRequest req;
      req.checkpoint = checkpoint;
      if (!data_dir.empty()) req.data_dir = data_dir;
      if (train_limit) req.train_limit = train_limit;
      if (test_limit) req.test_limit = test_limit;
      const auto r = lc::cmd_eval(req, ctx);
      std::printf("train_err %.17g test_err %.17g parameters %zu\n", r.train_err, r.test_err, r.parameters);
    } else if (*sweep) {
      const auto rows = lc::cmd_sweep(lc::read_text(config_path), axis, values, ref, ctx);
      std::fputs(lc::sweep_csv(rows).c_str(), stdout);
    }
  } catch (const lc::DivergenceError& e) {
    return fail(kNumeric, e.what());
  } catch (const lc::NumericError& e) {
    return fail(kNumeric, e.what());
  } catch (const lc::IoError& e) {
    return fail(kUsage, e.what());
  } catch (const lc::ParseError& e) {
    return fail(kUsage, e.what());
  } catch (const lc::ShapeError& e) {
    return fail(kValidation, e.what());
  } catch (const lc::ArgumentError& e) {
    return fail(kValidation, e.what());
  } catch (const std::exception& e) {
    return fail(kNumeric, e.what());
  }
  return kOk;
}
