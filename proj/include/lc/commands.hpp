#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lc/config.hpp"
#include "lc/dataset.hpp"
#include "lc/engine.hpp"
#include "lc/model.hpp"
#include "lc/report.hpp"

namespace lc {

// Command-line overrides shared by every command.
struct CommandContext {
  std::optional<std::uint64_t> seed;   // replaces model.seed
  bool sequential = false;             // run C steps on the calling thread
  std::optional<std::string> out_dir;  // replaces output.dir
  std::optional<std::string> data_dir;
  std::ostream* log = nullptr;  // progress lines; nullptr for silence
};

struct DataSplits {
  Dataset train;
  Dataset test;
};

// Data directory: explicit override, then config, then $LC_DATA_DIR.
std::filesystem::path resolve_data_dir(const DataConfig& data, const std::optional<std::string>& override_dir);
DataSplits load_data(const DataConfig& data, const std::optional<std::string>& override_dir);

// Architecture entries written next to the weights ("meta/layers",
// "meta/activation") and the model rebuilt from them.
std::vector<CheckpointEntry> model_meta(const MlpModel& model);
MlpModel model_from_checkpoint(const LoadedCheckpoint& checkpoint, const ModelConfig& fallback);

struct TrainOutcome {
  std::filesystem::path checkpoint;
  double train_err = 0.0;
  double test_err = 0.0;
  double loss = 0.0;
};

// Trains the uncompressed model (lr_base·decay^epoch per epoch) and writes
// reference.lcck and reference_metrics.json into the output directory.
TrainOutcome cmd_train(const RunConfig& config, const CommandContext& ctx);

struct CompressOutcome {
  RunReport report;
  std::vector<MonitorEvent> events;
  std::filesystem::path dir;
};

// Runs the LC algorithm from a reference checkpoint. Writes report.csv,
// report.json, config.json and compressed.lcck (Δ(Θ) weights plus Θ and λ).
// An aborted run still writes its partial report before RunAborted is
// rethrown.
CompressOutcome cmd_compress(const RunConfig& config, const std::optional<std::string>& reference,
                             const CommandContext& ctx);

struct EvalOutcome {
  double train_err = 0.0;
  double test_err = 0.0;
  std::size_t parameters = 0;
};

struct EvalRequest {
  std::string checkpoint;
  std::optional<std::string> data_dir;
  std::optional<std::size_t> train_limit;
  std::optional<std::size_t> test_limit;
};

EvalOutcome cmd_eval(const EvalRequest& request, const CommandContext& ctx);

// Runs one compression per value, replacing the config field at `axis`
// (a JSON pointer such as /tasks/0/scheme/kappa). Point i writes into
// <out>/point_<i>; the summary goes to <out>/sweep.csv.
std::vector<SweepRow> cmd_sweep(const std::string& config_text, const std::string& axis,
                                const std::vector<std::string>& values,
                                const std::optional<std::string>& reference, const CommandContext& ctx);

}  // namespace lc
