#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lc/engine.hpp"
#include "lc/lstep.hpp"
#include "lc/model.hpp"

namespace lc {

// A config value that does not fit the schema. `pointer` is the JSON pointer
// of the offending field (e.g. "/tasks/1/scheme/kappa").
class ConfigError : public ArgumentError {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : ArgumentError((pointer.empty() ? std::string("/") : pointer) + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct SchemeConfig {
  std::string type;  // adaptive_quantization, l0_constraint, ...
  std::optional<std::int64_t> k;
  std::string method = "dp";  // adaptive_quantization: "dp" or "lloyd"
  std::optional<std::uint64_t> seed;
  std::optional<double> kappa;
  bool kappa_percent = false;  // kappa given as "5%" of the viewed size
  std::optional<double> alpha;
  std::optional<std::int64_t> rank;
  std::optional<double> lambda;

  bool operator==(const SchemeConfig&) const = default;
};

struct TaskConfig {
  std::vector<std::string> layers;
  ViewKind view;
  bool additive = false;
  std::vector<SchemeConfig> schemes;  // one entry unless additive

  bool operator==(const TaskConfig&) const = default;
};

struct ModelConfig {
  std::vector<std::size_t> layers{784, 300, 100, 10};
  Activation activation = Activation::kTanh;
  std::uint64_t seed = 1;
  bool operator==(const ModelConfig&) const = default;
};

struct DataConfig {
  std::string dir;  // falls back to $LC_DATA_DIR
  std::string train_images = "train-images-idx3-ubyte";
  std::string train_labels = "train-labels-idx1-ubyte";
  std::string test_images = "t10k-images-idx3-ubyte";
  std::string test_labels = "t10k-labels-idx1-ubyte";
  std::optional<std::size_t> train_limit;
  std::optional<std::size_t> test_limit;
  bool operator==(const DataConfig&) const = default;
};

struct TrainConfig {
  double lr_base = 0.1;
  double decay = 0.98;  // per epoch
  int epochs = 60;
  std::size_t batch = 128;
  double momentum = 0.9;
  bool nesterov = true;
  bool operator==(const TrainConfig&) const = default;
};

struct LStepConfig {
  std::optional<double> lr_base;  // default by scheme family: 0.09 / 0.1 / 0.05
  double decay = 0.98;            // per L step
  int epochs_per_step = 20;
  std::size_t batch = 128;
  double momentum = 0.9;
  bool nesterov = true;
  bool operator==(const LStepConfig&) const = default;
};

struct ScheduleConfig {
  double mu0 = 9e-5;
  std::optional<double> a;  // default 1.4 with low-rank tasks, else 1.1
  int steps = 40;
  ScheduleMode mode = ScheduleMode::kAugmentedLagrangian;
  double stop_tol = 1e-6;  // relative to ||w̄|| over compressed parameters
  bool operator==(const ScheduleConfig&) const = default;
};

struct EvalConfig {
  int every = 1;
  bool uncompressed = false;
  bool train = true;  // also report the training-set error
  bool operator==(const EvalConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "runs/lc";
  bool csv = true;
  bool json = true;
  bool checkpoint_f32 = false;
  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  ModelConfig model;
  DataConfig data;
  TrainConfig train;
  std::string reference;  // reference checkpoint for `compress`
  std::vector<TaskConfig> tasks;
  ScheduleConfig schedule;
  LStepConfig l_step;
  EvalConfig eval;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;
};

// Parses and checks a config document. Requires "version": 1 and rejects
// unknown keys. Throws ConfigError (a JSON pointer plus message); malformed
// JSON is reported with its line and column.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Fills the family-dependent defaults (schedule.a, l_step.lr_base).
RunConfig resolve_defaults(RunConfig config);

// Canonical JSON of a config; parse_config(config_json(c)) == c.
std::string config_json(const RunConfig& config);

// Builds the compression tasks against a model's parameters (resolves
// percentage kappas against the viewed size).
std::vector<CompressionTask> build_tasks(const RunConfig& config, const ParameterStore& params);

SchemePtr build_scheme(const SchemeConfig& scheme, std::size_t viewed_size, std::uint64_t default_seed);

ScheduleSpec build_schedule(const RunConfig& config);
LStepHyper build_l_step(const RunConfig& config, int step_index);

// Replaces the value at a JSON pointer inside a config document; used by
// sweeps. Throws ConfigError if the path does not exist.
std::string set_config_value(const std::string& config_text, const std::string& pointer,
                             const std::string& value_text);

}  // namespace lc
