#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lc/engine.hpp"
#include "lc/model.hpp"

namespace lc {

// ---- Checkpoints -----------------------------------------------------------
//
// Little-endian binary file:
//   "LCCK"  u32 version (= 1)  u64 entry count
//   per entry: u32 name length, UTF-8 name, u8 dtype (0 = f32, 1 = f64),
//              u8 rank, u64 dims[rank], data (row-major)
// Model weights use their own names. Compression state uses the reserved
// prefixes "theta/<task>/..." and "lambda/<task>", bookkeeping uses "meta/".

constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  Tensor value;
  bool exact = false;  // always stored as f64 (indices, counts, shapes)
};

struct CheckpointOptions {
  // Store non-exact entries as f32. Halves the file; values keep about 7
  // significant digits.
  bool f32 = false;
};

void write_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointEntry>& entries,
                      const CheckpointOptions& options = {});

// Throws IoError if unreadable and ParseError with kBadMagic, kBadVersion,
// kTruncated or kMalformed for bad contents.
std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path);

// Θ and λ of every task as checkpoint entries.
std::vector<CheckpointEntry> encode_state(const EngineState& state);
EngineState decode_state(const std::vector<CheckpointEntry>& entries);

// Weights (and optionally the compression state) of a model. `meta` entries
// must be named "meta/..." and are stored exactly.
void save_checkpoint(const std::filesystem::path& path, const LossModel& model,
                     const EngineState* state = nullptr, const CheckpointOptions& options = {},
                     const std::vector<CheckpointEntry>& meta = {});

struct LoadedCheckpoint {
  ParameterStore weights;
  std::optional<EngineState> state;  // present when the file has "meta/tasks"
  std::vector<CheckpointEntry> meta;  // other "meta/..." entries
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Copies every weight of `model` from the checkpoint; names and shapes must
// match exactly.
void restore_weights(LossModel& model, const ParameterStore& weights);

// ---- Run reports -------------------------------------------------------------

// Columns: step,mu,l_loss_before,l_loss_after,c_distortion,mismatch,train_err,test_err
// Numbers use 17 significant digits; missing values are empty fields.
std::string report_csv(const RunReport& report);

struct CsvRow {
  int step = 0;
  double mu = 0.0;
  std::optional<double> l_loss_before, l_loss_after;
  double c_distortion = 0.0;
  double mismatch = 0.0;
  std::optional<double> train_err, test_err;
  bool operator==(const CsvRow&) const = default;
};

std::vector<CsvRow> parse_report_csv(const std::string& text);

std::string report_json(const RunReport& report);
RunReport parse_report_json(const std::string& text);

enum class ReportFormat { kCsv, kJson };

void emit_report(const RunReport& report, const std::filesystem::path& path, ReportFormat format);

// One row per sweep point, for error-versus-compression plots.
struct SweepRow {
  std::string label;   // e.g. "kappa=5%"
  double value = 0.0;  // the swept parameter after resolution
  double ratio = 0.0;
  double covered_ratio = 0.0;
  std::optional<double> train_err, test_err;
  double mismatch = 0.0;
  bool converged = false;
};

// Columns: label,value,ratio,covered_ratio,train_err,test_err,mismatch,converged
std::string sweep_csv(const std::vector<SweepRow>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace lc
