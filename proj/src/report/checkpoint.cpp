#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "lc/overloaded.hpp"
#include "lc/report.hpp"

namespace lc {

namespace {

constexpr char kMagic[4] = {'L', 'C', 'C', 'K'};
constexpr std::uint8_t kF32 = 0;
constexpr std::uint8_t kF64 = 1;

enum class FormKind : int { kQuantized = 0, kSparse = 1, kLowRank = 2, kAdditive = 3 };

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    le(bits, 8);
  }
  void f32(double d) {
    const float f = static_cast<float>(d);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    le(bits, 4);
  }
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  const std::string& buffer() const { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& data, std::string source) : d_(data), src_(std::move(source)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() {
    const std::uint64_t bits = le(8);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  double f32() {
    const auto bits = static_cast<std::uint32_t>(le(4));
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(d_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::uint64_t n) const {
    if (n > d_.size() - pos_) {
      throw ParseError(ParseErrorKind::kTruncated,
                       src_ + ": truncated at byte " + std::to_string(pos_) + " (needed " +
                           std::to_string(n) + " more)");
    }
  }
  bool at_end() const { return pos_ == d_.size(); }
  const std::string& source() const { return src_; }

 private:
  std::uint64_t le(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{d_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<unsigned char>& d_;
  std::size_t pos_ = 0;
  std::string src_;
};

Tensor scalar(double v) { return Tensor(Shape{1}, v); }

void encode_form(const std::string& prefix, const CompressedForm& form, std::vector<CheckpointEntry>& out) {
  std::visit(
      Overloaded{
          [&](const QuantizedForm& q) {
            out.push_back({prefix + "/kind", scalar(static_cast<int>(FormKind::kQuantized)), true});
            out.push_back({prefix + "/codebook", Tensor::vector(q.codebook), false});
            std::vector<double> z(q.assignments.begin(), q.assignments.end());
            out.push_back({prefix + "/assignments", Tensor::vector(std::move(z)), true});
          },
          [&](const SparseForm& s) {
            out.push_back({prefix + "/kind", scalar(static_cast<int>(FormKind::kSparse)), true});
            out.push_back({prefix + "/length", scalar(static_cast<double>(s.length)), true});
            if (s.nnz() > 0) {
              std::vector<double> idx(s.indices.begin(), s.indices.end());
              out.push_back({prefix + "/indices", Tensor::vector(std::move(idx)), true});
              out.push_back({prefix + "/values", Tensor::vector(s.values), false});
            }
          },
          [&](const LowRankForm& l) {
            out.push_back({prefix + "/kind", scalar(static_cast<int>(FormKind::kLowRank)), true});
            out.push_back({prefix + "/shape",
                           Tensor::vector({static_cast<double>(l.rows), static_cast<double>(l.cols),
                                           static_cast<double>(l.rank)}),
                           true});
            if (l.rank > 0) {
              out.push_back({prefix + "/u", Tensor(Shape{l.rows, l.rank}, l.u), false});
              out.push_back({prefix + "/v", Tensor(Shape{l.cols, l.rank}, l.v), false});
            }
          },
          [&](const AdditiveForm& a) {
            out.push_back({prefix + "/kind", scalar(static_cast<int>(FormKind::kAdditive)), true});
            out.push_back({prefix + "/count", scalar(static_cast<double>(a.components.size())), true});
            for (std::size_t j = 0; j < a.components.size(); ++j) {
              encode_form(prefix + "/" + std::to_string(j), a.components[j], out);
            }
          },
      },
      form.value);
}

using EntryMap = std::map<std::string, const Tensor*>;

const Tensor& require_entry(const EntryMap& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw ParseError(ParseErrorKind::kMalformed, "checkpoint lacks entry '" + name + "'");
  return *it->second;
}

std::size_t as_count(double v, const std::string& name) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15) {
    throw ParseError(ParseErrorKind::kMalformed, "checkpoint entry '" + name + "' is not a count");
  }
  return static_cast<std::size_t>(v);
}

CompressedForm decode_form(const std::string& prefix, const EntryMap& m) {
  const int kind = static_cast<int>(require_entry(m, prefix + "/kind")[0]);
  switch (static_cast<FormKind>(kind)) {
    case FormKind::kQuantized: {
      QuantizedForm q;
      const auto cb = require_entry(m, prefix + "/codebook").values();
      q.codebook.assign(cb.begin(), cb.end());
      for (double z : require_entry(m, prefix + "/assignments").values()) {
        const std::size_t zi = as_count(z, prefix + "/assignments");
        if (zi >= q.codebook.size()) {
          throw ParseError(ParseErrorKind::kMalformed, prefix + ": assignment out of codebook range");
        }
        q.assignments.push_back(static_cast<std::uint32_t>(zi));
      }
      return q;
    }
    case FormKind::kSparse: {
      SparseForm s;
      s.length = as_count(require_entry(m, prefix + "/length")[0], prefix + "/length");
      if (m.count(prefix + "/indices")) {
        for (double i : require_entry(m, prefix + "/indices").values()) {
          s.indices.push_back(as_count(i, prefix + "/indices"));
          if (s.indices.back() >= s.length) {
            throw ParseError(ParseErrorKind::kMalformed, prefix + ": sparse index out of range");
          }
        }
        const auto v = require_entry(m, prefix + "/values").values();
        s.values.assign(v.begin(), v.end());
        if (s.values.size() != s.indices.size()) {
          throw ParseError(ParseErrorKind::kMalformed, prefix + ": indices and values differ in length");
        }
      }
      return s;
    }
    case FormKind::kLowRank: {
      const Tensor& shape = require_entry(m, prefix + "/shape");
      if (shape.size() != 3) throw ParseError(ParseErrorKind::kMalformed, prefix + ": bad low-rank shape");
      LowRankForm l;
      l.rows = as_count(shape[0], prefix + "/shape");
      l.cols = as_count(shape[1], prefix + "/shape");
      l.rank = as_count(shape[2], prefix + "/shape");
      if (l.rank > 0) {
        const Tensor& u = require_entry(m, prefix + "/u");
        const Tensor& v = require_entry(m, prefix + "/v");
        if (u.size() != l.rows * l.rank || v.size() != l.cols * l.rank) {
          throw ParseError(ParseErrorKind::kMalformed, prefix + ": factor sizes disagree with shape");
        }
        l.u = u.storage();
        l.v = v.storage();
      }
      return l;
    }
    case FormKind::kAdditive: {
      AdditiveForm a;
      const std::size_t n = as_count(require_entry(m, prefix + "/count")[0], prefix + "/count");
      for (std::size_t j = 0; j < n; ++j) a.components.push_back(decode_form(prefix + "/" + std::to_string(j), m));
      return a;
    }
  }
  throw ParseError(ParseErrorKind::kMalformed, prefix + ": unknown form kind " + std::to_string(kind));
}

bool reserved(const std::string& name) {
  return name.rfind("theta/", 0) == 0 || name.rfind("lambda/", 0) == 0 || name.rfind("meta/", 0) == 0;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointEntry>& entries,
                      const CheckpointOptions& options) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(entries.size());
  for (const CheckpointEntry& e : entries) {
    if (e.value.rank() == 0 || e.value.rank() > 255) {
      throw ArgumentError("checkpoint entry '" + e.name + "' has unsupported rank");
    }
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    const bool f32 = options.f32 && !e.exact;
    w.u8(f32 ? kF32 : kF64);
    w.u8(static_cast<std::uint8_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) w.u64(d);
    for (double v : e.value.values()) f32 ? w.f32(v) : w.f64(v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::vector<unsigned char> data(std::istreambuf_iterator<char>(in), {});
  Reader r(data, path.string());

  if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0) {
    throw ParseError(ParseErrorKind::kBadMagic, path.string() + ": not a checkpoint (bad magic)");
  }
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw ParseError(ParseErrorKind::kBadVersion, path.string() + ": checkpoint version " +
                                                      std::to_string(version) + " is not supported (expected " +
                                                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t count = r.u64();
  std::vector<CheckpointEntry> entries;
  for (std::uint64_t k = 0; k < count; ++k) {
    CheckpointEntry e;
    e.name = r.str(r.u32());
    const std::uint8_t dtype = r.u8();
    if (dtype != kF32 && dtype != kF64) {
      throw ParseError(ParseErrorKind::kMalformed, path.string() + ": entry '" + e.name + "' has unknown dtype");
    }
    const std::uint8_t rank = r.u8();
    if (rank == 0) throw ParseError(ParseErrorKind::kMalformed, path.string() + ": entry '" + e.name + "' has rank 0");
    Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& d : shape) {
      d = r.u64();
      if (d == 0 || n > (std::uint64_t{1} << 40) / d) {
        throw ParseError(ParseErrorKind::kMalformed, path.string() + ": entry '" + e.name + "' has bad dims");
      }
      n *= d;
    }
    r.need(n * (dtype == kF32 ? 4 : 8));
    std::vector<double> values(n);
    for (auto& v : values) v = dtype == kF32 ? r.f32() : r.f64();
    e.value = Tensor(std::move(shape), std::move(values));
    e.exact = dtype == kF64;
    entries.push_back(std::move(e));
  }
  if (!r.at_end()) throw ParseError(ParseErrorKind::kMalformed, path.string() + ": trailing bytes after last entry");
  return entries;
}

std::vector<CheckpointEntry> encode_state(const EngineState& state) {
  std::vector<CheckpointEntry> out;
  out.push_back({"meta/tasks", scalar(static_cast<double>(state.tasks.size())), true});
  for (std::size_t t = 0; t < state.tasks.size(); ++t) {
    encode_form("theta/" + std::to_string(t), state.tasks[t].theta, out);
    if (!state.tasks[t].lambda.empty()) {
      out.push_back({"lambda/" + std::to_string(t), Tensor::vector(state.tasks[t].lambda), false});
    }
  }
  return out;
}

EngineState decode_state(const std::vector<CheckpointEntry>& entries) {
  EntryMap m;
  for (const auto& e : entries) m[e.name] = &e.value;
  EngineState state;
  const std::size_t n = as_count(require_entry(m, "meta/tasks")[0], "meta/tasks");
  for (std::size_t t = 0; t < n; ++t) {
    TaskState ts;
    ts.theta = decode_form("theta/" + std::to_string(t), m);
    const auto it = m.find("lambda/" + std::to_string(t));
    if (it != m.end()) ts.lambda = it->second->storage();
    else ts.lambda.assign(decompressed_size(ts.theta), 0.0);
    if (ts.lambda.size() != decompressed_size(ts.theta)) {
      throw ParseError(ParseErrorKind::kMalformed, "lambda/" + std::to_string(t) + " has the wrong length");
    }
    state.tasks.push_back(std::move(ts));
  }
  return state;
}

void save_checkpoint(const std::filesystem::path& path, const LossModel& model, const EngineState* state,
                     const CheckpointOptions& options, const std::vector<CheckpointEntry>& meta) {
  std::vector<CheckpointEntry> entries;
  for (const auto& m : meta) {
    if (m.name.rfind("meta/", 0) != 0 || m.name == "meta/tasks") {
      throw ArgumentError("metadata entry '" + m.name + "' must start with meta/ and not be meta/tasks");
    }
    entries.push_back({m.name, m.value, true});
  }
  for (const auto& p : model.parameters()) {
    if (reserved(p.name)) throw ArgumentError("parameter name '" + p.name + "' uses a reserved prefix");
    entries.push_back({p.name, p.value, false});
  }
  if (state) {
    auto s = encode_state(*state);
    entries.insert(entries.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  write_checkpoint(path, entries, options);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const std::vector<CheckpointEntry> entries = read_checkpoint(path);
  LoadedCheckpoint out;
  bool has_state = false;
  for (const auto& e : entries) {
    if (e.name == "meta/tasks") {
      has_state = true;
    } else if (e.name.rfind("meta/", 0) == 0) {
      out.meta.push_back(e);
    } else if (!reserved(e.name)) {
      out.weights.add(e.name, e.value);
    }
  }
  if (has_state) out.state = decode_state(entries);
  return out;
}

void restore_weights(LossModel& model, const ParameterStore& weights) {
  ParameterStore& params = model.parameters();
  for (auto& p : params) {
    const auto idx = weights.index_of(p.name);
    if (!idx) throw ArgumentError("checkpoint has no weight '" + p.name + "'");
    const Tensor& src = weights[*idx].value;
    if (src.shape() != p.value.shape()) {
      throw ShapeError("checkpoint weight '" + p.name + "' has shape " + shape_string(src.shape()) +
                       ", model expects " + shape_string(p.value.shape()));
    }
    p.value = src;
  }
}

}  // namespace lc
