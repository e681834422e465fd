#include "lc/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "lc/report.hpp"

namespace lc {

namespace {

using nlohmann::json;

std::string escape_key(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Object reader that remembers which keys were consumed and rejects the rest.
class Obj {
 public:
  Obj(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
    if (!j.is_object()) throw ConfigError(ptr_, "expected an object");
  }

  std::string path(const std::string& key) const { return ptr_ + "/" + escape_key(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = get(key);
    if (!v) throw ConfigError(path(key), "required key is missing");
    return *v;
  }

  std::optional<double> number(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(path(key), "expected a number, got " + v->dump());
    return v->get<double>();
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    return as_integer(*v, path(key));
  }

  std::optional<bool> boolean(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false, got " + v->dump());
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(path(key), "expected a string, got " + v->dump());
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(path(item.key()), "unknown key");
    }
  }

  static std::int64_t as_integer(const json& v, const std::string& where) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(where, "expected an integer, got " + v.dump());
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& pointer, const std::string& what) {
  if (!ok) throw ConfigError(pointer, what);
}

double positive(Obj& o, const std::string& key, double fallback) {
  const double v = o.number(key).value_or(fallback);
  check(v > 0.0 && std::isfinite(v), o.path(key), "must be a finite number > 0");
  return v;
}

const std::set<std::string> kQuantizers = {"adaptive_quantization", "binarize_fixed", "binarize_scaled",
                                           "ternarize_scaled"};
const std::set<std::string> kPruners = {"l0_constraint", "l1_constraint", "l0_penalty", "l1_penalty"};
const std::set<std::string> kLowRank = {"low_rank", "rank_select_storage", "rank_select_flops"};

SchemeConfig parse_scheme(const json& j, const std::string& ptr) {
  Obj o(j, ptr);
  SchemeConfig s;
  s.type = o.string("type").value_or("");
  check(!s.type.empty(), o.path("type"), "required key is missing");
  if (s.type == "adaptive_quantization") {
    s.k = o.integer("k");
    check(s.k.has_value(), o.path("k"), "required key is missing");
    check(*s.k >= 1, o.path("k"), "must be >= 1");
    s.method = o.string("method").value_or("dp");
    check(s.method == "dp" || s.method == "lloyd", o.path("method"), "must be \"dp\" or \"lloyd\"");
    if (auto seed = o.integer("seed")) {
      check(*seed >= 0, o.path("seed"), "must be >= 0");
      s.seed = static_cast<std::uint64_t>(*seed);
    }
  } else if (s.type == "binarize_fixed" || s.type == "binarize_scaled" || s.type == "ternarize_scaled") {
  } else if (s.type == "l0_constraint") {
    const json& k = o.require("kappa");
    if (k.is_string()) {
      const std::string t = k.get<std::string>();
      std::size_t used = 0;
      double pct = -1.0;
      try {
        pct = std::stod(t, &used);
      } catch (const std::exception&) {
      }
      check(used + 1 == t.size() && t.back() == '%' && pct >= 0.0 && pct <= 100.0, o.path("kappa"),
            "expected an integer or a percentage such as \"5%\"");
      s.kappa = pct;
      s.kappa_percent = true;
    } else {
      const std::int64_t v = Obj::as_integer(k, o.path("kappa"));
      check(v >= 0, o.path("kappa"), "must be >= 0");
      s.kappa = static_cast<double>(v);
    }
  } else if (s.type == "l1_constraint") {
    s.kappa = o.number("kappa");
    check(s.kappa.has_value(), o.path("kappa"), "required key is missing");
    check(*s.kappa >= 0.0, o.path("kappa"), "must be >= 0");
  } else if (s.type == "l0_penalty" || s.type == "l1_penalty") {
    s.alpha = o.number("alpha");
    check(s.alpha.has_value(), o.path("alpha"), "required key is missing");
    check(*s.alpha >= 0.0, o.path("alpha"), "must be >= 0");
  } else if (s.type == "low_rank") {
    s.rank = o.integer("rank");
    check(s.rank.has_value(), o.path("rank"), "required key is missing");
    check(*s.rank >= 0, o.path("rank"), "must be >= 0");
  } else if (s.type == "rank_select_storage" || s.type == "rank_select_flops") {
    s.lambda = o.number("lambda");
    check(s.lambda.has_value(), o.path("lambda"), "required key is missing");
    check(*s.lambda >= 0.0, o.path("lambda"), "must be >= 0");
    s.alpha = positive(o, "alpha", 1.0);
  } else {
    throw ConfigError(o.path("type"), "unknown scheme type \"" + s.type + "\"");
  }
  o.finish();
  return s;
}

ViewKind parse_view(const json* j, const std::string& ptr) {
  if (!j) return ViewKind::as_vector();
  if (j->is_string()) {
    const auto s = j->get<std::string>();
    if (s == "vector") return ViewKind::as_vector();
    if (s == "matrix") return ViewKind::as_matrix(0, 0);
    throw ConfigError(ptr, "expected \"vector\", \"matrix\" or {\"matrix\": [rows, cols]}");
  }
  Obj o(*j, ptr);
  const json& m = o.require("matrix");
  check(m.is_array() && m.size() == 2, o.path("matrix"), "expected [rows, cols]");
  const std::int64_t r = Obj::as_integer(m[0], o.path("matrix") + "/0");
  const std::int64_t c = Obj::as_integer(m[1], o.path("matrix") + "/1");
  check(r >= 1, o.path("matrix") + "/0", "must be >= 1");
  check(c >= 1, o.path("matrix") + "/1", "must be >= 1");
  o.finish();
  return ViewKind::as_matrix(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
}

TaskConfig parse_task(const json& j, const std::string& ptr) {
  Obj o(j, ptr);
  TaskConfig t;
  const json& layers = o.require("layers");
  check(layers.is_array() && !layers.empty(), o.path("layers"), "expected a non-empty list of parameter names");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    check(layers[i].is_string(), o.path("layers") + "/" + std::to_string(i), "expected a parameter name");
    t.layers.push_back(layers[i].get<std::string>());
  }
  t.view = parse_view(o.get("view"), o.path("view"));
  const json* scheme = o.get("scheme");
  const json* additive = o.get("additive");
  check((scheme != nullptr) != (additive != nullptr), ptr, "give exactly one of \"scheme\" or \"additive\"");
  if (scheme) {
    t.schemes.push_back(parse_scheme(*scheme, o.path("scheme")));
  } else {
    check(additive->is_array() && additive->size() >= 2, o.path("additive"),
          "expected a list of at least two schemes");
    t.additive = true;
    for (std::size_t i = 0; i < additive->size(); ++i) {
      t.schemes.push_back(parse_scheme((*additive)[i], o.path("additive") + "/" + std::to_string(i)));
    }
  }
  o.finish();
  return t;
}

RunConfig parse_document(const json& doc) {
  Obj root(doc, "");
  const json& version = root.require("version");
  check(version.is_number_integer() && version.get<std::int64_t>() == 1, root.path("version"),
        "unsupported config version " + version.dump() + " (expected 1)");
  RunConfig c;

  if (const json* j = root.get("model")) {
    Obj o(*j, root.path("model"));
    if (const json* layers = o.get("layers")) {
      check(layers->is_array() && layers->size() >= 2, o.path("layers"), "expected at least two layer sizes");
      c.model.layers.clear();
      for (std::size_t i = 0; i < layers->size(); ++i) {
        const auto v = Obj::as_integer((*layers)[i], o.path("layers") + "/" + std::to_string(i));
        check(v >= 1, o.path("layers") + "/" + std::to_string(i), "must be >= 1");
        c.model.layers.push_back(static_cast<std::size_t>(v));
      }
      check(c.model.layers.back() == MlpModel::kNumClasses, o.path("layers"), "the last layer must have 10 units");
    }
    if (auto a = o.string("activation")) {
      try {
        c.model.activation = parse_activation(*a);
      } catch (const ArgumentError& e) {
        throw ConfigError(o.path("activation"), e.what());
      }
    }
    if (auto s = o.integer("seed")) {
      check(*s >= 0, o.path("seed"), "must be >= 0");
      c.model.seed = static_cast<std::uint64_t>(*s);
    }
    o.finish();
  }

  if (const json* j = root.get("data")) {
    Obj o(*j, root.path("data"));
    c.data.dir = o.string("dir").value_or("");
    c.data.train_images = o.string("train_images").value_or(c.data.train_images);
    c.data.train_labels = o.string("train_labels").value_or(c.data.train_labels);
    c.data.test_images = o.string("test_images").value_or(c.data.test_images);
    c.data.test_labels = o.string("test_labels").value_or(c.data.test_labels);
    for (const char* key : {"train_limit", "test_limit"}) {
      if (auto v = o.integer(key)) {
        check(*v >= 1, o.path(key), "must be >= 1");
        (std::string(key) == "train_limit" ? c.data.train_limit : c.data.test_limit) = static_cast<std::size_t>(*v);
      }
    }
    o.finish();
  }

  if (const json* j = root.get("train")) {
    Obj o(*j, root.path("train"));
    c.train.lr_base = positive(o, "lr_base", c.train.lr_base);
    c.train.decay = positive(o, "decay", c.train.decay);
    c.train.epochs = static_cast<int>(o.integer("epochs").value_or(c.train.epochs));
    check(c.train.epochs >= 0, o.path("epochs"), "must be >= 0");
    const auto batch = o.integer("batch").value_or(static_cast<std::int64_t>(c.train.batch));
    check(batch >= 1, o.path("batch"), "must be >= 1");
    c.train.batch = static_cast<std::size_t>(batch);
    c.train.momentum = o.number("momentum").value_or(c.train.momentum);
    check(c.train.momentum >= 0.0 && c.train.momentum < 1.0, o.path("momentum"), "must lie in [0, 1)");
    c.train.nesterov = o.boolean("nesterov").value_or(c.train.nesterov);
    o.finish();
  }

  c.reference = root.string("reference").value_or("");

  if (const json* j = root.get("tasks")) {
    check(j->is_array(), root.path("tasks"), "expected a list of tasks");
    for (std::size_t i = 0; i < j->size(); ++i) {
      c.tasks.push_back(parse_task((*j)[i], root.path("tasks") + "/" + std::to_string(i)));
    }
  }

  if (const json* j = root.get("schedule")) {
    Obj o(*j, root.path("schedule"));
    c.schedule.mu0 = positive(o, "mu0", c.schedule.mu0);
    if (auto a = o.number("a")) {
      check(*a > 1.0 && std::isfinite(*a), o.path("a"), "must be > 1");
      c.schedule.a = *a;
    }
    c.schedule.steps = static_cast<int>(o.integer("steps").value_or(c.schedule.steps));
    check(c.schedule.steps >= 0, o.path("steps"), "must be >= 0");
    if (auto m = o.string("mode")) {
      if (*m == "augmented_lagrangian") c.schedule.mode = ScheduleMode::kAugmentedLagrangian;
      else if (*m == "quadratic_penalty") c.schedule.mode = ScheduleMode::kQuadraticPenalty;
      else throw ConfigError(o.path("mode"), "expected \"augmented_lagrangian\" or \"quadratic_penalty\"");
    }
    c.schedule.stop_tol = o.number("stop_tol").value_or(c.schedule.stop_tol);
    check(c.schedule.stop_tol >= 0.0, o.path("stop_tol"), "must be >= 0");
    o.finish();
  }

  if (const json* j = root.get("l_step")) {
    Obj o(*j, root.path("l_step"));
    if (o.number("lr_base")) c.l_step.lr_base = positive(o, "lr_base", 1.0);
    c.l_step.decay = positive(o, "decay", c.l_step.decay);
    c.l_step.epochs_per_step = static_cast<int>(o.integer("epochs_per_step").value_or(c.l_step.epochs_per_step));
    check(c.l_step.epochs_per_step >= 0, o.path("epochs_per_step"), "must be >= 0");
    const auto batch = o.integer("batch").value_or(static_cast<std::int64_t>(c.l_step.batch));
    check(batch >= 1, o.path("batch"), "must be >= 1");
    c.l_step.batch = static_cast<std::size_t>(batch);
    c.l_step.momentum = o.number("momentum").value_or(c.l_step.momentum);
    check(c.l_step.momentum >= 0.0 && c.l_step.momentum < 1.0, o.path("momentum"), "must lie in [0, 1)");
    c.l_step.nesterov = o.boolean("nesterov").value_or(c.l_step.nesterov);
    o.finish();
  }

  if (const json* j = root.get("eval")) {
    Obj o(*j, root.path("eval"));
    c.eval.every = static_cast<int>(o.integer("every").value_or(c.eval.every));
    check(c.eval.every >= 1, o.path("every"), "must be >= 1");
    c.eval.uncompressed = o.boolean("uncompressed").value_or(c.eval.uncompressed);
    c.eval.train = o.boolean("train").value_or(c.eval.train);
    o.finish();
  }

  if (const json* j = root.get("output")) {
    Obj o(*j, root.path("output"));
    c.output.dir = o.string("dir").value_or(c.output.dir);
    c.output.csv = o.boolean("csv").value_or(c.output.csv);
    c.output.json = o.boolean("json").value_or(c.output.json);
    c.output.checkpoint_f32 = o.boolean("checkpoint_f32").value_or(c.output.checkpoint_f32);
    o.finish();
  }

  root.finish();
  return c;
}

json scheme_json(const SchemeConfig& s) {
  json j = {{"type", s.type}};
  if (s.type == "adaptive_quantization") {
    j["k"] = *s.k;
    j["method"] = s.method;
    if (s.seed) j["seed"] = *s.seed;
  } else if (s.type == "l0_constraint") {
    if (s.kappa_percent) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g%%", *s.kappa);
      j["kappa"] = buf;
    } else {
      j["kappa"] = static_cast<std::int64_t>(*s.kappa);
    }
  } else if (s.type == "l1_constraint") {
    j["kappa"] = *s.kappa;
  } else if (s.type == "l0_penalty" || s.type == "l1_penalty") {
    j["alpha"] = *s.alpha;
  } else if (s.type == "low_rank") {
    j["rank"] = *s.rank;
  } else if (kLowRank.count(s.type)) {
    j["lambda"] = *s.lambda;
    j["alpha"] = s.alpha.value_or(1.0);
  }
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", "invalid JSON at line " + std::to_string(line) + ", column " + std::to_string(col) +
                              ": " + e.what());
  }
  return parse_document(doc);
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

RunConfig resolve_defaults(RunConfig c) {
  bool quant = false, prune = false, lowrank = false, additive = false;
  for (const TaskConfig& t : c.tasks) {
    additive = additive || t.additive;
    for (const SchemeConfig& s : t.schemes) {
      quant = quant || kQuantizers.count(s.type) > 0;
      prune = prune || kPruners.count(s.type) > 0;
      lowrank = lowrank || kLowRank.count(s.type) > 0;
    }
  }
  if (!c.schedule.a) c.schedule.a = lowrank ? 1.4 : 1.1;
  if (!c.l_step.lr_base) {
    const int families = int{quant} + int{prune} + int{lowrank};
    if (families == 1 && !additive && quant) c.l_step.lr_base = 0.09;
    else if (families == 1 && !additive && prune) c.l_step.lr_base = 0.1;
    else c.l_step.lr_base = 0.05;
  }
  return c;
}

std::string config_json(const RunConfig& c) {
  json j;
  j["version"] = 1;
  j["model"] = {{"layers", c.model.layers}, {"activation", to_string(c.model.activation)}, {"seed", c.model.seed}};
  json data = {{"dir", c.data.dir},
               {"train_images", c.data.train_images},
               {"train_labels", c.data.train_labels},
               {"test_images", c.data.test_images},
               {"test_labels", c.data.test_labels}};
  if (c.data.train_limit) data["train_limit"] = *c.data.train_limit;
  if (c.data.test_limit) data["test_limit"] = *c.data.test_limit;
  j["data"] = data;
  j["train"] = {{"lr_base", c.train.lr_base}, {"decay", c.train.decay},       {"epochs", c.train.epochs},
                {"batch", c.train.batch},     {"momentum", c.train.momentum}, {"nesterov", c.train.nesterov}};
  j["reference"] = c.reference;
  j["tasks"] = json::array();
  for (const TaskConfig& t : c.tasks) {
    json task = {{"layers", t.layers}};
    if (!t.view.matrix) task["view"] = "vector";
    else if (t.view.rows == 0) task["view"] = "matrix";
    else task["view"] = {{"matrix", {t.view.rows, t.view.cols}}};
    if (t.additive) {
      task["additive"] = json::array();
      for (const SchemeConfig& s : t.schemes) task["additive"].push_back(scheme_json(s));
    } else {
      task["scheme"] = scheme_json(t.schemes.front());
    }
    j["tasks"].push_back(task);
  }
  json schedule = {{"mu0", c.schedule.mu0},
                   {"steps", c.schedule.steps},
                   {"mode", to_string(c.schedule.mode)},
                   {"stop_tol", c.schedule.stop_tol}};
  if (c.schedule.a) schedule["a"] = *c.schedule.a;
  j["schedule"] = schedule;
  json l = {{"decay", c.l_step.decay},  {"epochs_per_step", c.l_step.epochs_per_step},
            {"batch", c.l_step.batch},  {"momentum", c.l_step.momentum},
            {"nesterov", c.l_step.nesterov}};
  if (c.l_step.lr_base) l["lr_base"] = *c.l_step.lr_base;
  j["l_step"] = l;
  j["eval"] = {{"every", c.eval.every}, {"uncompressed", c.eval.uncompressed}, {"train", c.eval.train}};
  j["output"] = {{"dir", c.output.dir},
                 {"csv", c.output.csv},
                 {"json", c.output.json},
                 {"checkpoint_f32", c.output.checkpoint_f32}};
  return j.dump(2);
}

SchemePtr build_scheme(const SchemeConfig& s, std::size_t viewed_size, std::uint64_t default_seed) {
  if (s.type == "adaptive_quantization") {
    return std::make_shared<AdaptiveQuantization>(
        *s.k, s.method == "lloyd" ? AdaptiveQuantization::Method::kLloyd
                                  : AdaptiveQuantization::Method::kDynamicProgramming,
        s.seed.value_or(default_seed));
  }
  if (s.type == "binarize_fixed") return std::make_shared<BinarizeFixed>();
  if (s.type == "binarize_scaled") return std::make_shared<BinarizeScaled>();
  if (s.type == "ternarize_scaled") return std::make_shared<TernarizeScaled>();
  if (s.type == "l0_constraint") {
    const double kappa = s.kappa_percent ? std::round(*s.kappa / 100.0 * static_cast<double>(viewed_size))
                                         : *s.kappa;
    return std::make_shared<L0Constraint>(static_cast<std::int64_t>(kappa));
  }
  if (s.type == "l1_constraint") return std::make_shared<L1Constraint>(*s.kappa);
  if (s.type == "l0_penalty") return std::make_shared<L0Penalty>(*s.alpha);
  if (s.type == "l1_penalty") return std::make_shared<L1Penalty>(*s.alpha);
  if (s.type == "low_rank") return std::make_shared<LowRank>(*s.rank);
  if (s.type == "rank_select_storage" || s.type == "rank_select_flops") {
    CostModel cost;
    cost.kind = s.type == "rank_select_storage" ? CostModel::Kind::kStorage : CostModel::Kind::kFlops;
    cost.coefficient = s.alpha.value_or(1.0);
    return std::make_shared<RankSelection>(*s.lambda, cost);
  }
  throw ArgumentError("unknown scheme type '" + s.type + "'");
}

std::vector<CompressionTask> build_tasks(const RunConfig& config, const ParameterStore& params) {
  std::vector<CompressionTask> tasks;
  for (std::size_t t = 0; t < config.tasks.size(); ++t) {
    const TaskConfig& tc = config.tasks[t];
    CompressionTask task;
    task.parameters = tc.layers;
    task.view = tc.view;
    std::size_t viewed = 0;
    for (const std::string& name : tc.layers) {
      if (const auto idx = params.index_of(name)) viewed += params[*idx].value.size();
    }
    if (tc.view.matrix && tc.view.rows == 0) {
      // "matrix": the single tensor as it is stored.
      const auto idx = tc.layers.size() == 1 ? params.index_of(tc.layers.front()) : std::nullopt;
      if (idx && params[*idx].value.rank() == 2) {
        task.view = ViewKind::as_matrix(params[*idx].value.rows(), params[*idx].value.cols());
      } else {
        throw ValidationError(ValidationCode::kMatrixViewShape, t,
                              "view \"matrix\" needs a single two-dimensional parameter");
      }
    }
    std::vector<SchemePtr> schemes;
    for (const SchemeConfig& s : tc.schemes) schemes.push_back(build_scheme(s, viewed, config.model.seed));
    task.scheme = tc.additive ? std::make_shared<Additive>(std::move(schemes)) : schemes.front();
    tasks.push_back(std::move(task));
  }
  return tasks;
}

ScheduleSpec build_schedule(const RunConfig& config) {
  const RunConfig c = resolve_defaults(config);
  ScheduleSpec s;
  s.mu0 = c.schedule.mu0;
  s.a = *c.schedule.a;
  s.steps = c.schedule.steps;
  s.mode = c.schedule.mode;
  s.stop_tol_relative = c.schedule.stop_tol;
  return s;
}

LStepHyper build_l_step(const RunConfig& config, int step_index) {
  const RunConfig c = resolve_defaults(config);
  LStepHyper h;
  h.lr_base = *c.l_step.lr_base;
  h.decay = c.l_step.decay;
  h.epochs = c.l_step.epochs_per_step;
  h.batch = c.l_step.batch;
  h.momentum = c.l_step.momentum;
  h.nesterov = c.l_step.nesterov;
  h.step_index = step_index;
  h.seed = c.model.seed;
  return h;
}

std::string set_config_value(const std::string& config_text, const std::string& pointer,
                             const std::string& value_text) {
  json doc;
  try {
    doc = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(pointer);
  } catch (const json::exception&) {
    throw ConfigError(pointer, "not a valid JSON pointer");
  }
  if (pointer.empty() || !doc.contains(ptr)) throw ConfigError(pointer, "sweep axis does not exist in the config");
  json value = json::parse(value_text, nullptr, false);
  if (value.is_discarded()) value = value_text;
  doc[ptr] = value;
  return doc.dump(2);
}

}  // namespace lc
