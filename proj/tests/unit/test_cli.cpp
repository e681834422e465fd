#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "lc/commands.hpp"
#include "lc/config.hpp"
#include "lc/errors.hpp"

using namespace lc;
using lc::testing::temp_dir;
using lc::testing::write_toy_mnist;

namespace {

std::string config_error_pointer(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  FAIL("expected a config error for " << text);
  return "";
}

const char* kToyConfig = R"({
  "version": 1,
  "model": {"layers": [64, 16, 10], "seed": 3},
  "train": {"epochs": 8, "batch": 32, "lr_base": 0.1},
  "tasks": [
    {"layers": ["l1.weight"], "scheme": {"type": "adaptive_quantization", "k": 2}},
    {"layers": ["l2.weight"], "view": "matrix", "scheme": {"type": "low_rank", "rank": 2}}
  ],
  "schedule": {"mu0": 1e-3, "a": 1.5, "steps": 4},
  "l_step": {"epochs_per_step": 2, "batch": 32}
})";

}  // namespace

TEST_CASE("config requires version 1") {
  CHECK(config_error_pointer("{}") == "/version");
  CHECK(config_error_pointer(R"({"version": 2})") == "/version");
  CHECK_NOTHROW(parse_config(R"({"version": 1})"));
}

TEST_CASE("config errors carry the field pointer") {
  CHECK(config_error_pointer(R"({"version": 1, "colour": 1})") == "/colour");
  CHECK(config_error_pointer(R"({"version": 1, "schedule": {"mu0": -1}})") == "/schedule/mu0");
  CHECK(config_error_pointer(R"({"version": 1, "schedule": {"a": 1.0}})") == "/schedule/a");
  CHECK(config_error_pointer(R"({"version": 1, "schedule": {"mode": "fast"}})") == "/schedule/mode");
  CHECK(config_error_pointer(R"({"version": 1, "l_step": {"batch": "big"}})") == "/l_step/batch");
  CHECK(config_error_pointer(R"({"version": 1, "tasks": [{"layers": ["a"], "scheme": {"type": "zip"}}]})") ==
        "/tasks/0/scheme/type");
  CHECK(config_error_pointer(
            R"({"version": 1, "tasks": [{"layers": ["a"], "scheme": {"type": "low_rank", "rank": 1, "k": 2}}]})") ==
        "/tasks/0/scheme/k");
  CHECK(config_error_pointer(
            R"({"version": 1, "tasks": [{"layers": ["a"], "scheme": {"type": "l0_constraint", "kappa": "5"}}]})") ==
        "/tasks/0/scheme/kappa");
  CHECK(config_error_pointer(
            R"({"version": 1, "tasks": [{"layers": ["a"], "scheme": {"type": "l0_constraint", "kappa": 2.5}}]})") ==
        "/tasks/0/scheme/kappa");
  CHECK(config_error_pointer(R"({"version": 1, "tasks": [{"layers": ["a"]}]})") == "/tasks/0");
  CHECK(config_error_pointer(R"({"version": 1, "tasks": [{"layers": ["a"], "view": {"matrix": [2]},
      "scheme": {"type": "binarize_fixed"}}]})") == "/tasks/0/view/matrix");
  CHECK(config_error_pointer(
            R"({"version": 1, "tasks": [{"layers": ["a"], "additive": [{"type": "binarize_fixed"}]}]})") ==
        "/tasks/0/additive");
  CHECK(config_error_pointer(R"({"version": 1, "model": {"layers": [784, 12]}})") == "/model/layers");
}

TEST_CASE("malformed JSON reports line and column") {
  try {
    parse_config("{\n  \"version\": 1,\n  \"tasks\": [,]\n}");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("config parses every scheme type") {
  const RunConfig c = parse_config(R"({
    "version": 1,
    "tasks": [
      {"layers": ["a"], "scheme": {"type": "adaptive_quantization", "k": 4, "method": "lloyd", "seed": 9}},
      {"layers": ["b"], "scheme": {"type": "binarize_fixed"}},
      {"layers": ["c"], "scheme": {"type": "binarize_scaled"}},
      {"layers": ["d"], "scheme": {"type": "ternarize_scaled"}},
      {"layers": ["e"], "scheme": {"type": "l0_constraint", "kappa": "5%"}},
      {"layers": ["f"], "scheme": {"type": "l1_constraint", "kappa": 2.5}},
      {"layers": ["g"], "scheme": {"type": "l0_penalty", "alpha": 1e-3}},
      {"layers": ["h"], "scheme": {"type": "l1_penalty", "alpha": 1e-3}},
      {"layers": ["i"], "view": "matrix", "scheme": {"type": "low_rank", "rank": 3}},
      {"layers": ["j"], "view": {"matrix": [2, 8]}, "scheme": {"type": "rank_select_storage", "lambda": 1e-4}},
      {"layers": ["k"], "view": "matrix", "scheme": {"type": "rank_select_flops", "lambda": 1, "alpha": 2}},
      {"layers": ["l", "m"], "additive": [{"type": "adaptive_quantization", "k": 2},
                                          {"type": "l0_constraint", "kappa": 3}]}
    ]
  })");
  REQUIRE(c.tasks.size() == 12);
  CHECK(c.tasks[0].schemes[0].method == "lloyd");
  CHECK(c.tasks[4].schemes[0].kappa_percent);
  CHECK(*c.tasks[4].schemes[0].kappa == 5.0);
  CHECK(c.tasks[9].view == ViewKind::as_matrix(2, 8));
  CHECK(c.tasks[11].additive);
  CHECK(build_scheme(c.tasks[4].schemes[0], 266200, 0)->summary().find("13310") != std::string::npos);
  CHECK(build_scheme(c.tasks[10].schemes[0], 10, 0)->name() == "rank_select_flops");
}

TEST_CASE("config round trips through its canonical JSON") {
  const RunConfig c = parse_config(kToyConfig);
  const std::string echo = config_json(c);
  CHECK(parse_config(echo) == c);
  CHECK(config_json(parse_config(echo)) == echo);
  const RunConfig r = resolve_defaults(c);
  CHECK(parse_config(config_json(r)) == r);
}

TEST_CASE("family defaults") {
  auto with = [](const char* scheme) {
    return resolve_defaults(parse_config(std::string(R"({"version": 1, "tasks": [{"layers": ["a"], "scheme": )") +
                                         scheme + "}]}"));
  };
  const RunConfig q = with(R"({"type": "adaptive_quantization", "k": 2})");
  CHECK(*q.schedule.a == 1.1);
  CHECK(*q.l_step.lr_base == 0.09);
  const RunConfig p = with(R"({"type": "l0_constraint", "kappa": 3})");
  CHECK(*p.schedule.a == 1.1);
  CHECK(*p.l_step.lr_base == 0.1);
  const RunConfig l = with(R"({"type": "low_rank", "rank": 3})");
  CHECK(*l.schedule.a == 1.4);
  CHECK(*l.l_step.lr_base == 0.05);
  const RunConfig d = resolve_defaults(parse_config(R"({"version": 1})"));
  CHECK(d.schedule.mu0 == 9e-5);
  CHECK(d.schedule.steps == 40);
  CHECK(d.l_step.epochs_per_step == 20);
  CHECK(d.l_step.decay == 0.98);
  const LStepHyper h = build_l_step(q, 3);
  CHECK(h.step_index == 3);
  CHECK(h.lr_base == 0.09);
  CHECK(build_schedule(l).a == 1.4);
}

TEST_CASE("tasks build against a model") {
  const MlpModel m({64, 16, 10}, Activation::kTanh, 1);
  const RunConfig c = parse_config(kToyConfig);
  const Plan plan = validate_tasks(m.parameters(), build_tasks(c, m.parameters()));
  CHECK(plan.tasks[1].shape.is_matrix);
  CHECK(plan.tasks[1].shape.rows == 10);
  CHECK(plan.tasks[1].shape.cols == 16);
  RunConfig bad = c;
  bad.tasks[1].layers = {"l1.weight", "l2.weight"};
  CHECK_THROWS_AS(build_tasks(bad, m.parameters()), ValidationError);
}

TEST_CASE("set_config_value") {
  const std::string base = kToyConfig;
  const RunConfig c = parse_config(set_config_value(base, "/tasks/0/scheme/k", "4"));
  CHECK(*c.tasks[0].schemes[0].k == 4);
  const std::string pct = set_config_value(
      R"({"version": 1, "tasks": [{"layers": ["a"], "scheme": {"type": "l0_constraint", "kappa": 5}}]})",
      "/tasks/0/scheme/kappa", "5%");
  CHECK(parse_config(pct).tasks[0].schemes[0].kappa_percent);
  CHECK_THROWS_AS(set_config_value(base, "/tasks/7/scheme/k", "4"), ConfigError);
  CHECK_THROWS_AS(set_config_value(base, "tasks", "4"), ConfigError);
}

TEST_CASE("train, compress, eval and sweep on a toy dataset") {
  const auto data = temp_dir("cli_data");
  write_toy_mnist(data, 200, 100);
  const auto out = temp_dir("cli_out");
  CommandContext ctx;
  ctx.data_dir = data.string();
  ctx.sequential = true;

  ctx.out_dir = (out / "ref").string();
  const RunConfig config = parse_config(kToyConfig);
  const TrainOutcome t = cmd_train(config, ctx);
  CHECK(t.test_err < 0.5);
  CHECK(std::filesystem::exists(out / "ref" / "reference_metrics.json"));

  const EvalOutcome er = cmd_eval({t.checkpoint.string(), data.string(), {}, {}}, {});
  CHECK(er.test_err == t.test_err);
  CHECK(er.train_err == t.train_err);

  ctx.out_dir = (out / "lc").string();
  const CompressOutcome c = cmd_compress(config, t.checkpoint.string(), ctx);
  CHECK(c.report.records.size() == 5);
  for (const MonitorEvent& e : c.events) CHECK(e.severity != Severity::kViolation);
  for (const char* f : {"report.csv", "report.json", "config.json", "compressed.lcck"}) {
    CHECK(std::filesystem::exists(out / "lc" / f));
  }
  RunConfig expected = resolve_defaults(config);
  expected.output.dir = (out / "lc").string();
  CHECK(parse_config(c.report.config) == expected);
  const EvalOutcome ec = cmd_eval({(out / "lc" / "compressed.lcck").string(), data.string(), {}, {}}, {});
  CHECK(ec.test_err == *c.report.records.back().test_err);
  CHECK(ec.train_err == *c.report.records.back().train_err);
  const LoadedCheckpoint ck = load_checkpoint(out / "lc" / "compressed.lcck");
  REQUIRE(ck.state.has_value());
  CHECK(ck.state->tasks.size() == 2);

  ctx.out_dir = (out / "sweep").string();
  const std::string text = kToyConfig;
  CHECK_THROWS_AS(cmd_sweep(text, "/tasks/0/scheme/k", {}, t.checkpoint.string(), ctx), ArgumentError);
  CHECK_THROWS_AS(cmd_sweep(text, "/tasks/0/scheme/kk", {"2"}, t.checkpoint.string(), ctx), ConfigError);
  const auto rows = cmd_sweep(text, "/tasks/0/scheme/k", {"2"}, t.checkpoint.string(), ctx);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].label == "k=2");
  CHECK(rows[0].ratio == c.report.ratio.ratio);
  CHECK(rows[0].test_err == c.report.records.back().test_err);
  CHECK(read_text(out / "sweep" / "point_0" / "report.csv") == read_text(out / "lc" / "report.csv"));
  CHECK(std::filesystem::exists(out / "sweep" / "sweep.csv"));
}

TEST_CASE("command errors") {
  const auto data = temp_dir("cli_err_data");
  write_toy_mnist(data, 20, 10);
  const auto out = temp_dir("cli_err");
  CommandContext ctx;
  ctx.out_dir = out.string();

  ctx.data_dir = (out / "nowhere").string();
  try {
    cmd_train(parse_config(kToyConfig), ctx);
    FAIL("expected an IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("nowhere") != std::string::npos);
  }

  const MlpModel small({64, 16, 10}, Activation::kTanh, 1);
  const MlpModel big({64, 20, 10}, Activation::kTanh, 1);
  save_checkpoint(out / "mixed.lcck", small, nullptr, {}, model_meta(big));
  CHECK_THROWS_AS(cmd_eval({(out / "mixed.lcck").string(), data.string(), {}, {}}, {}), ShapeError);

  ctx.data_dir = data.string();
  RunConfig config = parse_config(kToyConfig);
  config.tasks[0].layers = {"l7.weight"};
  save_checkpoint(out / "small.lcck", small, nullptr, {}, model_meta(small));
  try {
    cmd_compress(config, (out / "small.lcck").string(), ctx);
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.task_index() == 0);
  }
  CHECK_THROWS_AS(cmd_compress(parse_config(kToyConfig), std::nullopt, ctx), IoError);
}
