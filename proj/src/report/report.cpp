#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "lc/report.hpp"

namespace lc {

namespace {

using nlohmann::json;

constexpr const char* kCsvHeader = "step,mu,l_loss_before,l_loss_after,c_distortion,mismatch,train_err,test_err";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ParseError(ParseErrorKind::kMalformed, "not a number: '" + s + "'");
  return v;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_num(s);
}

// JSON has no NaN or infinities; they travel as strings.
json jnum(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json jopt(const std::optional<double>& v) { return v ? jnum(*v) : json(nullptr); }

double from_jnum(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  throw ParseError(ParseErrorKind::kMalformed, "expected a number, got " + j.dump());
}

std::optional<double> from_jopt(const json& j) {
  if (j.is_null()) return std::nullopt;
  return from_jnum(j);
}

json stats_json(const CStepStats& s) {
  return {{"distortion", jnum(s.distortion)},
          {"pre_distortion", jnum(s.pre_distortion)},
          {"objective", jnum(s.objective)},
          {"pre_objective", jnum(s.pre_objective)}};
}

CStepStats stats_from(const json& j) {
  CStepStats s;
  s.distortion = from_jnum(j.at("distortion"));
  s.pre_distortion = from_jnum(j.at("pre_distortion"));
  s.objective = from_jnum(j.at("objective"));
  s.pre_objective = from_jnum(j.at("pre_objective"));
  return s;
}

}  // namespace

std::string report_csv(const RunReport& report) {
  std::ostringstream os;
  os << kCsvHeader << "\n";
  for (const StepRecord& r : report.records) {
    os << r.step << "," << num(r.mu) << "," << opt(r.l_loss_before) << "," << opt(r.l_loss_after) << ","
       << num(r.c_distortion()) << "," << num(r.mismatch) << "," << opt(r.train_err) << ","
       << opt(r.test_err) << "\n";
  }
  return os.str();
}

std::vector<CsvRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split(line, ',') != split(kCsvHeader, ',')) {
    throw ParseError(ParseErrorKind::kMalformed, "report CSV: unexpected header");
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw ParseError(ParseErrorKind::kMalformed, "report CSV: expected 8 fields: " + line);
    CsvRow r;
    r.step = static_cast<int>(parse_num(f[0]));
    r.mu = parse_num(f[1]);
    r.l_loss_before = parse_opt(f[2]);
    r.l_loss_after = parse_opt(f[3]);
    r.c_distortion = parse_num(f[4]);
    r.mismatch = parse_num(f[5]);
    r.train_err = parse_opt(f[6]);
    r.test_err = parse_opt(f[7]);
    rows.push_back(r);
  }
  return rows;
}

std::string report_json(const RunReport& report) {
  json j;
  json config = json::parse(report.config, nullptr, false);
  j["config"] = config.is_discarded() ? json(report.config) : config;
  j["config_is_json"] = !config.is_discarded();
  j["converged"] = report.converged;
  j["aborted"] = report.aborted ? json(*report.aborted) : json(nullptr);
  j["records"] = json::array();
  for (const StepRecord& r : report.records) {
    json rec = {{"step", r.step},
                {"mu", jnum(r.mu)},
                {"l_loss_before", jopt(r.l_loss_before)},
                {"l_loss_after", jopt(r.l_loss_after)},
                {"c_distortion", jnum(r.c_distortion())},
                {"mismatch", jnum(r.mismatch)},
                {"train_err", jopt(r.train_err)},
                {"test_err", jopt(r.test_err)},
                {"train_err_w", jopt(r.train_err_w)},
                {"test_err_w", jopt(r.test_err_w)}};
    rec["c_steps"] = json::array();
    for (const CStepStats& s : r.c_steps) rec["c_steps"].push_back(stats_json(s));
    j["records"].push_back(rec);
  }
  const RatioReport& q = report.ratio;
  j["ratio"] = {{"reference_bits", jnum(q.reference_bits)},
                {"compressed_bits", jnum(q.compressed_bits)},
                {"ratio", jnum(q.ratio)},
                {"covered_reference_bits", jnum(q.covered_reference_bits)},
                {"covered_compressed_bits", jnum(q.covered_compressed_bits)},
                {"covered_ratio", jnum(q.covered_ratio)}};
  j["tasks"] = json::array();
  for (const TaskSummary& t : report.tasks) {
    j["tasks"].push_back({{"parameters", t.parameters},
                          {"view", t.view},
                          {"scheme", t.scheme},
                          {"form", t.form},
                          {"storage_bits", jnum(t.storage_bits)}});
  }
  return j.dump(2) + "\n";
}

RunReport parse_report_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunReport report;
    report.config = j.at("config_is_json").get<bool>() ? j.at("config").dump()
                                                       : j.at("config").get<std::string>();
    report.converged = j.at("converged").get<bool>();
    if (!j.at("aborted").is_null()) report.aborted = j.at("aborted").get<std::string>();
    for (const json& rec : j.at("records")) {
      StepRecord r;
      r.step = rec.at("step").get<int>();
      r.mu = from_jnum(rec.at("mu"));
      r.l_loss_before = from_jopt(rec.at("l_loss_before"));
      r.l_loss_after = from_jopt(rec.at("l_loss_after"));
      r.mismatch = from_jnum(rec.at("mismatch"));
      r.train_err = from_jopt(rec.at("train_err"));
      r.test_err = from_jopt(rec.at("test_err"));
      r.train_err_w = from_jopt(rec.at("train_err_w"));
      r.test_err_w = from_jopt(rec.at("test_err_w"));
      for (const json& s : rec.at("c_steps")) r.c_steps.push_back(stats_from(s));
      report.records.push_back(std::move(r));
    }
    const json& q = j.at("ratio");
    report.ratio.reference_bits = from_jnum(q.at("reference_bits"));
    report.ratio.compressed_bits = from_jnum(q.at("compressed_bits"));
    report.ratio.ratio = from_jnum(q.at("ratio"));
    report.ratio.covered_reference_bits = from_jnum(q.at("covered_reference_bits"));
    report.ratio.covered_compressed_bits = from_jnum(q.at("covered_compressed_bits"));
    report.ratio.covered_ratio = from_jnum(q.at("covered_ratio"));
    for (const json& t : j.at("tasks")) {
      report.tasks.push_back({t.at("parameters").get<std::string>(), t.at("view").get<std::string>(),
                              t.at("scheme").get<std::string>(), t.at("form").get<std::string>(),
                              from_jnum(t.at("storage_bits"))});
    }
    return report;
  } catch (const json::exception& e) {
    throw ParseError(ParseErrorKind::kMalformed, std::string("report JSON: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void emit_report(const RunReport& report, const std::filesystem::path& path, ReportFormat format) {
  write_text(path, format == ReportFormat::kCsv ? report_csv(report) : report_json(report));
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "label,value,ratio,covered_ratio,train_err,test_err,mismatch,converged\n";
  for (const SweepRow& r : rows) {
    os << r.label << "," << num(r.value) << "," << num(r.ratio) << "," << num(r.covered_ratio) << ","
       << opt(r.train_err) << "," << opt(r.test_err) << "," << num(r.mismatch) << ","
       << (r.converged ? "true" : "false") << "\n";
  }
  return os.str();
}

}  // namespace lc
