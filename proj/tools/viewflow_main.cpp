// Command-line front end. All analysis goes through the shared library's
// C API (viewflow.h); this translation unit only handles arguments, file
// plumbing, and exit codes.

#include <viewflow.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

constexpr double kPaperWindowSeconds = 1893.0;
constexpr double kPaperHorizonSeconds = 86400.0;
constexpr long long kPaperMinViews = 50;
constexpr int kPaperRounds = 99;
constexpr int kPaperPageSize = 500;
constexpr double kPaperOffsetSeconds = 10.0;

int exit_code_for(vf_status status) {
  switch (status) {
    case VF_OK:
      return kExitOk;
    case VF_ERROR_INVALID_ARGUMENT:
      return kExitUsage;
    case VF_ERROR_PARSE:
    case VF_ERROR_VALIDATION:
    case VF_ERROR_EMPTY:
      return kExitValidation;
    case VF_ERROR_IO:
    case VF_ERROR_SOURCE:
    case VF_ERROR_INTERNAL:
      return kExitIo;
  }
  return kExitIo;
}

[[nodiscard]] int report_failure(vf_status status, const std::string& context) {
  std::cerr << "viewflow: " << context << ": " << vf_status_name(status);
  const char* message = vf_last_error_message();
  if (message && message[0] != '\0') std::cerr << ": " << message;
  std::cerr << "\n";
  return exit_code_for(status);
}

// Owned string coming back from the C API.
struct CString {
  char* value = nullptr;
  ~CString() { vf_string_free(value); }
  std::string str() const { return value ? std::string(value) : std::string(); }
};

struct CorpusHandle {
  vf_corpus* value = nullptr;
  ~CorpusHandle() { vf_corpus_free(value); }
};

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = std::move(buf).str();
  return true;
}

// Full contents to a temp file in the same directory, then rename, so a
// failure never leaves a partial file behind.
bool write_file_atomic(const std::string& path, const std::string& contents) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << contents;
    if (!out) {
      std::remove(tmp.c_str());
      return false;
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    return false;
  }
  return true;
}

int write_or_fail(const std::string& path, const std::string& contents) {
  if (!write_file_atomic(path, contents)) {
    std::cerr << "viewflow: cannot write " << path << "\n";
    return kExitIo;
  }
  return kExitOk;
}

bool looks_like_pages(const std::string& text) {
  auto pos = text.find_first_not_of(" \t\r\n");
  if (pos == std::string::npos) return false;
  auto end = text.find('\n', pos);
  std::string first = text.substr(pos, end - pos);
  return first.find("\"query_time\"") != std::string::npos;
}

int cmd_ingest(const std::string& input, const std::string& output,
               const std::string& report_path, const std::string& created_at_path) {
  std::string text;
  if (!read_file(input, text)) {
    std::cerr << "viewflow: cannot read " << input << "\n";
    return kExitIo;
  }

  CorpusHandle corpus;
  CString report;
  vf_status status;
  if (looks_like_pages(text)) {
    if (created_at_path.empty()) {
      std::cerr << "viewflow: raw page input requires --created-at\n";
      return kExitUsage;
    }
    std::string created;
    if (!read_file(created_at_path, created)) {
      std::cerr << "viewflow: cannot read " << created_at_path << "\n";
      return kExitIo;
    }
    status = vf_pages_to_series(input.c_str(), created.c_str(), created.size(),
                               &corpus.value, &report.value);
  } else {
    status = vf_corpus_parse_jsonl(text.c_str(), text.size(), &corpus.value, &report.value);
  }
  if (status != VF_OK) return report_failure(status, "ingest " + input);

  CString series;
  status = vf_corpus_emit_jsonl(corpus.value, &series.value);
  if (status != VF_OK) return report_failure(status, "ingest " + input);

  if (int rc = write_or_fail(output, series.str()); rc != kExitOk) return rc;
  if (!report_path.empty()) {
    if (int rc = write_or_fail(report_path, report.str() + "\n"); rc != kExitOk) return rc;
  }
  std::cout << report.str() << "\n";
  return kExitOk;
}

int cmd_fit(const std::string& input, double window, long long min_views,
            const std::string& output, const std::string& csv_path) {
  CorpusHandle corpus;
  vf_status status = vf_corpus_load_jsonl(input.c_str(), &corpus.value, nullptr);
  if (status != VF_OK) return report_failure(status, "fit " + input);

  vf_fit_results* results = nullptr;
  status = vf_classify(corpus.value, window, min_views, &results);
  if (status != VF_OK) return report_failure(status, "fit " + input);

  CString json, csv;
  vf_fit_results_json(results, &json.value);
  vf_fit_results_csv(results, &csv.value);
  std::size_t count = vf_fit_results_count(results);
  vf_fit_results_free(results);

  if (count == 0) std::cerr << "viewflow: warning: no series met the fitting criteria\n";
  if (int rc = write_or_fail(output, json.str() + "\n"); rc != kExitOk) return rc;
  if (!csv_path.empty()) {
    if (int rc = write_or_fail(csv_path, csv.str()); rc != kExitOk) return rc;
  }
  std::cout << "fitted " << count << " series\n";
  return kExitOk;
}

int cmd_ratecurve(const std::string& input, long long max_seconds, int smoothing,
                  const std::string& first_interval, const std::string& output,
                  const std::string& report_path) {
  CorpusHandle corpus;
  vf_status status = vf_corpus_load_jsonl(input.c_str(), &corpus.value, nullptr);
  if (status != VF_OK) return report_failure(status, "ratecurve " + input);

  vf_first_interval policy =
      first_interval == "drop" ? VF_FIRST_INTERVAL_DROP : VF_FIRST_INTERVAL_SPREAD;
  vf_rate_curve* curve = nullptr;
  status = vf_rate_curve_build(corpus.value, max_seconds, policy, &curve);
  if (status != VF_OK) return report_failure(status, "ratecurve " + input);

  long long peak_second = 0;
  status = vf_rate_curve_peak(curve, smoothing, &peak_second);
  if (status != VF_OK) {
    vf_rate_curve_free(curve);
    return report_failure(status, "ratecurve " + input);
  }
  CString csv;
  vf_rate_curve_csv(curve, &csv.value);
  std::size_t n_posts = vf_rate_curve_post_count(curve);
  vf_rate_curve_free(curve);

  if (int rc = write_or_fail(output, csv.str()); rc != kExitOk) return rc;
  if (!report_path.empty()) {
    nlohmann::json j{{"peak_second", peak_second},
                     {"n_posts", n_posts},
                     {"smoothing_window", smoothing},
                     {"first_interval", first_interval}};
    if (int rc = write_or_fail(report_path, j.dump() + "\n"); rc != kExitOk) return rc;
  }
  std::cout << "peak_second=" << peak_second << " n_posts=" << n_posts << "\n";
  return kExitOk;
}

int cmd_halflife(const std::string& input, double horizon, const std::string& crossing,
                 const std::string& output, const std::string& stats_path,
                 const std::string& histogram_path) {
  CorpusHandle corpus;
  vf_status status = vf_corpus_load_jsonl(input.c_str(), &corpus.value, nullptr);
  if (status != VF_OK) return report_failure(status, "halflife " + input);

  vf_crossing mode = crossing == "first-observation" ? VF_CROSSING_FIRST_OBSERVATION
                                                     : VF_CROSSING_INTERPOLATE;
  vf_halflife_results* results = nullptr;
  status = vf_halflife_compute(corpus.value, horizon, mode, &results);
  if (status != VF_OK) return report_failure(status, "halflife " + input);

  CString csv, stats, histogram;
  vf_halflife_csv(results, &csv.value);
  vf_status stats_status = vf_halflife_stats_json(results, &stats.value);
  vf_halflife_histogram_csv(results, &histogram.value);
  std::size_t count = vf_halflife_count(results);
  vf_halflife_free(results);

  if (int rc = write_or_fail(output, csv.str()); rc != kExitOk) return rc;
  if (!stats_path.empty()) {
    if (stats_status != VF_OK) return report_failure(stats_status, "halflife " + input);
    if (int rc = write_or_fail(stats_path, stats.str() + "\n"); rc != kExitOk) return rc;
  }
  if (!histogram_path.empty()) {
    if (int rc = write_or_fail(histogram_path, histogram.str()); rc != kExitOk) return rc;
  }
  std::cout << "half-life computed for " << count << " posts\n";
  return kExitOk;
}

int cmd_growth(const std::string& input, double t_early, double t_late,
               const std::string& output) {
  CorpusHandle corpus;
  vf_status status = vf_corpus_load_jsonl(input.c_str(), &corpus.value, nullptr);
  if (status != VF_OK) return report_failure(status, "growth " + input);

  CString growth;
  status = vf_growth_json(corpus.value, t_early, t_late, &growth.value);
  if (status != VF_OK) return report_failure(status, "growth " + input);
  if (int rc = write_or_fail(output, growth.str() + "\n"); rc != kExitOk) return rc;
  std::cout << growth.str() << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& spec_path, unsigned long long seed,
                 const std::string& output) {
  std::string spec;
  if (!read_file(spec_path, spec)) {
    std::cerr << "viewflow: cannot read " << spec_path << "\n";
    return kExitIo;
  }
  CorpusHandle corpus;
  vf_status status = vf_simulate(spec.c_str(), spec.size(), seed, &corpus.value);
  if (status != VF_OK) return report_failure(status, "simulate " + spec_path);

  CString series;
  status = vf_corpus_emit_jsonl(corpus.value, &series.value);
  if (status != VF_OK) return report_failure(status, "simulate " + spec_path);
  if (int rc = write_or_fail(output, series.str()); rc != kExitOk) return rc;
  std::cout << "simulated " << vf_corpus_count(corpus.value) << " series\n";
  return kExitOk;
}

int cmd_collect(const std::string& plan_path, const std::string& source,
                const std::string& url, const std::string& output,
                const std::string& report_path, bool paper_defaults) {
  std::string plan;
  if (!read_file(plan_path, plan)) {
    std::cerr << "viewflow: cannot read " << plan_path << "\n";
    return kExitIo;
  }
  if (paper_defaults) {
    nlohmann::json j = nlohmann::json::parse(plan, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      std::cerr << "viewflow: " << plan_path << " is not a JSON object\n";
      return kExitValidation;
    }
    j["rounds"] = kPaperRounds;
    j["page_size"] = kPaperPageSize;
    j["initial_offset_seconds"] = kPaperOffsetSeconds;
    plan = j.dump();
  }

  vf_source_kind kind = source == "http" ? VF_SOURCE_HTTP : VF_SOURCE_MOCK;
  if (kind == VF_SOURCE_HTTP && url.empty()) {
    std::cerr << "viewflow: --source http requires --url\n";
    return kExitUsage;
  }

  CString report;
  vf_status status = vf_collect(plan.c_str(), plan.size(), kind,
                                url.empty() ? nullptr : url.c_str(), output.c_str(),
                                &report.value);
  if (status != VF_OK) return report_failure(status, "collect " + plan_path);
  if (!report_path.empty()) {
    if (int rc = write_or_fail(report_path, report.str() + "\n"); rc != kExitOk) return rc;
  }
  std::cout << report.str() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viewflow: short-term view-count diffusion analysis"};
  app.require_subcommand(1);

  // ingest
  std::string in_input, in_output, in_report, in_created_at;
  auto* ingest = app.add_subcommand(
      "ingest", "Validate series or raw page JSONL and emit canonical series JSONL");
  ingest->add_option("--input", in_input, "series or raw page JSONL")->required();
  ingest->add_option("--output", in_output, "validated series JSONL")->required();
  ingest->add_option("--report", in_report, "validation report JSON");
  ingest->add_option("--created-at", in_created_at,
                     "JSON map post_id -> created_at ms (raw page input)");

  // fit
  std::string fit_input, fit_output, fit_csv;
  double fit_window = 0.0;
  long long fit_min_views = 0;
  bool fit_paper = false;
  auto* fit = app.add_subcommand("fit", "Fit both decay models and keep the better one");
  fit->add_option("--input", fit_input, "series JSONL")->required();
  fit->add_option("--window", fit_window, "observation window in seconds");
  fit->add_option("--min-views", fit_min_views, "keep posts with more views than this");
  fit->add_option("--output", fit_output, "fit results JSON")->required();
  fit->add_option("--csv", fit_csv, "also write a CSV copy");
  fit->add_flag("--paper-defaults", fit_paper, "window=1893, min-views=50");

  // ratecurve
  std::string rc_input, rc_output, rc_report, rc_first = "spread";
  long long rc_max_seconds = 0;
  int rc_smoothing = 1;
  bool rc_paper = false;
  auto* ratecurve =
      app.add_subcommand("ratecurve", "Aggregate per-second impression-rate curve");
  ratecurve->add_option("--input", rc_input, "series JSONL")->required();
  ratecurve->add_option("--max-seconds", rc_max_seconds, "curve length in seconds");
  ratecurve->add_option("--smoothing", rc_smoothing, "odd moving-average width")
      ->check(CLI::PositiveNumber);
  ratecurve->add_option("--first-interval", rc_first, "spread|drop")
      ->check(CLI::IsMember({"spread", "drop"}));
  ratecurve->add_option("--output", rc_output, "curve CSV")->required();
  ratecurve->add_option("--report", rc_report, "peak report JSON");
  ratecurve->add_flag("--paper-defaults", rc_paper, "max-seconds=1893");

  // halflife
  std::string hl_input, hl_output, hl_stats, hl_histogram, hl_crossing = "interpolate";
  double hl_horizon = 0.0;
  bool hl_paper = false;
  auto* halflife = app.add_subcommand("halflife", "Per-post half-life and distribution");
  halflife->add_option("--input", hl_input, "series JSONL")->required();
  halflife->add_option("--horizon", hl_horizon, "reference horizon in seconds");
  halflife->add_option("--crossing", hl_crossing, "interpolate|first-observation")
      ->check(CLI::IsMember({"interpolate", "first-observation"}));
  halflife->add_option("--output", hl_output, "per-post CSV")->required();
  halflife->add_option("--stats", hl_stats, "distribution stats JSON");
  halflife->add_option("--histogram", hl_histogram, "1-minute-bin histogram CSV");
  halflife->add_flag("--paper-defaults", hl_paper, "horizon=86400");

  // growth
  std::string gr_input, gr_output;
  double gr_early = 0.0, gr_late = 0.0;
  auto* growth = app.add_subcommand("growth", "Growth buckets between two ages");
  growth->add_option("--input", gr_input, "series JSONL")->required();
  growth->add_option("--t-early", gr_early, "early age in seconds")->required();
  growth->add_option("--t-late", gr_late, "late age in seconds")->required();
  growth->add_option("--output", gr_output, "growth report JSON")->required();

  // simulate
  std::string sim_spec, sim_output;
  unsigned long long sim_seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corpus");
  simulate->add_option("--spec", sim_spec, "generator spec JSON")->required();
  simulate->add_option("--seed", sim_seed, "master seed");
  simulate->add_option("--output", sim_output, "series JSONL")->required();

  // collect
  std::string col_plan, col_source = "mock", col_url, col_output, col_report;
  bool col_paper = false;
  auto* collect = app.add_subcommand("collect", "Run a repeated-collection plan");
  collect->add_option("--plan", col_plan, "collection plan JSON")->required();
  collect->add_option("--source", col_source, "mock|http")
      ->check(CLI::IsMember({"mock", "http"}));
  collect->add_option("--url", col_url, "metrics endpoint base URL (http source)");
  collect->add_option("--output", col_output, "raw page JSONL")->required();
  collect->add_option("--report", col_report, "collection report JSON");
  collect->add_flag("--paper-defaults", col_paper,
                    "rounds=99, page-size=500, offset=10");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (ingest->parsed())
    return cmd_ingest(in_input, in_output, in_report, in_created_at);
  if (fit->parsed()) {
    if (fit_paper) {
      if (fit->count("--window") == 0) fit_window = kPaperWindowSeconds;
      if (fit->count("--min-views") == 0) fit_min_views = kPaperMinViews;
    }
    if (!(fit_window > 0.0)) {
      std::cerr << "viewflow: fit requires --window (or --paper-defaults)\n";
      return kExitUsage;
    }
    return cmd_fit(fit_input, fit_window, fit_min_views, fit_output, fit_csv);
  }
  if (ratecurve->parsed()) {
    if (rc_paper && ratecurve->count("--max-seconds") == 0)
      rc_max_seconds = static_cast<long long>(kPaperWindowSeconds);
    if (rc_max_seconds < 1) {
      std::cerr << "viewflow: ratecurve requires --max-seconds >= 1\n";
      return kExitUsage;
    }
    return cmd_ratecurve(rc_input, rc_max_seconds, rc_smoothing, rc_first, rc_output,
                         rc_report);
  }
  if (halflife->parsed()) {
    if (hl_paper && halflife->count("--horizon") == 0) hl_horizon = kPaperHorizonSeconds;
    if (!(hl_horizon > 0.0)) {
      std::cerr << "viewflow: halflife requires --horizon (or --paper-defaults)\n";
      return kExitUsage;
    }
    return cmd_halflife(hl_input, hl_horizon, hl_crossing, hl_output, hl_stats,
                        hl_histogram);
  }
  if (growth->parsed()) return cmd_growth(gr_input, gr_early, gr_late, gr_output);
  if (simulate->parsed()) return cmd_simulate(sim_spec, sim_seed, sim_output);
  if (collect->parsed())
    return cmd_collect(col_plan, col_source, col_url, col_output, col_report, col_paper);

  return kExitUsage;
}
