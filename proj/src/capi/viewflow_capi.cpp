#include "viewflow.h"

#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "core/collector.hpp"
#include "core/error.hpp"
#include "core/halflife.hpp"
#include "core/models.hpp"
#include "core/ratecurve.hpp"
#include "core/synth.hpp"
#include "core/timeline.hpp"

using namespace viewflow;

struct vf_corpus {
  std::vector<timeline::PostSeries> series;
};

struct vf_fit_results {
  std::vector<models::PostFit> fits;
};

struct vf_rate_curve {
  ratecurve::RateCurve curve;
};

struct vf_halflife_results {
  halflife::CorpusHalfLife data;
  halflife::Crossing crossing = halflife::Crossing::Interpolate;
};

namespace {

thread_local std::string t_last_error;

vf_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return VF_ERROR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return VF_ERROR_PARSE;
    case ErrorCode::Validation: return VF_ERROR_VALIDATION;
    case ErrorCode::Io: return VF_ERROR_IO;
    case ErrorCode::Empty: return VF_ERROR_EMPTY;
    case ErrorCode::Source: return VF_ERROR_SOURCE;
    case ErrorCode::Internal: return VF_ERROR_INTERNAL;
  }
  return VF_ERROR_INTERNAL;
}

vf_status set_error(vf_status status, const char* message) {
  t_last_error = message ? message : "";
  return status;
}

template <typename Fn>
vf_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return VF_OK;
  } catch (const Error& e) {
    return set_error(map_code(e.code()), e.what());
  } catch (const std::exception& e) {
    return set_error(VF_ERROR_INTERNAL, e.what());
  } catch (...) {
    return set_error(VF_ERROR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string rejects_report_json(const timeline::IngestResult& result) {
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& r : result.rejected) {
    rejected.push_back({{"line", r.line_number}, {"post_id", r.post_id}, {"reason", r.reason}});
  }
  nlohmann::json j{{"accepted", result.series.size()},
                   {"rejected", result.rejected.size()},
                   {"rejected_records", std::move(rejected)}};
  return j.dump();
}

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, std::string("cannot open ") + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

}  // namespace

extern "C" {

const char* vf_version_string(void) { return "1.0.0"; }

const char* vf_status_name(vf_status status) {
  switch (status) {
    case VF_OK: return "ok";
    case VF_ERROR_INVALID_ARGUMENT: return "invalid-argument";
    case VF_ERROR_PARSE: return "parse-error";
    case VF_ERROR_VALIDATION: return "validation-error";
    case VF_ERROR_IO: return "io-error";
    case VF_ERROR_EMPTY: return "empty-input";
    case VF_ERROR_SOURCE: return "source-error";
    case VF_ERROR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* vf_last_error_message(void) { return t_last_error.c_str(); }

void vf_string_free(char* s) { std::free(s); }

vf_status vf_corpus_parse_jsonl(const char* data, size_t len, vf_corpus** out,
                                char** report_json) {
  if (!data || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    timeline::IngestResult result = timeline::ingest_string(std::string_view(data, len));
    if (report_json) *report_json = dup_string(rejects_report_json(result));
    *out = new vf_corpus{std::move(result.series)};
  });
}

vf_status vf_corpus_load_jsonl(const char* path, vf_corpus** out, char** report_json) {
  if (!path || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::string text = read_file(path);
    timeline::IngestResult result = timeline::ingest_string(text);
    if (report_json) *report_json = dup_string(rejects_report_json(result));
    *out = new vf_corpus{std::move(result.series)};
  });
}

vf_status vf_corpus_emit_jsonl(const vf_corpus* corpus, char** out) {
  if (!corpus || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup_string(timeline::emit(corpus->series)); });
}

size_t vf_corpus_count(const vf_corpus* corpus) { return corpus ? corpus->series.size() : 0; }

const char* vf_corpus_post_id(const vf_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->series.size()) return nullptr;
  return corpus->series[index].post_id.c_str();
}

vf_status vf_corpus_filter_complete(const vf_corpus* corpus, int required_rounds,
                                    vf_corpus** out) {
  if (!corpus || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new vf_corpus{timeline::filter_complete(corpus->series, required_rounds)};
  });
}

vf_status vf_corpus_summary_json(const vf_corpus* corpus, char** out) {
  if (!corpus || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = dup_string(timeline::summary_json(timeline::summarize(corpus->series)));
  });
}

void vf_corpus_free(vf_corpus* corpus) { delete corpus; }

double vf_eval_sigmoid(double a, double b, double c, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0) || !(x >= 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  return models::eval_sigmoid({a, b, c}, x);
}

double vf_eval_log(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  return models::eval_log({a, b, 1.0}, x);
}

vf_status vf_classify(const vf_corpus* corpus, double window_seconds, long long min_views,
                      vf_fit_results** out) {
  if (!corpus || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (min_views < 0) fail(ErrorCode::InvalidArgument, "min_views must be >= 0");
    auto aligned = timeline::align_corpus(corpus->series);
    *out = new vf_fit_results{models::classify_corpus(aligned, window_seconds, min_views)};
  });
}

size_t vf_fit_results_count(const vf_fit_results* results) {
  return results ? results->fits.size() : 0;
}

vf_status vf_fit_results_get(const vf_fit_results* results, size_t index, vf_fit_item* out) {
  if (!results || !out || index >= results->fits.size())
    return set_error(VF_ERROR_INVALID_ARGUMENT, "bad results handle or index");
  const models::PostFit& pf = results->fits[index];
  out->post_id = pf.post_id.c_str();
  out->kind = pf.fit.kind == models::ModelKind::Sigmoid ? VF_MODEL_SIGMOID : VF_MODEL_LOG;
  out->a = pf.fit.params.a;
  out->b = pf.fit.params.b;
  out->c = pf.fit.params.c;
  out->mse = pf.fit.mse;
  out->n_grid_points = pf.fit.n_grid_points;
  out->converged = pf.fit.converged ? 1 : 0;
  return VF_OK;
}

vf_status vf_fit_results_json(const vf_fit_results* results, char** out) {
  if (!results || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup_string(models::fits_json(results->fits)); });
}

vf_status vf_fit_results_csv(const vf_fit_results* results, char** out) {
  if (!results || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup_string(models::fits_csv(results->fits)); });
}

void vf_fit_results_free(vf_fit_results* results) { delete results; }

vf_status vf_rate_curve_build(const vf_corpus* corpus, long long max_seconds,
                              vf_first_interval first_interval, vf_rate_curve** out) {
  if (!corpus || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto aligned = timeline::align_corpus(corpus->series);
    auto policy = first_interval == VF_FIRST_INTERVAL_DROP ? ratecurve::FirstInterval::Drop
                                                           : ratecurve::FirstInterval::Spread;
    *out = new vf_rate_curve{ratecurve::aggregate(aligned, max_seconds, policy)};
  });
}

size_t vf_rate_curve_length(const vf_rate_curve* curve) {
  return curve ? curve->curve.per_second.size() : 0;
}

double vf_rate_curve_mass(const vf_rate_curve* curve, size_t second) {
  if (!curve || second >= curve->curve.per_second.size()) return 0.0;
  return curve->curve.per_second[second];
}

size_t vf_rate_curve_post_count(const vf_rate_curve* curve) {
  return curve ? curve->curve.n_posts : 0;
}

vf_status vf_rate_curve_peak(const vf_rate_curve* curve, int smoothing_window,
                             long long* out_second) {
  if (!curve || !out_second) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out_second = ratecurve::peak(curve->curve, smoothing_window); });
}

vf_status vf_rate_curve_csv(const vf_rate_curve* curve, char** out) {
  if (!curve || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup_string(ratecurve::curve_csv(curve->curve)); });
}

void vf_rate_curve_free(vf_rate_curve* curve) { delete curve; }

vf_status vf_halflife_compute(const vf_corpus* corpus, double horizon_seconds,
                              vf_crossing crossing, vf_halflife_results** out) {
  if (!corpus || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (!(horizon_seconds > 0.0))
      fail(ErrorCode::InvalidArgument, "horizon_seconds must be positive");
    auto mode = crossing == VF_CROSSING_FIRST_OBSERVATION
                    ? halflife::Crossing::FirstObservation
                    : halflife::Crossing::Interpolate;
    auto aligned = timeline::align_corpus(corpus->series);
    *out = new vf_halflife_results{halflife::half_life_corpus(aligned, horizon_seconds, mode),
                                   mode};
  });
}

size_t vf_halflife_count(const vf_halflife_results* results) {
  return results ? results->data.results.size() : 0;
}

vf_status vf_halflife_get(const vf_halflife_results* results, size_t index,
                          vf_halflife_item* out) {
  if (!results || !out || index >= results->data.results.size())
    return set_error(VF_ERROR_INVALID_ARGUMENT, "bad results handle or index");
  const halflife::HalfLifeResult& r = results->data.results[index];
  out->post_id = r.post_id.c_str();
  out->half_life_seconds = r.half_life_seconds;
  out->reference_views = r.reference_views;
  out->censored = r.censored ? 1 : 0;
  return VF_OK;
}

vf_status vf_halflife_stats_json(const vf_halflife_results* results, char** out) {
  if (!results || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    halflife::HalfLifeStats stats = halflife::distribution(results->data.results);
    *out = dup_string(halflife::stats_json(stats, results->data, results->crossing));
  });
}

vf_status vf_halflife_csv(const vf_halflife_results* results, char** out) {
  if (!results || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup_string(halflife::results_csv(results->data.results)); });
}

vf_status vf_halflife_histogram_csv(const vf_halflife_results* results, char** out) {
  if (!results || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup_string(halflife::histogram_csv(results->data.results)); });
}

void vf_halflife_free(vf_halflife_results* results) { delete results; }

vf_status vf_growth_json(const vf_corpus* corpus, double t_early, double t_late, char** out) {
  if (!corpus || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto aligned = timeline::align_corpus(corpus->series);
    halflife::GrowthBuckets buckets = halflife::growth_buckets(aligned, t_early, t_late);
    double median = halflife::growth_factor_median(aligned, t_early, t_late);
    *out = dup_string(halflife::growth_json(buckets, median));
  });
}

vf_status vf_simulate(const char* spec_json, size_t len, unsigned long long master_seed,
                      vf_corpus** out) {
  if (!spec_json || !out) return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto specs = synth::parse_specs_json(std::string_view(spec_json, len));
    *out = new vf_corpus{synth::generate_corpus(specs, master_seed)};
  });
}

vf_status vf_collect(const char* plan_json, size_t len, vf_source_kind source_kind,
                     const char* http_base_url, const char* pages_out_path,
                     char** report_json) {
  if (!plan_json || !pages_out_path)
    return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    collector::PlanFile file = collector::parse_plan_json(std::string_view(plan_json, len));

    std::ofstream out(pages_out_path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, std::string("cannot open ") + pages_out_path);
    collector::JsonlPageSink sink(out);

    collector::CollectionReport report;
    if (source_kind == VF_SOURCE_MOCK) {
      int64_t start = file.plan.reference_time_ms.value_or(0);
      collector::SimulatedClock clock(start);
      collector::MockMetricsSource source(file.mock_posts, file.mock_faults,
                                          file.mock_latency_ms, clock);
      report = collector::run_plan(file.plan, source, sink, clock);
    } else {
      if (!http_base_url || http_base_url[0] == '\0')
        fail(ErrorCode::InvalidArgument, "http source requires a base URL");
      collector::SystemClock clock;
      collector::HttpMetricsSource source(http_base_url, clock);
      report = collector::run_plan(file.plan, source, sink, clock);
    }
    if (report_json) *report_json = dup_string(collector::report_json(report));
  });
}

vf_status vf_pages_to_series(const char* pages_path, const char* created_at_json, size_t len,
                             vf_corpus** out, char** report_json) {
  if (!pages_path || !created_at_json || !out)
    return set_error(VF_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::ifstream in(pages_path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, std::string("cannot open ") + pages_path);
    auto pages = collector::parse_pages_jsonl(in);

    nlohmann::json created;
    try {
      created = nlohmann::json::parse(std::string_view(created_at_json, len));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, std::string("created-at map: malformed JSON: ") + e.what());
    }
    if (created.is_object() && created.contains("created_at"))
      created = created.at("created_at");
    if (!created.is_object())
      fail(ErrorCode::Parse, "created-at map must be a JSON object of id -> ms");
    std::map<std::string, int64_t> created_at;
    for (const auto& [id, ts] : created.items()) {
      if (!ts.is_number_integer())
        fail(ErrorCode::Parse, "created-at map: value for " + id + " is not an integer");
      created_at[id] = ts.get<int64_t>();
    }

    collector::PagesToSeriesResult result = collector::pages_to_series(pages, created_at);
    if (report_json) {
      nlohmann::json j{{"series", result.series.size()}, {"issues", result.issues}};
      *report_json = dup_string(j.dump());
    }
    *out = new vf_corpus{std::move(result.series)};
  });
}

}  // extern "C"
