#include "core/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "core/error.hpp"

namespace viewflow::timeline {

using nlohmann::json;

int64_t final_views(const PostSeries& series) {
  return series.observations.empty() ? 0 : series.observations.back().views;
}

std::optional<std::string> validate(const PostSeries& series) {
  if (series.post_id.empty()) return "empty post_id";
  int64_t prev_ts = series.created_at_ms;
  int64_t prev_views = -1;
  bool first = true;
  for (const auto& obs : series.observations) {
    if (obs.views < 0) return "negative view count";
    if (obs.collected_at_ms <= series.created_at_ms)
      return "observation at or before created_at";
    if (!first && obs.collected_at_ms <= prev_ts)
      return obs.collected_at_ms == prev_ts
                 ? "duplicate collection timestamp"
                 : "observations not in increasing time order";
    if (obs.views < prev_views) return "decreasing view count";
    prev_ts = obs.collected_at_ms;
    prev_views = obs.views;
    first = false;
  }
  return std::nullopt;
}

namespace {

int64_t require_int(const json& j, const char* field) {
  if (!j.contains(field)) fail(ErrorCode::Parse, std::string("missing field ") + field);
  const json& v = j.at(field);
  if (!v.is_number_integer())
    fail(ErrorCode::Parse, std::string("field ") + field + " is not an integer");
  return v.get<int64_t>();
}

PostSeries parse_record(const json& j) {
  if (!j.is_object()) fail(ErrorCode::Parse, "record is not a JSON object");
  PostSeries s;
  if (!j.contains("post_id") || !j.at("post_id").is_string())
    fail(ErrorCode::Parse, "missing or non-string post_id");
  s.post_id = j.at("post_id").get<std::string>();
  s.created_at_ms = require_int(j, "created_at");
  if (!j.contains("observations") || !j.at("observations").is_array())
    fail(ErrorCode::Parse, "missing or non-array observations");
  for (const auto& o : j.at("observations")) {
    if (!o.is_array() || o.size() != 2 || !o[0].is_number_integer() ||
        !o[1].is_number_integer())
      fail(ErrorCode::Parse, "observation is not a [timestamp, views] integer pair");
    s.observations.push_back({o[0].get<int64_t>(), o[1].get<int64_t>()});
  }
  return s;
}

}  // namespace

IngestResult ingest(std::istream& in) {
  IngestResult result;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    PostSeries s;
    try {
      s = parse_record(json::parse(line));
    } catch (const json::exception& e) {
      result.rejected.push_back({line_no, "", std::string("malformed JSON: ") + e.what()});
      continue;
    } catch (const Error& e) {
      result.rejected.push_back({line_no, "", e.what()});
      continue;
    }
    if (auto reason = validate(s)) {
      result.rejected.push_back({line_no, s.post_id, *reason});
      continue;
    }
    if (!seen_ids.insert(s.post_id).second) {
      result.rejected.push_back({line_no, s.post_id, "duplicate post_id"});
      continue;
    }
    result.series.push_back(std::move(s));
  }
  return result;
}

IngestResult ingest_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ingest(in);
}

std::string emit_record(const PostSeries& series) {
  json obs = json::array();
  for (const auto& o : series.observations)
    obs.push_back(json::array({o.collected_at_ms, o.views}));
  json j{{"post_id", series.post_id},
         {"created_at", series.created_at_ms},
         {"observations", std::move(obs)}};
  return j.dump();
}

std::string emit(const std::vector<PostSeries>& corpus) {
  std::string out;
  for (const auto& s : corpus) {
    out += emit_record(s);
    out += '\n';
  }
  return out;
}

AlignedSeries align(const PostSeries& series) {
  AlignedSeries aligned;
  aligned.post_id = series.post_id;
  aligned.points.reserve(series.observations.size());
  for (const auto& obs : series.observations) {
    double age = static_cast<double>(obs.collected_at_ms - series.created_at_ms) / 1000.0;
    aligned.points.push_back({age, obs.views});
  }
  return aligned;
}

std::vector<AlignedSeries> align_corpus(const std::vector<PostSeries>& corpus) {
  std::vector<AlignedSeries> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(align(s));
  return out;
}

std::vector<PostSeries> filter_complete(const std::vector<PostSeries>& corpus,
                                        int required_rounds) {
  if (required_rounds < 1)
    fail(ErrorCode::InvalidArgument, "required_rounds must be >= 1");
  std::vector<PostSeries> kept;
  for (const auto& s : corpus)
    if (s.observations.size() >= static_cast<std::size_t>(required_rounds))
      kept.push_back(s);
  return kept;
}

CorpusSummary summarize(const std::vector<PostSeries>& corpus) {
  if (corpus.empty()) fail(ErrorCode::Empty, "summarize: empty corpus");
  CorpusSummary summary;
  summary.n_posts = corpus.size();

  std::vector<int64_t> finals;
  finals.reserve(corpus.size());
  for (const auto& s : corpus) finals.push_back(final_views(s));
  std::sort(finals.begin(), finals.end());

  double sum = 0.0;
  std::map<int, std::size_t> hist;
  for (int64_t v : finals) {
    if (v == 0) ++summary.n_zero_view;
    sum += static_cast<double>(v);
    int bucket = static_cast<int>(std::floor(std::log10(static_cast<double>(v) + 1.0) / 0.1));
    ++hist[bucket];
  }
  summary.mean_views = sum / static_cast<double>(finals.size());
  std::size_t n = finals.size();
  summary.median_views =
      (n % 2 == 1) ? static_cast<double>(finals[n / 2])
                   : (static_cast<double>(finals[n / 2 - 1]) +
                      static_cast<double>(finals[n / 2])) /
                         2.0;
  summary.view_histogram_log10.assign(hist.begin(), hist.end());
  return summary;
}

std::string summary_json(const CorpusSummary& summary) {
  json buckets = json::array();
  for (const auto& [idx, count] : summary.view_histogram_log10)
    buckets.push_back(json::array({idx, count}));
  json j{{"n_posts", summary.n_posts},
         {"n_zero_view", summary.n_zero_view},
         {"zero_view_share",
          static_cast<double>(summary.n_zero_view) / static_cast<double>(summary.n_posts)},
         {"mean_views", summary.mean_views},
         {"median_views", summary.median_views},
         {"view_histogram_log10", {{"bucket_width", 0.1}, {"counts", std::move(buckets)}}}};
  return j.dump();
}

}  // namespace viewflow::timeline
