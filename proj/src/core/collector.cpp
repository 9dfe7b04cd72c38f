#include "core/collector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "core/error.hpp"

namespace viewflow::collector {

using nlohmann::json;

int64_t SystemClock::now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void SystemClock::sleep_ms(int64_t ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

namespace {

void check_plan(const CollectionPlan& plan) {
  if (plan.rounds < 1) fail(ErrorCode::InvalidArgument, "plan: rounds must be >= 1");
  if (plan.page_size < 1 || plan.page_size > 500)
    fail(ErrorCode::InvalidArgument, "plan: page_size must be in [1, 500]");
  if (plan.post_ids.empty()) fail(ErrorCode::InvalidArgument, "plan: post_ids is empty");
  if (!plan.inter_round.immediate && !(plan.inter_round.fixed_interval_seconds > 0.0))
    fail(ErrorCode::InvalidArgument, "plan: fixed inter-round interval must be positive");
}

}  // namespace

CollectionReport run_plan(const CollectionPlan& plan, MetricsSource& source, PageSink& sink,
                          Clock& clock) {
  check_plan(plan);
  CollectionReport report;

  std::vector<std::string> ids = plan.post_ids;
  std::sort(ids.begin(), ids.end());

  const int64_t reference = plan.reference_time_ms.value_or(clock.now_ms());
  const int64_t start = reference + std::llround(plan.initial_offset_seconds * 1000.0);
  if (clock.now_ms() < start) clock.sleep_ms(start - clock.now_ms());

  const auto pages_per_round =
      (ids.size() + static_cast<std::size_t>(plan.page_size) - 1) /
      static_cast<std::size_t>(plan.page_size);

  std::set<std::string> ever_missing;
  int64_t last_query_time = std::numeric_limits<int64_t>::min();

  for (int round = 0; round < plan.rounds; ++round) {
    const int64_t round_start = clock.now_ms();
    source.begin_round(round);
    std::set<std::string> seen_this_round;

    for (std::size_t page = 0; page < pages_per_round; ++page) {
      int64_t query_time = clock.now_ms();
      if (query_time < last_query_time) {
        report.aborted = true;
        report.abort_reason = "clock went backwards in round " + std::to_string(round);
        return report;
      }
      if (query_time == last_query_time) {
        // Query times must be strictly increasing; wait out the tie.
        clock.sleep_ms(1);
        query_time = clock.now_ms();
        if (query_time <= last_query_time) {
          report.aborted = true;
          report.abort_reason = "clock not advancing in round " + std::to_string(round);
          return report;
        }
      }
      last_query_time = query_time;

      auto begin = ids.begin() + static_cast<std::ptrdiff_t>(page * plan.page_size);
      auto end = ids.begin() + static_cast<std::ptrdiff_t>(
                                   std::min(ids.size(), (page + 1) * plan.page_size));
      std::vector<std::string> page_ids(begin, end);

      FetchResult fetched = source.fetch(page_ids);

      PageRecord record;
      record.round_index = round;
      record.page_index = static_cast<int>(page);
      record.query_time_ms = query_time;
      if (!fetched.ok) {
        record.status = PageStatus::Error;
        record.error_code = fetched.error_code;
        ++report.error_pages;
        for (const auto& id : page_ids) ever_missing.insert(id);
      } else {
        record.entries = std::move(fetched.entries);
        record.missing_ids = std::move(fetched.missing_ids);
        record.status = record.missing_ids.empty() ? PageStatus::Ok : PageStatus::Missing;
        for (const auto& [id, views] : record.entries) {
          (void)views;
          seen_this_round.insert(id);
        }
        for (const auto& id : record.missing_ids) ever_missing.insert(id);
      }
      sink.write(record);
      ++report.pages_written;
    }

    for (const auto& id : ids)
      if (!seen_this_round.count(id)) ever_missing.insert(id);

    ++report.rounds_completed;
    report.round_span_ms.push_back(clock.now_ms() - round_start);

    if (!plan.inter_round.immediate && round + 1 < plan.rounds) {
      int64_t next_start =
          start + std::llround(plan.inter_round.fixed_interval_seconds * 1000.0) *
                      static_cast<int64_t>(round + 1);
      if (clock.now_ms() < next_start) clock.sleep_ms(next_start - clock.now_ms());
    }
  }

  report.missing_post_ids.assign(ever_missing.begin(), ever_missing.end());
  return report;
}

MockMetricsSource::MockMetricsSource(std::vector<MockPost> posts, std::vector<MockFault> faults,
                                     int64_t latency_ms, Clock& clock)
    : faults_(std::move(faults)), latency_ms_(latency_ms), clock_(clock) {
  for (auto& p : posts) {
    std::string id = p.post_id;
    posts_.emplace(std::move(id), std::move(p));
  }
}

FetchResult MockMetricsSource::fetch(const std::vector<std::string>& ids) {
  if (latency_ms_ > 0) clock_.sleep_ms(latency_ms_);

  const MockFault* fault = nullptr;
  for (const auto& f : faults_)
    if (f.round_index == round_) fault = &f;

  FetchResult result;
  if (fault && fault->error_code != 0) {
    result.ok = false;
    result.error_code = fault->error_code;
    return result;
  }

  const int64_t now = clock_.now_ms();
  for (const auto& id : ids) {
    auto it = posts_.find(id);
    bool hidden = fault && std::find(fault->missing_ids.begin(), fault->missing_ids.end(),
                                     id) != fault->missing_ids.end();
    if (it == posts_.end() || hidden) {
      result.missing_ids.push_back(id);
      continue;
    }
    const MockPost& post = it->second;
    double age = static_cast<double>(now - post.created_at_ms) / 1000.0;
    int64_t views =
        age <= 0.0 ? 0 : std::llround(synth::expected_views(post.trajectory, age));
    result.entries.emplace_back(id, views);
  }
  return result;
}

struct HttpMetricsSource::Impl {
  std::string host;
  std::string path_prefix;
  std::string token;
  Clock& clock;
  httplib::Client client;

  Impl(const std::string& base_url, Clock& clk)
      : clock(clk), client(split_host(base_url)) {
    path_prefix = split_path(base_url);
    if (const char* t = std::getenv("VIEWFLOW_API_TOKEN")) token = t;
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(30, 0);
  }

  static std::string split_host(const std::string& url) {
    auto scheme = url.find("://");
    auto start = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = url.find('/', start);
    return url.substr(0, slash == std::string::npos ? url.size() : slash);
  }

  static std::string split_path(const std::string& url) {
    auto scheme = url.find("://");
    auto start = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = url.find('/', start);
    if (slash == std::string::npos) return "";
    std::string path = url.substr(slash);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return path;
  }
};

HttpMetricsSource::HttpMetricsSource(std::string base_url, Clock& clock)
    : impl_(std::make_unique<Impl>(base_url, clock)) {}

HttpMetricsSource::~HttpMetricsSource() = default;

FetchResult HttpMetricsSource::fetch(const std::vector<std::string>& ids) {
  std::string joined;
  for (const auto& id : ids) {
    if (!joined.empty()) joined += ',';
    joined += id;
  }
  std::string path = impl_->path_prefix + "/views?ids=" + joined;

  httplib::Headers headers;
  if (!impl_->token.empty())
    headers.emplace("Authorization", "Bearer " + impl_->token);

  FetchResult result;
  int64_t backoff_ms = 1000;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    if (attempt > 0) {
      impl_->clock.sleep_ms(backoff_ms);
      backoff_ms *= 2;
    }
    auto res = impl_->client.Get(path, headers);
    if (!res || res->status >= 500) continue;  // transient; retry
    if (res->status != 200) {
      result.ok = false;
      result.error_code = res->status;
      return result;
    }
    try {
      json body = json::parse(res->body);
      for (const auto& e : body.value("entries", json::array()))
        result.entries.emplace_back(e.at(0).get<std::string>(), e.at(1).get<int64_t>());
      for (const auto& m : body.value("missing", json::array()))
        result.missing_ids.push_back(m.get<std::string>());
      return result;
    } catch (const json::exception&) {
      result.ok = false;
      result.error_code = -1;
      return result;
    }
  }
  result.ok = false;
  result.error_code = 0;  // unreachable after retries
  return result;
}

std::string page_jsonl_line(const PageRecord& page) {
  json entries = json::array();
  for (const auto& [id, views] : page.entries) entries.push_back(json::array({id, views}));
  json status;
  switch (page.status) {
    case PageStatus::Ok:
      status = "ok";
      break;
    case PageStatus::Missing:
      status = json{{"missing", page.missing_ids}};
      break;
    case PageStatus::Error:
      status = json{{"error", page.error_code}};
      break;
  }
  json j{{"round", page.round_index},
         {"page", page.page_index},
         {"query_time", page.query_time_ms},
         {"entries", std::move(entries)},
         {"status", std::move(status)}};
  return j.dump();
}

void JsonlPageSink::write(const PageRecord& page) {
  out_ << page_jsonl_line(page) << '\n';
  out_.flush();
}

std::vector<PageRecord> parse_pages_jsonl(std::istream& in) {
  std::vector<PageRecord> pages;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::Parse,
           "pages line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    PageRecord page;
    page.round_index = j.value("round", 0);
    page.page_index = j.value("page", 0);
    page.query_time_ms = j.value("query_time", int64_t{0});
    for (const auto& e : j.value("entries", json::array())) {
      if (!e.is_array() || e.size() != 2)
        fail(ErrorCode::Parse, "pages line " + std::to_string(line_no) + ": bad entry");
      page.entries.emplace_back(e[0].get<std::string>(), e[1].get<int64_t>());
    }
    const json& status = j.value("status", json("ok"));
    if (status.is_string() && status.get<std::string>() == "ok") {
      page.status = PageStatus::Ok;
    } else if (status.is_object() && status.contains("missing")) {
      page.status = PageStatus::Missing;
      for (const auto& m : status.at("missing")) page.missing_ids.push_back(m.get<std::string>());
    } else if (status.is_object() && status.contains("error")) {
      page.status = PageStatus::Error;
      page.error_code = status.at("error").get<int>();
    } else {
      fail(ErrorCode::Parse, "pages line " + std::to_string(line_no) + ": bad status");
    }
    pages.push_back(std::move(page));
  }
  return pages;
}

PagesToSeriesResult pages_to_series(const std::vector<PageRecord>& pages,
                                    const std::map<std::string, int64_t>& created_at_ms) {
  std::map<std::string, std::vector<timeline::ObservationPoint>> grouped;
  for (const auto& page : pages)
    for (const auto& [id, views] : page.entries)
      grouped[id].push_back({page.query_time_ms, views});

  PagesToSeriesResult result;
  for (auto& [id, observations] : grouped) {
    auto created = created_at_ms.find(id);
    if (created == created_at_ms.end()) {
      result.issues.push_back(id + ": no creation time provided");
      continue;
    }
    std::sort(observations.begin(), observations.end(),
              [](const timeline::ObservationPoint& l, const timeline::ObservationPoint& r) {
                return l.collected_at_ms < r.collected_at_ms;
              });
    timeline::PostSeries series{id, created->second, std::move(observations)};
    if (auto reason = timeline::validate(series)) {
      result.issues.push_back(id + ": " + *reason);
      continue;
    }
    result.series.push_back(std::move(series));
  }
  return result;
}

PlanFile parse_plan_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("plan: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::Parse, "plan: top level must be an object");

  PlanFile file;
  if (!j.contains("post_ids") || !j.at("post_ids").is_array())
    fail(ErrorCode::Parse, "plan: missing post_ids array");
  for (const auto& id : j.at("post_ids")) file.plan.post_ids.push_back(id.get<std::string>());
  file.plan.rounds = j.value("rounds", 1);
  file.plan.page_size = j.value("page_size", 500);
  file.plan.initial_offset_seconds = j.value("initial_offset_seconds", 10.0);
  if (j.contains("reference_time_ms"))
    file.plan.reference_time_ms = j.at("reference_time_ms").get<int64_t>();
  if (j.contains("inter_round_interval_seconds")) {
    file.plan.inter_round.immediate = false;
    file.plan.inter_round.fixed_interval_seconds =
        j.at("inter_round_interval_seconds").get<double>();
  }

  if (j.contains("mock")) {
    const json& mock = j.at("mock");
    file.mock_latency_ms = mock.value("latency_ms", int64_t{1});
    for (const auto& p : mock.value("posts", json::array())) {
      MockPost post;
      post.post_id = p.at("post_id").get<std::string>();
      post.created_at_ms = p.value("created_at", int64_t{0});
      post.trajectory.kind = models::kind_from_name(p.value("kind", std::string("log")));
      post.trajectory.params.a = p.value("a", 1.0);
      post.trajectory.params.b = p.value("b", 1.0);
      post.trajectory.params.c = p.value("c", 1.0);
      post.trajectory.total_views = p.value("total_views", int64_t{0});
      post.trajectory.horizon_seconds = p.value("horizon_seconds", 86400.0);
      file.mock_posts.push_back(std::move(post));
    }
    for (const auto& f : mock.value("faults", json::array())) {
      MockFault fault;
      fault.round_index = f.value("round", -1);
      fault.error_code = f.value("error_code", 0);
      for (const auto& id : f.value("missing", json::array()))
        fault.missing_ids.push_back(id.get<std::string>());
      file.mock_faults.push_back(std::move(fault));
    }
  }
  return file;
}

std::string report_json(const CollectionReport& report) {
  json j{{"rounds_completed", report.rounds_completed},
         {"pages_written", report.pages_written},
         {"error_pages", report.error_pages},
         {"aborted", report.aborted},
         {"abort_reason", report.abort_reason},
         {"missing_post_ids", report.missing_post_ids},
         {"round_span_ms", report.round_span_ms}};
  return j.dump();
}

}  // namespace viewflow::collector
