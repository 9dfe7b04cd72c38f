#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/synth.hpp"
#include "core/timeline.hpp"

namespace viewflow::collector {

/// Time source for the scheduler. The simulated clock lets latency-heavy
/// plans (99+ rounds) run hermetically in tests.
class Clock {
public:
  virtual ~Clock() = default;
  virtual int64_t now_ms() = 0;
  virtual void sleep_ms(int64_t ms) = 0;
};

class SystemClock : public Clock {
public:
  int64_t now_ms() override;
  void sleep_ms(int64_t ms) override;
};

class SimulatedClock : public Clock {
public:
  explicit SimulatedClock(int64_t start_ms) : now_(start_ms) {}
  int64_t now_ms() override { return now_; }
  void sleep_ms(int64_t ms) override {
    if (ms > 0) now_ += ms;
  }
  void jump_to(int64_t t_ms) { now_ = t_ms; }  // test hook; may move backwards

private:
  int64_t now_;
};

enum class PageStatus { Ok, Missing, Error };

struct PageRecord {
  int round_index = 0;
  int page_index = 0;
  int64_t query_time_ms = 0;  // captured immediately before the request
  std::vector<std::pair<std::string, int64_t>> entries;
  PageStatus status = PageStatus::Ok;
  std::vector<std::string> missing_ids;
  int error_code = 0;
};

struct FetchResult {
  bool ok = true;
  int error_code = 0;
  std::vector<std::pair<std::string, int64_t>> entries;
  std::vector<std::string> missing_ids;
};

/// Paginated metrics source: one request for up to page_size ids.
class MetricsSource {
public:
  virtual ~MetricsSource() = default;
  virtual void begin_round(int round_index) { (void)round_index; }
  virtual FetchResult fetch(const std::vector<std::string>& ids) = 0;
};

class PageSink {
public:
  virtual ~PageSink() = default;
  virtual void write(const PageRecord& page) = 0;
};

class JsonlPageSink : public PageSink {
public:
  explicit JsonlPageSink(std::ostream& out) : out_(out) {}
  void write(const PageRecord& page) override;

private:
  std::ostream& out_;
};

class VectorPageSink : public PageSink {
public:
  void write(const PageRecord& page) override { pages.push_back(page); }
  std::vector<PageRecord> pages;
};

struct InterRoundPolicy {
  bool immediate = true;
  double fixed_interval_seconds = 0.0;
};

struct CollectionPlan {
  std::vector<std::string> post_ids;
  int rounds = 1;
  int page_size = 500;  // hard upper limit 500 per call
  double initial_offset_seconds = 10.0;
  InterRoundPolicy inter_round;
  // Collection starts at reference_time_ms + initial_offset; defaults to
  // the clock reading when the plan starts.
  std::optional<int64_t> reference_time_ms;
};

struct CollectionReport {
  int rounds_completed = 0;
  int pages_written = 0;
  int error_pages = 0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<std::string> missing_post_ids;  // missing in >= 1 round, sorted unique
  std::vector<int64_t> round_span_ms;         // wall-clock span per completed round
};

/// Executes the plan: rounds run sequentially, pages within a round are
/// requested one at a time in post_id order, and every page is persisted
/// with its query time before the next request is issued.
CollectionReport run_plan(const CollectionPlan& plan, MetricsSource& source, PageSink& sink,
                          Clock& clock);

/// Scripted source: per-post view trajectories evaluated at the query
/// time, plus injectable missing ids, error codes, and latency.
struct MockPost {
  std::string post_id;
  int64_t created_at_ms = 0;
  synth::GeneratorSpec trajectory;  // kind, params, total_views, horizon used
};

struct MockFault {
  int round_index = -1;                  // round the fault applies to
  std::vector<std::string> missing_ids;  // hidden from responses that round
  int error_code = 0;                    // when nonzero, fetches fail that round
};

class MockMetricsSource : public MetricsSource {
public:
  MockMetricsSource(std::vector<MockPost> posts, std::vector<MockFault> faults,
                    int64_t latency_ms, Clock& clock);
  void begin_round(int round_index) override { round_ = round_index; }
  FetchResult fetch(const std::vector<std::string>& ids) override;

private:
  std::map<std::string, MockPost> posts_;
  std::vector<MockFault> faults_;
  int64_t latency_ms_;
  Clock& clock_;
  int round_ = 0;
};

/// HTTP adapter: GET {base_url}/views?ids=a,b,c expecting
/// {"entries":[[id,views],...],"missing":[...]}. Bearer token from
/// VIEWFLOW_API_TOKEN; 3 retries with exponential backoff from 1 s on
/// connection failures and 5xx responses.
class HttpMetricsSource : public MetricsSource {
public:
  HttpMetricsSource(std::string base_url, Clock& clock);
  ~HttpMetricsSource() override;
  FetchResult fetch(const std::vector<std::string>& ids) override;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string page_jsonl_line(const PageRecord& page);
std::vector<PageRecord> parse_pages_jsonl(std::istream& in);

struct PagesToSeriesResult {
  std::vector<timeline::PostSeries> series;  // sorted by post_id
  std::vector<std::string> issues;           // posts dropped, with reasons
};

/// Groups page entries into per-post series (collected_at = the page's
/// query time). Posts violating series invariants or lacking a creation
/// time are reported, never silently dropped.
PagesToSeriesResult pages_to_series(const std::vector<PageRecord>& pages,
                                    const std::map<std::string, int64_t>& created_at_ms);

struct PlanFile {
  CollectionPlan plan;
  std::vector<MockPost> mock_posts;
  std::vector<MockFault> mock_faults;
  int64_t mock_latency_ms = 1;
};

PlanFile parse_plan_json(std::string_view text);
std::string report_json(const CollectionReport& report);

}  // namespace viewflow::collector
