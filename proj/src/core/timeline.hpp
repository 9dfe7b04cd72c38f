#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace viewflow::timeline {

/// One (collection-time, cumulative-view-count) sample for a post.
/// Timestamps are milliseconds since epoch; ages derived from them are
/// real seconds.
struct ObservationPoint {
  int64_t collected_at_ms = 0;
  int64_t views = 0;
};

struct PostSeries {
  std::string post_id;
  int64_t created_at_ms = 0;
  std::vector<ObservationPoint> observations;
};

struct AlignedPoint {
  double age_seconds = 0.0;
  int64_t views = 0;
};

/// A post's observations re-expressed as age since creation.
struct AlignedSeries {
  std::string post_id;
  std::vector<AlignedPoint> points;
};

struct RejectedRecord {
  std::size_t line_number = 0;  // 1-based input line
  std::string post_id;          // empty when the id could not be parsed
  std::string reason;
};

struct IngestResult {
  std::vector<PostSeries> series;
  std::vector<RejectedRecord> rejected;
};

struct CorpusSummary {
  std::size_t n_posts = 0;
  std::size_t n_zero_view = 0;
  double mean_views = 0.0;
  double median_views = 0.0;
  // Histogram of log10(final_views + 1), bucket width 0.1; pairs of
  // (bucket index, count) for the non-empty buckets, ascending.
  std::vector<std::pair<int, std::size_t>> view_histogram_log10;
};

/// Views at the last observation; 0 for a series with no observations.
int64_t final_views(const PostSeries& series);

/// Returns a violation description, or nullopt when the series satisfies
/// all invariants (strictly increasing collection times after creation,
/// non-decreasing non-negative views).
std::optional<std::string> validate(const PostSeries& series);

/// Reads JSONL series records. Invalid records are rejected with a
/// per-record diagnostic; valid records are never repaired.
IngestResult ingest(std::istream& in);
IngestResult ingest_string(std::string_view text);

/// Serializes a corpus back to the JSONL series format (one record per
/// line, trailing newline). ingest(emit(corpus)) is the identity.
std::string emit(const std::vector<PostSeries>& corpus);
std::string emit_record(const PostSeries& series);

AlignedSeries align(const PostSeries& series);
std::vector<AlignedSeries> align_corpus(const std::vector<PostSeries>& corpus);

/// Keeps exactly the series observed in at least required_rounds rounds.
std::vector<PostSeries> filter_complete(const std::vector<PostSeries>& corpus,
                                        int required_rounds);

/// Summary statistics over final views. Throws for an empty corpus.
CorpusSummary summarize(const std::vector<PostSeries>& corpus);

std::string summary_json(const CorpusSummary& summary);

}  // namespace viewflow::timeline
