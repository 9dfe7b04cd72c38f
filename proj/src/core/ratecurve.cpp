#include "core/ratecurve.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "core/error.hpp"

namespace viewflow::ratecurve {

namespace {

// Spreads delta uniformly over the integer-second buckets covered by
// [t_begin, t_end). Bucket boundaries round down; an interval inside a
// single second puts all of delta into that second.
void spread(std::map<int64_t, double>& mass, double t_begin, double t_end, double delta) {
  if (delta <= 0.0) return;
  auto s_begin = static_cast<int64_t>(std::floor(t_begin));
  auto s_end = static_cast<int64_t>(std::floor(t_end));
  int64_t n = std::max<int64_t>(1, s_end - s_begin);
  double share = delta / static_cast<double>(n);
  for (int64_t s = s_begin; s < s_begin + n; ++s) mass[s] += share;
}

}  // namespace

RateProfile profile(const timeline::AlignedSeries& series, FirstInterval first_interval) {
  if (series.points.size() < 2)
    fail(ErrorCode::Validation,
         "profile: series " + series.post_id + " has fewer than 2 observations");
  RateProfile prof;
  prof.post_id = series.post_id;

  int64_t final = series.points.back().views;
  if (final < 1) {
    prof.zero_mass = true;
    return prof;
  }
  double total = static_cast<double>(final);

  const auto& first = series.points.front();
  if (first_interval == FirstInterval::Spread && first.views > 0)
    spread(prof.mass_per_second, 0.0, first.age_seconds,
           static_cast<double>(first.views) / total);

  for (std::size_t i = 1; i < series.points.size(); ++i) {
    const auto& prev = series.points[i - 1];
    const auto& cur = series.points[i];
    int64_t delta_views = cur.views - prev.views;
    if (delta_views <= 0) continue;
    spread(prof.mass_per_second, prev.age_seconds, cur.age_seconds,
           static_cast<double>(delta_views) / total);
  }
  return prof;
}

RateCurve aggregate(const std::vector<timeline::AlignedSeries>& corpus, int64_t max_seconds,
                    FirstInterval first_interval) {
  if (max_seconds < 1) fail(ErrorCode::InvalidArgument, "max_seconds must be >= 1");
  RateCurve curve;
  curve.per_second.assign(static_cast<std::size_t>(max_seconds), 0.0);
  for (const auto& series : corpus) {
    if (series.points.size() < 2) continue;
    RateProfile prof = profile(series, first_interval);
    if (prof.zero_mass) continue;
    for (const auto& [second, mass] : prof.mass_per_second) {
      if (second >= 0 && second < max_seconds)
        curve.per_second[static_cast<std::size_t>(second)] += mass;
    }
    ++curve.n_posts;
  }
  if (curve.n_posts == 0) fail(ErrorCode::Empty, "aggregate: no eligible posts");
  return curve;
}

int64_t peak(const RateCurve& curve, int smoothing_window) {
  if (curve.per_second.empty()) fail(ErrorCode::Empty, "peak: empty curve");
  if (smoothing_window < 1 || smoothing_window % 2 == 0)
    fail(ErrorCode::InvalidArgument, "smoothing_window must be odd and >= 1");
  const auto n = static_cast<int64_t>(curve.per_second.size());
  const int64_t half = smoothing_window / 2;
  int64_t best = 0;
  double best_value = -1.0;
  for (int64_t i = 0; i < n; ++i) {
    int64_t lo = std::max<int64_t>(0, i - half);
    int64_t hi = std::min<int64_t>(n - 1, i + half);
    double sum = 0.0;
    for (int64_t j = lo; j <= hi; ++j) sum += curve.per_second[static_cast<std::size_t>(j)];
    double avg = sum / static_cast<double>(hi - lo + 1);
    if (avg > best_value) {
      best_value = avg;
      best = i;
    }
  }
  return best;
}

std::string curve_csv(const RateCurve& curve) {
  std::string out = "second,mass\n";
  for (std::size_t s = 0; s < curve.per_second.size(); ++s) {
    out += std::to_string(s);
    out += ',';
    out += nlohmann::json(curve.per_second[s]).dump();
    out += '\n';
  }
  return out;
}

}  // namespace viewflow::ratecurve
