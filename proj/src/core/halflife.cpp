#include "core/halflife.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "core/error.hpp"

namespace viewflow::halflife {

using nlohmann::json;

int64_t reference_views(const timeline::AlignedSeries& series, double horizon_seconds) {
  for (const auto& p : series.points)
    if (p.age_seconds >= horizon_seconds) return p.views;
  fail(ErrorCode::Validation,
       "reference_views: series " + series.post_id + " has no observation at the horizon");
}

HalfLifeResult half_life(const timeline::AlignedSeries& series, double horizon_seconds,
                         Crossing crossing) {
  HalfLifeResult result;
  result.post_id = series.post_id;
  result.reference_views = reference_views(series, horizon_seconds);
  if (result.reference_views < 1)
    fail(ErrorCode::Validation,
         "half_life: series " + series.post_id + " has zero reference views");

  const double threshold = static_cast<double>(result.reference_views) / 2.0;

  // Crossing search over the observations inside the horizon, with a
  // virtual (age 0, 0 views) origin ahead of the first observation.
  double prev_age = 0.0;
  double prev_views = 0.0;
  for (const auto& p : series.points) {
    if (p.age_seconds > horizon_seconds) break;
    double views = static_cast<double>(p.views);
    if (views >= threshold) {
      if (crossing == Crossing::FirstObservation) {
        result.half_life_seconds = p.age_seconds;
      } else {
        result.half_life_seconds =
            prev_age + (threshold - prev_views) / (views - prev_views) *
                           (p.age_seconds - prev_age);
      }
      return result;
    }
    prev_age = p.age_seconds;
    prev_views = views;
  }
  result.censored = true;
  return result;
}

CorpusHalfLife half_life_corpus(const std::vector<timeline::AlignedSeries>& corpus,
                                double horizon_seconds, Crossing crossing) {
  CorpusHalfLife out;
  for (const auto& series : corpus) {
    int64_t ref = 0;
    try {
      ref = reference_views(series, horizon_seconds);
    } catch (const Error&) {
      ++out.n_no_horizon;
      continue;
    }
    if (ref < 1) {
      ++out.n_zero_reference;
      continue;
    }
    out.results.push_back(half_life(series, horizon_seconds, crossing));
  }
  std::sort(out.results.begin(), out.results.end(),
            [](const HalfLifeResult& l, const HalfLifeResult& r) {
              return l.post_id < r.post_id;
            });
  return out;
}

namespace {

// Quantile by linear interpolation between order statistics (sorted input).
double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted.front();
  double h = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

HalfLifeStats distribution(const std::vector<HalfLifeResult>& results) {
  HalfLifeStats stats;
  std::vector<double> minutes;
  for (const auto& r : results) {
    if (r.censored) {
      ++stats.n_censored;
    } else {
      minutes.push_back(r.half_life_seconds / 60.0);
    }
  }
  if (minutes.empty()) fail(ErrorCode::Empty, "distribution: no uncensored results");
  std::sort(minutes.begin(), minutes.end());

  stats.n = minutes.size();
  double sum = 0.0;
  for (double m : minutes) sum += m;
  stats.mean_minutes = sum / static_cast<double>(minutes.size());
  for (double p : {0.10, 0.25, 0.50, 0.75, 0.90})
    stats.quantiles[p] = quantile_sorted(minutes, p);
  stats.median_minutes = stats.quantiles[0.50];
  return stats;
}

namespace {

// Views at the first observation with age >= t, or nullopt.
std::optional<int64_t> views_at(const timeline::AlignedSeries& series, double t) {
  for (const auto& p : series.points)
    if (p.age_seconds >= t) return p.views;
  return std::nullopt;
}

}  // namespace

GrowthBuckets growth_buckets(const std::vector<timeline::AlignedSeries>& corpus,
                             double t_early, double t_late) {
  if (!(t_early < t_late))
    fail(ErrorCode::InvalidArgument, "growth_buckets: t_early must be before t_late");
  GrowthBuckets out;
  std::array<std::size_t, 4> counts{};
  for (const auto& series : corpus) {
    auto early = views_at(series, t_early);
    auto late = views_at(series, t_late);
    if (!early || !late) {
      ++out.n_no_data;
      continue;
    }
    if (*early < 1) {
      ++out.n_zero_early;
      continue;
    }
    // Bucket edges compared in exact integer arithmetic so that e.g. a
    // 10.0% increase lands in the <=10% bucket.
    std::size_t bucket;
    if (*late == *early) bucket = 0;
    else if (10 * *late <= 11 * *early) bucket = 1;
    else if (2 * *late <= 3 * *early) bucket = 2;
    else bucket = 3;
    ++counts[bucket];
    ++out.n_included;
  }
  if (out.n_included == 0) fail(ErrorCode::Empty, "growth_buckets: no eligible posts");
  for (std::size_t i = 0; i < counts.size(); ++i)
    out.shares[i] = static_cast<double>(counts[i]) / static_cast<double>(out.n_included);
  return out;
}

double growth_factor_median(const std::vector<timeline::AlignedSeries>& corpus,
                            double t_early, double t_late) {
  if (!(t_early < t_late))
    fail(ErrorCode::InvalidArgument, "growth_factor_median: t_early must be before t_late");
  std::vector<double> factors;
  for (const auto& series : corpus) {
    auto early = views_at(series, t_early);
    auto late = views_at(series, t_late);
    if (!early || !late || *early < 1) continue;
    factors.push_back(static_cast<double>(*late) / static_cast<double>(*early));
  }
  if (factors.empty()) fail(ErrorCode::Empty, "growth_factor_median: no eligible posts");
  std::sort(factors.begin(), factors.end());
  return quantile_sorted(factors, 0.50);
}

std::string stats_json(const HalfLifeStats& stats, const CorpusHalfLife& corpus_results,
                       Crossing crossing) {
  json q;
  for (const auto& [p, v] : stats.quantiles) {
    char key[8];
    std::snprintf(key, sizeof(key), "%.2f", p);
    q[key] = v;
  }
  json j{{"n_uncensored", stats.n},
         {"n_censored", stats.n_censored},
         {"n_zero_reference", corpus_results.n_zero_reference},
         {"n_no_horizon", corpus_results.n_no_horizon},
         {"mean_minutes", stats.mean_minutes},
         {"median_minutes", stats.median_minutes},
         {"quantiles_minutes", std::move(q)},
         {"crossing",
          crossing == Crossing::Interpolate ? "interpolate" : "first-observation"}};
  return j.dump();
}

std::string results_csv(const std::vector<HalfLifeResult>& results) {
  std::string out = "post_id,half_life_seconds,censored,reference_views\n";
  for (const auto& r : results) {
    out += r.post_id;
    out += ',';
    if (!r.censored) out += json(r.half_life_seconds).dump();
    out += ',';
    out += r.censored ? "true" : "false";
    out += ',';
    out += std::to_string(r.reference_views);
    out += '\n';
  }
  return out;
}

std::string histogram_csv(const std::vector<HalfLifeResult>& results) {
  std::map<int64_t, std::size_t> bins;
  for (const auto& r : results) {
    if (r.censored) continue;
    bins[static_cast<int64_t>(std::floor(r.half_life_seconds / 60.0))]++;
  }
  std::string out = "minute,count\n";
  for (const auto& [minute, count] : bins) {
    out += std::to_string(minute);
    out += ',';
    out += std::to_string(count);
    out += '\n';
  }
  return out;
}

std::string growth_json(const GrowthBuckets& buckets, double median_factor) {
  json j{{"buckets",
          {{"zero", buckets.shares[0]},
           {"up_to_10_percent", buckets.shares[1]},
           {"10_to_50_percent", buckets.shares[2]},
           {"over_50_percent", buckets.shares[3]}}},
         {"n_included", buckets.n_included},
         {"n_zero_early", buckets.n_zero_early},
         {"n_no_data", buckets.n_no_data},
         {"median_growth_factor", median_factor}};
  return j.dump();
}

}  // namespace viewflow::halflife
