#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/timeline.hpp"

namespace viewflow::halflife {

/// How to locate the 50% crossing: linear interpolation between the
/// bracketing observations (default), or the age of the first observation
/// meeting the threshold.
enum class Crossing { Interpolate, FirstObservation };

struct HalfLifeResult {
  std::string post_id;
  double half_life_seconds = 0.0;  // meaningful only when !censored
  int64_t reference_views = 0;     // views at the first observation at/after the horizon
  bool censored = false;           // 50% not reached within the observed horizon
};

struct HalfLifeStats {
  std::size_t n = 0;  // uncensored results
  std::size_t n_censored = 0;
  double mean_minutes = 0.0;
  double median_minutes = 0.0;
  std::map<double, double> quantiles;  // probability -> minutes
};

/// Day-1 -> day-3 style growth shares for the relative increase r:
/// buckets {r = 0, 0 < r <= 0.10, 0.10 < r <= 0.50, r > 0.50}.
struct GrowthBuckets {
  std::array<double, 4> shares{};
  std::size_t n_included = 0;
  std::size_t n_zero_early = 0;  // excluded: zero views at the early age
  std::size_t n_no_data = 0;     // excluded: missing an observation at either age
};

/// Views at the first observation with age >= horizon_seconds. Throws
/// when no observation reaches the horizon.
int64_t reference_views(const timeline::AlignedSeries& series, double horizon_seconds);

/// Age at which cumulative views reach 50% of the horizon reference.
/// A post whose pre-horizon observations never reach the threshold is
/// censored. Throws when the reference is zero.
HalfLifeResult half_life(const timeline::AlignedSeries& series, double horizon_seconds,
                         Crossing crossing = Crossing::Interpolate);

struct CorpusHalfLife {
  std::vector<HalfLifeResult> results;  // sorted by post_id
  std::size_t n_zero_reference = 0;     // excluded posts (zero views at horizon)
  std::size_t n_no_horizon = 0;         // excluded posts (no observation at horizon)
};

CorpusHalfLife half_life_corpus(const std::vector<timeline::AlignedSeries>& corpus,
                                double horizon_seconds,
                                Crossing crossing = Crossing::Interpolate);

/// Statistics over the uncensored results; quantiles by linear
/// interpolation between order statistics. Throws when every result is
/// censored.
HalfLifeStats distribution(const std::vector<HalfLifeResult>& results);

GrowthBuckets growth_buckets(const std::vector<timeline::AlignedSeries>& corpus,
                             double t_early, double t_late);

/// Median of views(t_late) / views(t_early) over posts with a nonzero
/// early count. Throws when no post qualifies.
double growth_factor_median(const std::vector<timeline::AlignedSeries>& corpus,
                            double t_early, double t_late);

std::string stats_json(const HalfLifeStats& stats, const CorpusHalfLife& corpus_results,
                       Crossing crossing = Crossing::Interpolate);
std::string results_csv(const std::vector<HalfLifeResult>& results);
/// Histogram of uncensored half-lives in 1-minute bins: "minute,count".
std::string histogram_csv(const std::vector<HalfLifeResult>& results);
std::string growth_json(const GrowthBuckets& buckets, double median_factor);

}  // namespace viewflow::halflife
