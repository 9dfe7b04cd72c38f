#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/timeline.hpp"

namespace viewflow::ratecurve {

/// How to treat the views already present at the first observation: spread
/// them uniformly over [0, t_first) or drop them from the profile.
enum class FirstInterval { Spread, Drop };

/// Per-post distribution of proportional view increases over integer
/// seconds of age. Sums to 1 under FirstInterval::Spread.
struct RateProfile {
  std::string post_id;
  std::map<int64_t, double> mass_per_second;
  bool zero_mass = false;  // final views were zero; excluded from aggregation
};

/// Corpus aggregate: per_second[s] is the summed proportion mass across
/// the contributing posts. Sums to n_posts when the truncation horizon
/// covers every observation.
struct RateCurve {
  std::vector<double> per_second;
  std::size_t n_posts = 0;
};

/// Requires >= 2 observations. A zero-view series yields an empty,
/// zero_mass-flagged profile rather than an error.
RateProfile profile(const timeline::AlignedSeries& series,
                    FirstInterval first_interval = FirstInterval::Spread);

/// Sums the profiles of all eligible posts (>= 2 observations, >= 1 view)
/// truncated to [0, max_seconds). Throws when no post is eligible.
RateCurve aggregate(const std::vector<timeline::AlignedSeries>& corpus,
                    int64_t max_seconds,
                    FirstInterval first_interval = FirstInterval::Spread);

/// Index of the maximum of the centered moving average of odd width
/// smoothing_window (edges use the clipped window); ties resolve to the
/// earliest second.
int64_t peak(const RateCurve& curve, int smoothing_window);

std::string curve_csv(const RateCurve& curve);

}  // namespace viewflow::ratecurve
