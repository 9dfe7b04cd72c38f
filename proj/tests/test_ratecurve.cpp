#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/ratecurve.hpp"
#include "core/synth.hpp"
#include "core/timeline.hpp"

using namespace viewflow;
using namespace viewflow::ratecurve;

namespace {

timeline::AlignedSeries series_of(std::string id,
                                  std::vector<std::pair<double, int64_t>> pts) {
  timeline::AlignedSeries s;
  s.post_id = std::move(id);
  for (auto [age, views] : pts) s.points.push_back({age, views});
  return s;
}

double mass_sum(const RateProfile& p) {
  double sum = 0.0;
  for (const auto& [s, m] : p.mass_per_second) sum += m;
  return sum;
}

}  // namespace

TEST_CASE("profile spreads a full increase uniformly") {
  auto prof = profile(series_of("p", {{10.0, 0}, {20.0, 10}}));
  CHECK_FALSE(prof.zero_mass);
  REQUIRE(prof.mass_per_second.size() == 10);
  for (int64_t s = 10; s < 20; ++s) {
    REQUIRE(prof.mass_per_second.count(s) == 1);
    CHECK(prof.mass_per_second.at(s) == doctest::Approx(0.1).epsilon(1e-12));
  }
  CHECK(mass_sum(prof) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("profile spreads initial views over the unobserved interval") {
  auto prof = profile(series_of("p", {{10.0, 5}, {20.0, 10}}));
  for (int64_t s = 0; s < 10; ++s)
    CHECK(prof.mass_per_second.at(s) == doctest::Approx(0.05).epsilon(1e-12));
  for (int64_t s = 10; s < 20; ++s)
    CHECK(prof.mass_per_second.at(s) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(mass_sum(prof) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("profile flags zero-view series as zero mass") {
  auto prof = profile(series_of("p", {{10.0, 0}, {20.0, 0}}));
  CHECK(prof.zero_mass);
  CHECK(prof.mass_per_second.empty());
}

TEST_CASE("profile under the drop policy omits the first interval") {
  auto prof = profile(series_of("p", {{10.0, 5}, {20.0, 10}}), FirstInterval::Drop);
  CHECK(prof.mass_per_second.count(0) == 0);
  CHECK(mass_sum(prof) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("profile buckets fractional ages by rounding down") {
  auto prof = profile(series_of("p", {{10.4, 0}, {20.2, 10}}));
  REQUIRE(prof.mass_per_second.size() == 10);
  CHECK(prof.mass_per_second.begin()->first == 10);
  CHECK(prof.mass_per_second.rbegin()->first == 19);
  CHECK(mass_sum(prof) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("profile keeps mass inside a sub-second interval") {
  auto prof = profile(series_of("p", {{10.2, 0}, {10.9, 10}}));
  REQUIRE(prof.mass_per_second.size() == 1);
  CHECK(prof.mass_per_second.at(10) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("profile requires at least two observations") {
  CHECK_THROWS_AS(profile(series_of("p", {{10.0, 5}})), Error);
}

TEST_CASE("profile mass is conserved for random series") {
  std::mt19937_64 rng(55);
  for (int rep = 0; rep < 50; ++rep) {
    timeline::AlignedSeries s;
    s.post_id = "r";
    double age = 0.0;
    int64_t views = 0;
    int n = 2 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      age += 0.25 + static_cast<double>(rng() % 4000) / 100.0;
      views += static_cast<int64_t>(rng() % 40);
      s.points.push_back({age, views});
    }
    if (s.points.back().views == 0) s.points.back().views = 1;
    auto prof = profile(s);
    CHECK(mass_sum(prof) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("profile is exactly invariant under view scaling") {
  auto base = series_of("p", {{7.5, 3}, {19.0, 11}, {33.3, 20}});
  auto prof = profile(base);
  for (int64_t k : {2, 7, 1000}) {
    auto scaled = base;
    for (auto& pt : scaled.points) pt.views *= k;
    auto prof_k = profile(scaled);
    REQUIRE(prof_k.mass_per_second.size() == prof.mass_per_second.size());
    auto it = prof.mass_per_second.begin();
    for (const auto& [s, m] : prof_k.mass_per_second) {
      CHECK(s == it->first);
      CHECK(m == it->second);  // bit-exact
      ++it;
    }
  }
}

TEST_CASE("aggregate adds profiles and counts contributors") {
  std::vector<timeline::AlignedSeries> corpus = {
      series_of("a", {{10.0, 0}, {20.0, 10}}),
      series_of("b", {{10.0, 0}, {20.0, 10}}),
  };
  auto curve = aggregate(corpus, 30);
  CHECK(curve.n_posts == 2);
  for (int64_t s = 10; s < 20; ++s)
    CHECK(curve.per_second[static_cast<std::size_t>(s)] == doctest::Approx(0.2));
  double sum = 0.0;
  for (double v : curve.per_second) sum += v;
  CHECK(sum == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("aggregate rejects a corpus with no eligible posts") {
  std::vector<timeline::AlignedSeries> corpus = {
      series_of("z", {{10.0, 0}, {20.0, 0}}),
      series_of("single", {{10.0, 5}}),
  };
  CHECK_THROWS_AS(aggregate(corpus, 30), Error);
}

TEST_CASE("aggregate is permutation invariant and additive over partitions") {
  std::mt19937_64 rng(66);
  std::vector<timeline::AlignedSeries> corpus;
  for (int i = 0; i < 12; ++i) {
    timeline::AlignedSeries s;
    s.post_id = "p" + std::to_string(i);
    double age = 0.0;
    int64_t views = 0;
    for (int k = 0; k < 6; ++k) {
      age += 1.0 + static_cast<double>(rng() % 200) / 10.0;
      views += 1 + static_cast<int64_t>(rng() % 20);
      s.points.push_back({age, views});
    }
    corpus.push_back(std::move(s));
  }
  auto whole = aggregate(corpus, 200);

  auto shuffled = corpus;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto permuted = aggregate(shuffled, 200);
  for (std::size_t s = 0; s < whole.per_second.size(); ++s)
    CHECK(whole.per_second[s] == doctest::Approx(permuted.per_second[s]).epsilon(1e-12));

  std::vector<timeline::AlignedSeries> left(corpus.begin(), corpus.begin() + 5);
  std::vector<timeline::AlignedSeries> right(corpus.begin() + 5, corpus.end());
  auto l = aggregate(left, 200);
  auto r = aggregate(right, 200);
  CHECK(l.n_posts + r.n_posts == whole.n_posts);
  for (std::size_t s = 0; s < whole.per_second.size(); ++s)
    CHECK(whole.per_second[s] ==
          doctest::Approx(l.per_second[s] + r.per_second[s]).epsilon(1e-9));
}

TEST_CASE("aggregate truncates to the requested horizon") {
  std::vector<timeline::AlignedSeries> corpus = {series_of("a", {{10.0, 0}, {20.0, 10}})};
  auto curve = aggregate(corpus, 15);
  CHECK(curve.per_second.size() == 15);
  double sum = 0.0;
  for (double v : curve.per_second) sum += v;
  CHECK(sum == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("peak finds the raw argmax") {
  RateCurve curve;
  curve.per_second = {0.0, 5.0, 3.0, 1.0};
  curve.n_posts = 1;
  CHECK(peak(curve, 1) == 1);
}

TEST_CASE("peak ties resolve to the earliest second") {
  RateCurve curve;
  curve.per_second = {2.0, 2.0, 2.0, 2.0};
  curve.n_posts = 1;
  CHECK(peak(curve, 1) == 0);
}

TEST_CASE("peak smoothing prefers sustained mass") {
  RateCurve curve;
  curve.per_second = {0.0, 10.0, 0.0, 8.0, 9.0, 8.0, 0.0};
  curve.n_posts = 1;
  CHECK(peak(curve, 1) == 1);
  CHECK(peak(curve, 3) == 4);
}

TEST_CASE("peak is invariant under uniform scaling") {
  std::mt19937_64 rng(77);
  RateCurve curve;
  for (int i = 0; i < 300; ++i)
    curve.per_second.push_back(static_cast<double>(rng() % 1000) / 7.0);
  curve.n_posts = 1;
  for (int w : {1, 5, 21}) {
    auto base = peak(curve, w);
    RateCurve scaled = curve;
    for (double& v : scaled.per_second) v *= 123.456;
    CHECK(peak(scaled, w) == base);
  }
}

TEST_CASE("peak validates its inputs") {
  RateCurve curve;
  CHECK_THROWS_AS(peak(curve, 1), Error);
  curve.per_second = {1.0};
  CHECK_THROWS_AS(peak(curve, 2), Error);
  CHECK_THROWS_AS(peak(curve, 0), Error);
}

TEST_CASE("a corpus with impression density peaking at 72 s recovers the peak") {
  // Sigmoid trajectories whose per-second increments are maximal around
  // 72.5 s: mode of the rate is ln(b)/a * window.
  std::vector<synth::GeneratorSpec> specs;
  std::vector<double> ages;
  for (int t = 1; t <= 600; ++t) ages.push_back(static_cast<double>(t));
  for (int i = 0; i < 5; ++i) {
    synth::GeneratorSpec spec;
    spec.kind = models::ModelKind::Sigmoid;
    double window = 600.0;
    double a = 18.0 + i;
    spec.params = {a, std::exp(a * 72.5 / window), 1.0};
    spec.total_views = 1000000;
    spec.horizon_seconds = window;
    spec.observation_ages = ages;
    spec.post_id = "peak-" + std::to_string(i);
    specs.push_back(spec);
  }
  auto corpus = timeline::align_corpus(synth::generate_corpus(specs));
  auto curve = aggregate(corpus, 600);
  auto p = peak(curve, 1);
  CHECK(p >= 70);
  CHECK(p <= 74);
}
