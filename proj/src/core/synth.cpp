#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "core/error.hpp"

namespace viewflow::synth {

using nlohmann::json;

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t stream_seed(uint64_t spec_seed, uint64_t master_seed, uint64_t index) {
  uint64_t h = splitmix64(spec_seed ^ splitmix64(master_seed));
  return splitmix64(h ^ index);
}

double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa draw; uniform in [0, 1). Defined directly on the
  // generator output so results do not depend on the standard library's
  // distribution implementations.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Rational approximation for the inverse standard normal CDF (Acklam).
double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Binomial(n, p) sampler built only on the raw generator stream, so the
// sequence is identical on every platform. Exact geometric-skip sampling
// when n * min(p, 1-p) is small; clamped normal approximation otherwise
// (the clamp is >1000 sigma away in that regime).
int64_t sample_binomial(std::mt19937_64& rng, int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  bool flipped = p > 0.5;
  double q = flipped ? 1.0 - p : p;

  int64_t successes;
  if (static_cast<double>(n) * q <= 1e6) {
    successes = 0;
    double log_one_minus_q = std::log1p(-q);
    int64_t trial = 0;
    while (true) {
      double u = uniform01(rng);
      if (u <= 0.0) u = 0x1.0p-53;
      trial += static_cast<int64_t>(std::floor(std::log(u) / log_one_minus_q)) + 1;
      if (trial > n) break;
      ++successes;
    }
  } else {
    double mean = static_cast<double>(n) * q;
    double sigma = std::sqrt(mean * (1.0 - q));
    double u = uniform01(rng);
    if (u <= 0.0) u = 0x1.0p-53;
    double draw = mean + sigma * inverse_normal_cdf(u);
    successes = std::clamp<int64_t>(static_cast<int64_t>(std::llround(draw)), 0, n);
  }
  return flipped ? n - successes : successes;
}

void check_spec(const GeneratorSpec& spec) {
  if (spec.total_views < 1) fail(ErrorCode::InvalidArgument, "total_views must be >= 1");
  if (!(spec.horizon_seconds > 0.0))
    fail(ErrorCode::InvalidArgument, "horizon_seconds must be positive");
  if (!(spec.params.a > 0.0) || !(spec.params.b > 0.0) || !(spec.params.c > 0.0))
    fail(ErrorCode::InvalidArgument, "model parameters must be strictly positive");
  double prev = 0.0;
  for (double age : spec.observation_ages) {
    if (!(age > prev))
      fail(ErrorCode::InvalidArgument, "observation_ages must be strictly increasing and positive");
    if (age > spec.horizon_seconds)
      fail(ErrorCode::InvalidArgument, "observation_ages must not exceed horizon_seconds");
    prev = age;
  }
}

timeline::PostSeries generate_with_stream(const GeneratorSpec& spec, uint64_t stream) {
  check_spec(spec);
  timeline::PostSeries series;
  series.post_id = spec.post_id;
  series.created_at_ms = spec.created_at_ms;

  double model_end = models::eval(spec.kind, spec.params, 1.0);
  double total = static_cast<double>(spec.total_views);

  std::mt19937_64 rng(stream);
  int64_t current = 0;
  double prev_expected = 0.0;
  for (double age : spec.observation_ages) {
    double expected =
        total * models::eval(spec.kind, spec.params, age / spec.horizon_seconds) / model_end;
    int64_t views;
    if (spec.noise == Noise::None) {
      views = std::llround(expected);
    } else {
      double denom = total - prev_expected;
      double p = denom <= 0.0 ? 1.0 : std::clamp((expected - prev_expected) / denom, 0.0, 1.0);
      current += sample_binomial(rng, spec.total_views - current, p);
      views = current;
    }
    prev_expected = expected;
    series.observations.push_back(
        {spec.created_at_ms + static_cast<int64_t>(std::llround(age * 1000.0)), views});
  }
  return series;
}

}  // namespace

double expected_views(const GeneratorSpec& spec, double age_seconds) {
  double model_end = models::eval(spec.kind, spec.params, 1.0);
  double x = std::clamp(age_seconds / spec.horizon_seconds, 0.0, 1.0);
  return static_cast<double>(spec.total_views) * models::eval(spec.kind, spec.params, x) /
         model_end;
}

timeline::PostSeries generate(const GeneratorSpec& spec) {
  timeline::PostSeries series = generate_with_stream(spec, stream_seed(spec.seed, 0, 0));
  if (series.post_id.empty()) series.post_id = "synth-00000000-" + std::to_string(spec.seed);
  return series;
}

std::vector<timeline::PostSeries> generate_corpus(const std::vector<GeneratorSpec>& specs,
                                                  uint64_t master_seed) {
  std::vector<timeline::PostSeries> corpus;
  corpus.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    timeline::PostSeries series =
        generate_with_stream(specs[i], stream_seed(specs[i].seed, master_seed, i));
    if (series.post_id.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "synth-%08zu-", i);
      series.post_id = buf + std::to_string(specs[i].seed);
    }
    corpus.push_back(std::move(series));
  }
  return corpus;
}

std::vector<GeneratorSpec> parse_specs_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("generator spec: malformed JSON: ") + e.what());
  }
  if (!root.is_array()) fail(ErrorCode::Parse, "generator spec: top level must be an array");

  std::vector<GeneratorSpec> specs;
  for (const auto& j : root) {
    GeneratorSpec spec;
    if (!j.is_object()) fail(ErrorCode::Parse, "generator spec: entry must be an object");
    spec.kind = models::kind_from_name(j.value("kind", std::string("log")));
    spec.params.a = j.value("a", 1.0);
    spec.params.b = j.value("b", 1.0);
    spec.params.c = j.value("c", 1.0);
    spec.total_views = j.value("total_views", int64_t{0});
    spec.horizon_seconds = j.value("horizon_seconds", 0.0);
    std::string noise = j.value("noise", std::string("none"));
    if (noise == "none") spec.noise = Noise::None;
    else if (noise == "binomial") spec.noise = Noise::BinomialSampling;
    else fail(ErrorCode::Parse, "generator spec: unknown noise kind: " + noise);
    spec.seed = j.value("seed", uint64_t{0});
    spec.post_id = j.value("post_id", std::string());
    spec.created_at_ms = j.value("created_at", int64_t{0});

    if (!j.contains("observation_ages"))
      fail(ErrorCode::Parse, "generator spec: missing observation_ages");
    const json& ages = j.at("observation_ages");
    if (ages.is_array()) {
      for (const auto& a : ages) spec.observation_ages.push_back(a.get<double>());
    } else if (ages.is_object()) {
      double start = ages.value("start", 0.0);
      double stop = ages.value("stop", 0.0);
      double step = ages.value("step", 0.0);
      if (!(step > 0.0) || !(start > 0.0) || stop < start)
        fail(ErrorCode::Parse, "generator spec: invalid observation_ages range");
      auto count = static_cast<int64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
      for (int64_t k = 0; k < count; ++k)
        spec.observation_ages.push_back(
            std::min(start + static_cast<double>(k) * step, stop));
    } else {
      fail(ErrorCode::Parse, "generator spec: observation_ages must be array or range");
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace viewflow::synth
