#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "core/error.hpp"
#include "core/models.hpp"
#include "core/synth.hpp"
#include "core/timeline.hpp"

using namespace viewflow;
using namespace viewflow::models;

namespace {

NormalizedCurve curve_from_model(ModelKind kind, const ModelParams& params, int n_points,
                                 double window_seconds) {
  NormalizedCurve curve;
  curve.window_seconds = window_seconds;
  curve.final_views = 1;
  for (int i = 1; i <= n_points; ++i) {
    double x = static_cast<double>(i) / n_points;
    curve.points.push_back({x, eval(kind, params, x)});
  }
  return curve;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

// Grid mse of one parameter set against the step function of the curve,
// written independently of the fit implementation.
double brute_grid_mse(ModelKind kind, const ModelParams& p, const NormalizedCurve& curve) {
  double sum = 0.0;
  int n = 0;
  for (int k = 0;; ++k) {
    double x = 10.0 * k / curve.window_seconds;
    if (x > 1.0) break;
    double step = 0.0;
    for (const auto& pt : curve.points) {
      if (pt.x <= x) step = pt.y;
      else break;
    }
    double r = eval(kind, p, x) - step;
    sum += r * r;
    ++n;
  }
  return sum / n;
}

}  // namespace

TEST_CASE("eval_sigmoid matches direct evaluation") {
  // 1/(1 + 3*exp(-2)) - 1/4, computed with an independent calculator.
  CHECK(eval_sigmoid({2.0, 3.0, 1.0}, 1.0) ==
        doctest::Approx(0.46123459422759394).epsilon(1e-12));
}

TEST_CASE("eval_sigmoid approaches the asymptote b/(1+b)") {
  CHECK(eval_sigmoid({1.0, 1.0, 1.0}, 1e6) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("eval_log matches direct evaluation") {
  // log(5.5)/log(10), computed with an independent calculator.
  CHECK(eval_log({9.0, 1.0, 1.0}, 0.5) ==
        doctest::Approx(0.7403626894942438).epsilon(1e-12));
}

TEST_CASE("both models are exactly zero at x = 0") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    ModelParams p{log_uniform(rng, 1e-2, 1e3), log_uniform(rng, 1e-2, 1e3),
                  log_uniform(rng, 1.0, 2.0)};
    CHECK(eval_sigmoid(p, 0.0) == 0.0);
    CHECK(eval_log(p, 0.0) == 0.0);
  }
}

TEST_CASE("eval_log equals b exactly at x = 1") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 500; ++i) {
    ModelParams p{log_uniform(rng, 1e-2, 1e3), log_uniform(rng, 1e-2, 1e3), 1.0};
    CHECK(eval_log(p, 1.0) == p.b);
  }
}

TEST_CASE("both models strictly increase on (0, 1]") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    // Sigmoid a capped at 20: beyond that the curve reaches its asymptote
    // within double precision and adjacent samples tie exactly.
    ModelParams ps{log_uniform(rng, 1e-2, 20.0), log_uniform(rng, 1e-2, 1e3),
                   log_uniform(rng, 1.0, 2.0)};
    ModelParams pl{log_uniform(rng, 1e-2, 1e3), log_uniform(rng, 1e-2, 1e3), 1.0};
    double prev_s = 0.0, prev_l = 0.0;
    for (int k = 1; k <= 257; ++k) {
      double x = static_cast<double>(k) / 257.0;
      double vs = eval_sigmoid(ps, x);
      double vl = eval_log(pl, x);
      CHECK(vs > prev_s);
      CHECK(vl > prev_l);
      prev_s = vs;
      prev_l = vl;
    }
  }
}

TEST_CASE("eval_sigmoid is bounded by its asymptote") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 200; ++i) {
    ModelParams p{log_uniform(rng, 1e-2, 1e3), log_uniform(rng, 1e-2, 1e3),
                  log_uniform(rng, 1.0, 2.0)};
    double bound = p.c * p.b / (1.0 + p.b);
    for (double x : {0.1, 0.5, 1.0, 10.0, 1e3, 1e9}) {
      CHECK(eval_sigmoid(p, x) <= bound);
    }
  }
}

TEST_CASE("normalize scales ages and views proportionally") {
  timeline::AlignedSeries s;
  s.post_id = "p";
  s.points = {{10.0, 5}, {20.0, 10}};
  auto curve = normalize(s, 20.0);
  REQUIRE(curve.points.size() == 2);
  CHECK(curve.points[0].x == doctest::Approx(0.5));
  CHECK(curve.points[0].y == doctest::Approx(0.5));
  CHECK(curve.points[1].x == doctest::Approx(1.0));
  CHECK(curve.points[1].y == doctest::Approx(1.0));
  CHECK(curve.final_views == 10);
}

TEST_CASE("normalize of a saturated series is constant 1") {
  timeline::AlignedSeries s;
  s.post_id = "p";
  s.points = {{5.0, 8}, {10.0, 8}, {15.0, 8}};
  auto curve = normalize(s, 20.0);
  for (const auto& pt : curve.points) CHECK(pt.y == doctest::Approx(1.0));
}

TEST_CASE("normalize rejects zero-view and short series") {
  timeline::AlignedSeries zero;
  zero.post_id = "z";
  zero.points = {{10.0, 0}, {20.0, 0}};
  CHECK_THROWS_AS(normalize(zero, 20.0), Error);

  timeline::AlignedSeries single;
  single.post_id = "s";
  single.points = {{10.0, 5}};
  CHECK_THROWS_AS(normalize(single, 20.0), Error);

  // Only the in-window prefix counts.
  timeline::AlignedSeries late;
  late.post_id = "l";
  late.points = {{10.0, 5}, {30.0, 9}};
  CHECK_THROWS_AS(normalize(late, 20.0), Error);
}

TEST_CASE("fit recovers log parameters from an exact curve") {
  auto curve = curve_from_model(ModelKind::Log, {5.0, 1.0, 1.0}, 100, 1000.0);
  auto f = fit(curve, ModelKind::Log);
  CHECK(f.converged);
  CHECK(f.params.a == doctest::Approx(5.0).epsilon(0.01));
  CHECK(f.params.b == doctest::Approx(1.0).epsilon(0.01));
  CHECK(f.mse < 1e-8);
}

TEST_CASE("fit recovers sigmoid parameters from an exact curve") {
  auto curve = curve_from_model(ModelKind::Sigmoid, {8.0, 50.0, 1.0}, 100, 1000.0);
  auto f = fit(curve, ModelKind::Sigmoid);
  CHECK(f.converged);
  CHECK(f.params.a == doctest::Approx(8.0).epsilon(0.01));
  CHECK(f.params.b == doctest::Approx(50.0).epsilon(0.01));
  CHECK(f.params.c == doctest::Approx(1.0).epsilon(0.01));
  CHECK(f.mse < 1e-8);
}

TEST_CASE("a zero prefix with a late jump is sigmoid-shaped") {
  NormalizedCurve curve;
  curve.window_seconds = 100.0;
  curve.final_views = 10;
  for (int i = 1; i <= 9; ++i)
    curve.points.push_back({static_cast<double>(i) / 10.0, 0.0});
  curve.points.push_back({1.0, 1.0});

  // Independent oracle: best achievable grid mse per family over a coarse
  // parameter sweep, no shared code with fit().
  double best_sig = 1e300, best_log = 1e300;
  for (double a = 0.01; a < 1.1e3; a *= 1.5) {
    for (double b = 0.01; b < 1.1e3; b *= 1.5) {
      best_log = std::min(best_log, brute_grid_mse(ModelKind::Log, {a, b, 1.0}, curve));
      for (double c = 1.0; c <= 2.05; c += 0.25) {
        best_sig = std::min(best_sig, brute_grid_mse(ModelKind::Sigmoid, {a, b, c}, curve));
      }
    }
  }
  CHECK(best_sig < best_log);

  auto sig = fit(curve, ModelKind::Sigmoid);
  auto log = fit(curve, ModelKind::Log);
  CHECK(sig.mse < log.mse);
  CHECK(select(curve).kind == ModelKind::Sigmoid);
}

TEST_CASE("fit is scale-consistent") {
  SUBCASE("sigmoid: c absorbs the scale, a and b unchanged") {
    for (double s : {2.5, 0.4}) {
      auto curve = curve_from_model(ModelKind::Sigmoid, {6.0, 20.0, 1.3}, 80, 800.0);
      auto base = fit(curve, ModelKind::Sigmoid);
      for (auto& pt : curve.points) pt.y *= s;
      auto scaled = fit(curve, ModelKind::Sigmoid);
      CHECK(scaled.params.a == doctest::Approx(base.params.a).epsilon(1e-3));
      CHECK(scaled.params.b == doctest::Approx(base.params.b).epsilon(1e-3));
      CHECK(scaled.params.c == doctest::Approx(base.params.c * s).epsilon(1e-3));
    }
  }
  SUBCASE("log: b absorbs the scale, a unchanged") {
    for (double s : {3.0, 0.25}) {
      auto curve = curve_from_model(ModelKind::Log, {12.0, 1.0, 1.0}, 80, 800.0);
      auto base = fit(curve, ModelKind::Log);
      for (auto& pt : curve.points) pt.y *= s;
      auto scaled = fit(curve, ModelKind::Log);
      CHECK(scaled.params.a == doctest::Approx(base.params.a).epsilon(1e-3));
      CHECK(scaled.params.b == doctest::Approx(base.params.b * s).epsilon(1e-3));
    }
  }
}

TEST_CASE("select is deterministic") {
  auto curve = curve_from_model(ModelKind::Log, {30.0, 1.0, 1.0}, 99, 1893.0);
  // Perturb into something neither family fits exactly.
  for (std::size_t i = 0; i < curve.points.size(); i += 3) curve.points[i].y *= 0.97;
  for (auto& pt : curve.points) pt.y = std::min(pt.y, 1.0);
  curve.points.back().y = 1.0;

  auto first = select(curve);
  auto second = select(curve);
  CHECK(first.kind == second.kind);
  CHECK(first.params.a == second.params.a);
  CHECK(first.params.b == second.params.b);
  CHECK(first.params.c == second.params.c);
  CHECK(first.mse == second.mse);
}

TEST_CASE("selected model never has higher grid mse than the rejected one") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 10; ++i) {
    ModelKind kind = i % 2 == 0 ? ModelKind::Sigmoid : ModelKind::Log;
    ModelParams p{log_uniform(rng, 2.0, 50.0), log_uniform(rng, 1.0, 100.0), 1.0};
    auto curve = curve_from_model(kind, p, 60, 600.0);
    for (auto& pt : curve.points) pt.y *= 1.0 + 0.02 * std::sin(37.0 * pt.x);
    auto chosen = select(curve);
    auto sig = fit(curve, ModelKind::Sigmoid);
    auto log = fit(curve, ModelKind::Log);
    CHECK(chosen.mse <= sig.mse);
    CHECK(chosen.mse <= log.mse);
  }
}

TEST_CASE("an exact tie resolves to the log model") {
  // Two points both families can fit exactly.
  NormalizedCurve curve;
  curve.window_seconds = 20.0;
  curve.final_views = 10;
  curve.points = {{0.5, eval_log({3.0, 1.0, 1.0}, 0.5)}, {1.0, 1.0}};
  auto chosen = select(curve);
  auto sig = fit(curve, ModelKind::Sigmoid);
  auto log = fit(curve, ModelKind::Log);
  REQUIRE(sig.mse < 1e-13);
  REQUIRE(log.mse < 1e-13);
  CHECK(chosen.kind == ModelKind::Log);
}

TEST_CASE("classify_corpus filters by in-window final views") {
  std::vector<timeline::AlignedSeries> corpus;
  timeline::AlignedSeries low;
  low.post_id = "low";
  low.points = {{10.0, 3}, {20.0, 5}};
  corpus.push_back(low);

  CHECK(classify_corpus(corpus, 20.0, 50).empty());
  auto all = classify_corpus(corpus, 20.0, 0);
  REQUIRE(all.size() == 1);
  CHECK(all[0].post_id == "low");
}

TEST_CASE("classify_corpus labels a noiseless mixed corpus") {
  std::vector<synth::GeneratorSpec> specs;
  std::mt19937_64 rng(31);
  std::vector<double> ages;
  for (int i = 1; i <= 99; ++i) ages.push_back(1893.0 * i / 99.0);
  for (int i = 0; i < 10; ++i) {
    synth::GeneratorSpec spec;
    spec.kind = ModelKind::Sigmoid;
    spec.params = {log_uniform(rng, 3.0, 30.0), log_uniform(rng, 3.0, 300.0), 1.0};
    spec.total_views = 500;
    spec.horizon_seconds = 1893.0;
    spec.observation_ages = ages;
    spec.post_id = "sig-" + std::to_string(i);
    specs.push_back(spec);

    spec.kind = ModelKind::Log;
    spec.params = {log_uniform(rng, 10.0, 500.0), 1.0, 1.0};
    spec.post_id = "log-" + std::to_string(i);
    specs.push_back(spec);
  }
  auto corpus = synth::generate_corpus(specs);
  auto aligned = timeline::align_corpus(corpus);
  auto fits = classify_corpus(aligned, 1893.0, 50);
  REQUIRE(fits.size() == 20);

  int correct = 0;
  for (const auto& pf : fits) {
    bool is_log = pf.post_id.rfind("log-", 0) == 0;
    if ((pf.fit.kind == ModelKind::Log) == is_log) ++correct;
  }
  CHECK(correct >= 18);

  for (std::size_t i = 1; i < fits.size(); ++i) CHECK(fits[i - 1].post_id < fits[i].post_id);
}

TEST_CASE("fit result reports the 10-second grid size") {
  auto curve = curve_from_model(ModelKind::Log, {5.0, 1.0, 1.0}, 99, 1893.0);
  auto f = fit(curve, ModelKind::Log);
  // Ages 0, 10, ..., 1890 fit inside the 1893 s window.
  CHECK(f.n_grid_points == 190);
}
