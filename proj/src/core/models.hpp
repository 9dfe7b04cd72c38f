#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/timeline.hpp"

namespace viewflow::models {

enum class ModelKind { Sigmoid, Log };

const char* kind_name(ModelKind kind);  // "sigmoid" | "log"
ModelKind kind_from_name(const std::string& name);

/// a: rate/shape, b: steepness offset (sigmoid) or end-of-window level
/// (log), c: amplitude scale. All strictly positive; c defaults to 1 and
/// is only fitted for the sigmoid.
struct ModelParams {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
};

struct ModelFit {
  ModelKind kind = ModelKind::Log;
  ModelParams params;
  double mse = 0.0;  // mean squared error on the 10-second grid
  int n_grid_points = 0;
  bool converged = true;
};

struct CurvePoint {
  double x = 0.0;  // age / window, in [0, 1]
  double y = 0.0;  // views / final views
};

struct NormalizedCurve {
  std::vector<CurvePoint> points;
  double window_seconds = 0.0;
  int64_t final_views = 0;
};

/// c * (1 / (1 + b * exp(-a * x)) - 1 / (1 + b)).
/// Exactly 0 at x = 0; asymptote c * b / (1 + b).
double eval_sigmoid(const ModelParams& params, double x);

/// b * log(a * x + 1) / log(a + 1).
/// Exactly 0 at x = 0 and exactly b at x = 1.
double eval_log(const ModelParams& params, double x);

double eval(ModelKind kind, const ModelParams& params, double x);

/// Clips the series to ages <= window_seconds and rescales: x = age /
/// window, y = views / final in-window views. Requires >= 2 in-window
/// points and a positive final count.
NormalizedCurve normalize(const timeline::AlignedSeries& series, double window_seconds);

/// Least-squares fit of one model family to the curve's points: coarse
/// log-spaced grid over (a, b) with the amplitude solved conditionally,
/// then damped Gauss-Newton refinement in log-parameter space. The
/// reported mse is evaluated on the 10-second age grid against the
/// step function of the cumulative counts.
ModelFit fit(const NormalizedCurve& curve, ModelKind kind);

/// Fits both families and returns the lower grid-mse fit; a tie within
/// 1e-12 resolves to Log.
ModelFit select(const NormalizedCurve& curve);

struct PostFit {
  std::string post_id;
  ModelFit fit;
};

/// normalize + select for every series whose in-window final views
/// exceed min_views (and that has >= 2 in-window points); results are
/// sorted by post_id.
std::vector<PostFit> classify_corpus(const std::vector<timeline::AlignedSeries>& corpus,
                                     double window_seconds, int64_t min_views);

std::string fits_json(const std::vector<PostFit>& fits);
std::string fits_csv(const std::vector<PostFit>& fits);

}  // namespace viewflow::models
