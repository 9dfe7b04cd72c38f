#include "core/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "core/error.hpp"

namespace viewflow::models {

using nlohmann::json;

const char* kind_name(ModelKind kind) {
  return kind == ModelKind::Sigmoid ? "sigmoid" : "log";
}

ModelKind kind_from_name(const std::string& name) {
  if (name == "sigmoid") return ModelKind::Sigmoid;
  if (name == "log") return ModelKind::Log;
  fail(ErrorCode::Parse, "unknown model kind: " + name);
}

namespace {

void check_params(const ModelParams& p) {
  if (!(p.a > 0.0) || !(p.b > 0.0) || !(p.c > 0.0))
    fail(ErrorCode::InvalidArgument, "model parameters must be strictly positive");
}

}  // namespace

double eval_sigmoid(const ModelParams& params, double x) {
  // Both terms reduce to 1/(1+b) at x = 0, so the difference is an exact 0.
  double decayed = params.b * std::exp(-params.a * x);
  return params.c * (1.0 / (1.0 + decayed) - 1.0 / (1.0 + params.b));
}

double eval_log(const ModelParams& params, double x) {
  return params.b * (std::log1p(params.a * x) / std::log1p(params.a));
}

double eval(ModelKind kind, const ModelParams& params, double x) {
  return kind == ModelKind::Sigmoid ? eval_sigmoid(params, x) : eval_log(params, x);
}

NormalizedCurve normalize(const timeline::AlignedSeries& series, double window_seconds) {
  if (!(window_seconds > 0.0))
    fail(ErrorCode::InvalidArgument, "window_seconds must be positive");
  NormalizedCurve curve;
  curve.window_seconds = window_seconds;
  std::size_t kept = 0;
  for (const auto& p : series.points) {
    if (p.age_seconds > window_seconds) break;
    ++kept;
  }
  if (kept < 2)
    fail(ErrorCode::Validation,
         "normalize: series " + series.post_id + " has fewer than 2 points in window");
  int64_t final = series.points[kept - 1].views;
  if (final < 1)
    fail(ErrorCode::Validation,
         "normalize: series " + series.post_id + " has zero views in window");
  curve.final_views = final;
  curve.points.reserve(kept);
  for (std::size_t i = 0; i < kept; ++i) {
    curve.points.push_back({series.points[i].age_seconds / window_seconds,
                            static_cast<double>(series.points[i].views) /
                                static_cast<double>(final)});
  }
  return curve;
}

namespace {

constexpr double kGridLo = 1e-2;
constexpr double kGridHi = 1e3;
constexpr int kGridPointsPerAxis = 20;
constexpr int kMaxRefineIterations = 200;
constexpr double kConvergenceTol = 1e-9;
constexpr int kRefineStarts = 3;

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out(n);
  double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    out[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / (n - 1));
  return out;
}

// Residuals at the observation points for parameters given in log space.
// Returns false when the evaluation is not finite.
bool residuals(ModelKind kind, const std::array<double, 3>& theta,
               const std::vector<CurvePoint>& pts, std::vector<double>& r,
               double& sse) {
  ModelParams p{std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
  if (!std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.c)) return false;
  sse = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double v = eval(kind, p, pts[i].x) - pts[i].y;
    if (!std::isfinite(v)) return false;
    r[i] = v;
    sse += v * v;
  }
  return std::isfinite(sse);
}

// Jacobian of the residuals w.r.t. (ln a, ln b, ln c); the log model uses
// only the first two columns.
void jacobian(ModelKind kind, const std::array<double, 3>& theta,
              const std::vector<CurvePoint>& pts, std::vector<std::array<double, 3>>& jac) {
  double a = std::exp(theta[0]), b = std::exp(theta[1]), c = std::exp(theta[2]);
  if (kind == ModelKind::Sigmoid) {
    double w = 1.0 / (1.0 + b);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double x = pts[i].x;
      double e = std::exp(-a * x);
      double u = 1.0 / (1.0 + b * e);
      double f = c * (u - w);
      jac[i][0] = c * a * x * b * e * u * u;
      jac[i][1] = c * b * (w * w - e * u * u);
      jac[i][2] = f;
    }
  } else {
    double denom = std::log1p(a);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double x = pts[i].x;
      double num = std::log1p(a * x);
      double f = b * num / denom;
      jac[i][0] = a * b * (x / ((a * x + 1.0) * denom) - num / (denom * denom * (a + 1.0)));
      jac[i][1] = f;
      jac[i][2] = 0.0;
    }
  }
}

// Solves the symmetric system (A + lambda I) d = -g for n in {2, 3}.
bool solve_damped(const std::array<std::array<double, 3>, 3>& A,
                  const std::array<double, 3>& g, double lambda, int n,
                  std::array<double, 3>& d) {
  double m[3][4] = {};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m[i][j] = A[i][j];
    m[i][i] += lambda;
    m[i][n] = -g[i];
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    if (std::abs(m[pivot][col]) < 1e-300) return false;
    if (pivot != col)
      for (int j = 0; j <= n; ++j) std::swap(m[pivot][j], m[col][j]);
    for (int row = 0; row < n; ++row) {
      if (row == col) continue;
      double factor = m[row][col] / m[col][col];
      for (int j = col; j <= n; ++j) m[row][j] -= factor * m[col][j];
    }
  }
  d = {0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i) d[i] = m[i][n] / m[i][i];
  return std::isfinite(d[0]) && std::isfinite(d[1]) && std::isfinite(d[2]);
}

struct RefineOutcome {
  std::array<double, 3> theta{};
  double sse = std::numeric_limits<double>::infinity();
  bool converged = false;
};

// Damped Gauss-Newton (Levenberg-Marquardt with Nielsen's schedule) on the
// sum of squared residuals at the observation points, in log-parameter
// space so positivity holds by construction.
RefineOutcome refine(ModelKind kind, std::array<double, 3> theta,
                     const std::vector<CurvePoint>& pts) {
  const int n_params = kind == ModelKind::Sigmoid ? 3 : 2;
  const std::size_t n = pts.size();
  std::vector<double> r(n), r_try(n);
  std::vector<std::array<double, 3>> jac(n);

  RefineOutcome out;
  double sse = 0.0;
  if (!residuals(kind, theta, pts, r, sse)) return out;
  out.theta = theta;
  out.sse = sse;

  double lambda = -1.0;  // initialized from the first normal matrix
  double nu = 2.0;
  for (int iter = 0; iter < kMaxRefineIterations; ++iter) {
    jacobian(kind, theta, pts, jac);
    std::array<std::array<double, 3>, 3> A{};
    std::array<double, 3> g{};
    for (std::size_t i = 0; i < n; ++i) {
      for (int p = 0; p < n_params; ++p) {
        g[p] += jac[i][p] * r[i];
        for (int q = p; q < n_params; ++q) A[p][q] += jac[i][p] * jac[i][q];
      }
    }
    for (int p = 0; p < n_params; ++p)
      for (int q = 0; q < p; ++q) A[p][q] = A[q][p];
    if (lambda < 0.0) {
      double max_diag = 0.0;
      for (int p = 0; p < n_params; ++p) max_diag = std::max(max_diag, A[p][p]);
      lambda = 1e-3 * std::max(max_diag, 1e-30);
    }

    std::array<double, 3> d{};
    if (!solve_damped(A, g, lambda, n_params, d) || !std::isfinite(lambda)) {
      lambda = std::isfinite(lambda) ? lambda * nu : 1e30;
      nu = std::min(nu * 2.0, 1e16);
      continue;
    }
    std::array<double, 3> theta_try = theta;
    for (int p = 0; p < n_params; ++p)
      theta_try[p] = std::clamp(theta_try[p] + d[p], -690.0, 690.0);
    double sse_try = 0.0;
    if (residuals(kind, theta_try, pts, r_try, sse_try) && sse_try < sse) {
      // Gain ratio against the local quadratic model.
      double predicted = 0.0;
      for (int p = 0; p < n_params; ++p) predicted += d[p] * (lambda * d[p] - g[p]);
      double rho = predicted > 0.0 ? (sse - sse_try) / predicted : 1.0;
      theta = theta_try;
      sse = sse_try;
      r.swap(r_try);
      double shrink = 1.0 - std::pow(2.0 * rho - 1.0, 3.0);
      lambda *= std::max(1.0 / 3.0, shrink);
      nu = 2.0;
      double max_step = 0.0;
      for (int p = 0; p < n_params; ++p) max_step = std::max(max_step, std::abs(d[p]));
      if (max_step < kConvergenceTol) {
        out.converged = true;
        out.theta = theta;
        out.sse = sse;
        return out;
      }
    } else {
      lambda *= nu;
      nu = std::min(nu * 2.0, 1e16);
    }
  }
  out.theta = theta;
  out.sse = sse;
  return out;
}

struct GridCandidate {
  double sse = std::numeric_limits<double>::infinity();
  std::array<double, 3> theta{};
};

// Stage 1: coarse log-spaced grid over (a, b) with the linear amplitude
// parameter (c for the sigmoid, b for the log model) solved conditionally
// by least squares at each grid point.
std::vector<GridCandidate> grid_search(ModelKind kind, const std::vector<CurvePoint>& pts) {
  const auto axis = log_spaced(kGridLo, kGridHi, kGridPointsPerAxis);
  std::vector<GridCandidate> cands;
  std::vector<double> base(pts.size());

  auto push = [&cands](double sse, std::array<double, 3> theta) {
    cands.push_back({sse, theta});
  };

  if (kind == ModelKind::Sigmoid) {
    std::vector<double> decay(pts.size());
    for (double a : axis) {
      for (std::size_t i = 0; i < pts.size(); ++i) decay[i] = std::exp(-a * pts[i].x);
      for (double b : axis) {
        double w = 1.0 / (1.0 + b);
        double ff = 0.0, fy = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          base[i] = 1.0 / (1.0 + b * decay[i]) - w;
          ff += base[i] * base[i];
          fy += base[i] * pts[i].y;
        }
        double c = ff > 0.0 && fy > 0.0 ? fy / ff : 1.0;
        double sse = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          double r = c * base[i] - pts[i].y;
          sse += r * r;
        }
        push(sse, {std::log(a), std::log(b), std::log(c)});
      }
    }
  } else {
    for (double a : axis) {
      double denom = std::log1p(a);
      double gg = 0.0, gy = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        base[i] = std::log1p(a * pts[i].x) / denom;
        gg += base[i] * base[i];
        gy += base[i] * pts[i].y;
      }
      double b = gg > 0.0 && gy > 0.0 ? gy / gg : 1.0;
      double sse = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        double r = b * base[i] - pts[i].y;
        sse += r * r;
      }
      push(sse, {std::log(a), std::log(b), 0.0});
    }
  }
  std::partial_sort(cands.begin(),
                    cands.begin() + std::min<std::size_t>(kRefineStarts, cands.size()),
                    cands.end(),
                    [](const GridCandidate& l, const GridCandidate& rcand) {
                      return l.sse < rcand.sse;
                    });
  cands.resize(std::min<std::size_t>(kRefineStarts, cands.size()));
  return cands;
}

double grid_mse(ModelKind kind, const ModelParams& params, const NormalizedCurve& curve,
                int& n_grid_points) {
  n_grid_points = 0;
  double sum = 0.0;
  std::size_t cursor = 0;
  double step_y = 0.0;
  for (int k = 0;; ++k) {
    double x = 10.0 * static_cast<double>(k) / curve.window_seconds;
    if (x > 1.0) break;
    while (cursor < curve.points.size() && curve.points[cursor].x <= x)
      step_y = curve.points[cursor++].y;
    double r = eval(kind, params, x) - step_y;
    sum += r * r;
    ++n_grid_points;
  }
  return sum / static_cast<double>(n_grid_points);
}

}  // namespace

ModelFit fit(const NormalizedCurve& curve, ModelKind kind) {
  if (curve.points.size() < 2)
    fail(ErrorCode::InvalidArgument, "fit: curve needs at least 2 points");
  if (!(curve.window_seconds >= 10.0))
    fail(ErrorCode::InvalidArgument,
         "fit: window_seconds must be >= 10 for the 10-second evaluation grid");

  auto starts = grid_search(kind, curve.points);
  RefineOutcome best;
  for (const auto& cand : starts) {
    RefineOutcome outcome = refine(kind, cand.theta, curve.points);
    if (outcome.sse < best.sse || (outcome.sse == best.sse && outcome.converged))
      best = outcome;
  }

  ModelFit result;
  result.kind = kind;
  result.params = {std::exp(best.theta[0]), std::exp(best.theta[1]),
                   kind == ModelKind::Sigmoid ? std::exp(best.theta[2]) : 1.0};
  check_params(result.params);
  result.converged = best.converged;
  result.mse = grid_mse(kind, result.params, curve, result.n_grid_points);
  return result;
}

ModelFit select(const NormalizedCurve& curve) {
  ModelFit sigmoid = fit(curve, ModelKind::Sigmoid);
  ModelFit log = fit(curve, ModelKind::Log);
  if (std::abs(sigmoid.mse - log.mse) < 1e-12) return log;  // tie resolves to Log
  return sigmoid.mse < log.mse ? sigmoid : log;
}

std::vector<PostFit> classify_corpus(const std::vector<timeline::AlignedSeries>& corpus,
                                     double window_seconds, int64_t min_views) {
  std::vector<PostFit> out;
  for (const auto& series : corpus) {
    std::size_t kept = 0;
    for (const auto& p : series.points) {
      if (p.age_seconds > window_seconds) break;
      ++kept;
    }
    if (kept < 2) continue;
    if (series.points[kept - 1].views <= min_views) continue;
    out.push_back({series.post_id, select(normalize(series, window_seconds))});
  }
  std::sort(out.begin(), out.end(),
            [](const PostFit& l, const PostFit& r) { return l.post_id < r.post_id; });
  return out;
}

std::string fits_json(const std::vector<PostFit>& fits) {
  json arr = json::array();
  for (const auto& pf : fits) {
    arr.push_back(json{{"post_id", pf.post_id},
                       {"kind", kind_name(pf.fit.kind)},
                       {"a", pf.fit.params.a},
                       {"b", pf.fit.params.b},
                       {"c", pf.fit.params.c},
                       {"mse", pf.fit.mse},
                       {"converged", pf.fit.converged}});
  }
  return arr.dump();
}

namespace {

std::string num(double v) { return json(v).dump(); }

}  // namespace

std::string fits_csv(const std::vector<PostFit>& fits) {
  std::string out = "post_id,kind,a,b,c,mse,converged\n";
  for (const auto& pf : fits) {
    out += pf.post_id;
    out += ',';
    out += kind_name(pf.fit.kind);
    out += ',';
    out += num(pf.fit.params.a);
    out += ',';
    out += num(pf.fit.params.b);
    out += ',';
    out += num(pf.fit.params.c);
    out += ',';
    out += num(pf.fit.mse);
    out += ',';
    out += pf.fit.converged ? "true" : "false";
    out += '\n';
  }
  return out;
}

}  // namespace viewflow::models
