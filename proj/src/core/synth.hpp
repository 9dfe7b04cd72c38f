#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "core/models.hpp"
#include "core/timeline.hpp"

namespace viewflow::synth {

enum class Noise { None, BinomialSampling };

/// Ground-truth description of one synthetic post. The cumulative
/// expected curve is E(t) = total_views * model(t / horizon) / model(1),
/// so a spec whose last observation age equals the horizon ends exactly
/// at total_views.
struct GeneratorSpec {
  models::ModelKind kind = models::ModelKind::Log;
  models::ModelParams params;
  int64_t total_views = 0;
  double horizon_seconds = 0.0;
  std::vector<double> observation_ages;
  Noise noise = Noise::None;
  uint64_t seed = 0;
  std::string post_id;       // synthesized from index and seed when empty
  int64_t created_at_ms = 0;
};

/// Expected cumulative views at the given age.
double expected_views(const GeneratorSpec& spec, double age_seconds);

timeline::PostSeries generate(const GeneratorSpec& spec);

/// Element-wise generate with per-spec streams derived from
/// (master_seed, spec seed, index).
std::vector<timeline::PostSeries> generate_corpus(const std::vector<GeneratorSpec>& specs,
                                                  uint64_t master_seed = 0);

/// Parses a JSON array of generator specs. observation_ages may be given
/// either as an array of ages or as {"start":..., "stop":..., "step":...}.
std::vector<GeneratorSpec> parse_specs_json(std::string_view text);

}  // namespace viewflow::synth
