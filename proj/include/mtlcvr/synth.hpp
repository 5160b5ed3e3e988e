#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mtlcvr/events.hpp"

namespace mtlcvr {

FeatureSchema default_feature_schema(std::size_t embedding_dim = 8);

struct GeneratorConfig {
  int n_advertisers = 100;
  int setups_per_advertiser = 2;
  int n_days = 30;
  int clicks_per_day = 20000;
  FeatureSchema schema = default_feature_schema();
  double soft_cvr_low = 0.05;
  double soft_cvr_high = 0.40;
  double hard_cvr_low = 0.0005;
  double hard_cvr_high = 0.008;
  double shared_effect_scale = 1.0;
  double task_specific_effect_scale = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

// Per-value logit effects. `shared` applies to every setup; `task` has one
// set per setup flavor (hard/soft). The shared component is what makes the
// soft task carry transferable signal for the hard one. The logit_adjust
// intercepts absorb the mean and Jensen lift of the effect sums so each
// setup's realized mean CVR tracks its base_cvr.
struct FeatureEffects {
  std::vector<std::vector<double>> shared;      // [feature][value]
  std::vector<std::vector<double>> task_hard;   // [feature][value]
  std::vector<std::vector<double>> task_soft;   // [feature][value]
  double logit_adjust_hard = 0.0;
  double logit_adjust_soft = 0.0;
};

struct SynthOutput {
  std::vector<ConversionSetup> setups;
  std::vector<ClickEvent> events;  // canonical (day, seq) order
  FeatureEffects effects;
};

// Deterministic marketplace log: per-day derived seeds allow day-sharded
// generation without changing the output.
SynthOutput generate(const GeneratorConfig& cfg);

// Serial single-stream reference for the generator; used by tests and the
// benchmark to pin down the day-sharded path.
SynthOutput generate_serial(const GeneratorConfig& cfg);

// Time-ordered split: the first floor(n_days * train_fraction) days train,
// strictly later days evaluate.
std::pair<std::vector<ClickEvent>, std::vector<ClickEvent>> split_by_time(
    std::span<const ClickEvent> events, double train_fraction);

// True setup flavor used by the generator (even setup index = hard).
bool is_hard_setup_index(int setup_index_within_advertiser);

}  // namespace mtlcvr
