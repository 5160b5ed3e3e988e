#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtlcvr/events.hpp"
#include "mtlcvr/model.hpp"
#include "mtlcvr/tasks.hpp"

namespace mtlcvr {

// Serving-time pCVR source. The simulator treats models as opaque scorers so
// arms can also be driven by the ground-truth oracle or a constant predictor.
class PcvrModel {
 public:
  virtual ~PcvrModel() = default;
  virtual double predict(const ClickEvent& event) const = 0;
  virtual std::string describe() const = 0;
};

class NetPcvrModel final : public PcvrModel {
 public:
  explicit NetPcvrModel(InferenceModel model) : model_(std::move(model)) {}
  double predict(const ClickEvent& e) const override { return model_.predict(e); }
  std::string describe() const override { return "checkpoint:" + model_.provenance; }
  const InferenceModel& model() const { return model_; }

 private:
  InferenceModel model_;
};

class OraclePcvrModel final : public PcvrModel {
 public:
  double predict(const ClickEvent& e) const override { return e.true_pcvr; }
  std::string describe() const override { return "oracle"; }
};

class ConstantPcvrModel final : public PcvrModel {
 public:
  explicit ConstantPcvrModel(double value) : value_(value) {}
  double predict(const ClickEvent&) const override { return value_; }
  std::string describe() const override {
    return "constant:" + std::to_string(value_);
  }

 private:
  double value_;
};

enum class RoutePath : std::uint8_t { kHardModel, kSoftModel };

// Threshold routing on the stabilized decayed CVR with the lowered online
// threshold; setups without sufficient statistics fall back to the category
// prior.
RoutePath route(const TaskAssignment* assignment, Category category,
                double online_threshold, const AssignmentConfig& cfg);

struct SimConfig {
  double online_threshold = 0.008;
  std::uint64_t seed = 1;
};

struct AdvertiserOutcome {
  std::int64_t advertiser_id = 0;
  // hard-routed segment, the population Table-4 style ratios are about
  double hard_spend_control = 0.0;
  double hard_spend_variant = 0.0;
  std::int64_t hard_conv_control = 0;
  std::int64_t hard_conv_variant = 0;
  // full account, used for budget checks and spend-based segmentation
  double total_spend_control = 0.0;
  double total_spend_variant = 0.0;
  std::int64_t total_conv_control = 0;
  std::int64_t total_conv_variant = 0;

  std::optional<double> cpa_control, cpa_variant;
  std::optional<double> cpa_ratio;         // variant / control
  std::optional<double> conversion_ratio;  // variant / control
};

struct WeightedRatio {
  std::int64_t advertiser_id = 0;
  double spend = 0.0;
  double ratio = 0.0;
};

// exp( sum_i s_i ln(m_i) / sum_j s_j ); throws on any m_i <= 0.
double spend_weighted_geomean(std::span<const WeightedRatio> items);

struct GroupAggregate {
  std::string name;
  double spend_share_target = 0.0;
  std::size_t n_advertisers = 0;
  std::optional<double> cpa_ratio;
  std::optional<double> conversion_ratio;
};

// Advertisers sorted by total spend descending; group k is the minimal
// prefix whose cumulative spend reaches the share target. Nested by
// construction.
std::vector<std::vector<std::int64_t>> segment_groups(
    std::span<const AdvertiserOutcome> outcomes,
    std::span<const double> share_targets);

struct AbAggregates {
  std::optional<double> median_cpa_ratio;
  std::optional<double> median_conversion_ratio;
  std::optional<double> geomean_cpa_ratio;
  std::optional<double> geomean_conversion_ratio;
  std::vector<GroupAggregate> groups;  // I, II, III
  std::optional<double> pooled_cpa_ratio;         // whole hard segment
  std::optional<double> pooled_conversion_ratio;  // whole hard segment
  std::size_t excluded_cpa = 0;         // undefined CPA ratio
  std::size_t excluded_conversion = 0;  // undefined conversion ratio
};

AbAggregates aggregate(std::span<const AdvertiserOutcome> outcomes);

struct AbReport {
  std::uint64_t seed = 0;
  double online_threshold = 0.0;
  std::string control_model, variant_model;
  std::size_t n_events = 0;
  std::size_t hard_routed_events = 0;
  std::size_t soft_routed_events = 0;
  std::size_t prior_routed_events = 0;
  std::vector<AdvertiserOutcome> advertisers;  // sorted by advertiser_id
  AbAggregates aggregates;
};

// Budget-split replay: both arms score the same click stream under common
// random numbers, each arm owning half of every advertiser's daily budget.
// The variant arm routes hard-classified traffic to `variant` and leaves
// soft traffic on `control`; the control arm serves everything with
// `control`. Cost per served click is the bid pCVR * target CPA.
AbReport run_ab(std::span<const ClickEvent> events,
                std::span<const ConversionSetup> setups,
                const AssignmentSet& assignments, const AssignmentConfig& acfg,
                const SimConfig& cfg, const PcvrModel& control,
                const PcvrModel& variant);

}  // namespace mtlcvr
