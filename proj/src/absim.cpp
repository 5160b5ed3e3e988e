#include "mtlcvr/absim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "mtlcvr/rng.hpp"

namespace mtlcvr {

RoutePath route(const TaskAssignment* assignment, Category category,
                double online_threshold, const AssignmentConfig& cfg) {
  if (assignment != nullptr && assignment->sufficient)
    return assignment->decayed_cvr > online_threshold ? RoutePath::kSoftModel
                                                      : RoutePath::kHardModel;
  auto it = cfg.category_prior.find(category);
  const Task prior = it != cfg.category_prior.end() ? it->second : Task::kHard;
  return prior == Task::kHard ? RoutePath::kHardModel : RoutePath::kSoftModel;
}

double spend_weighted_geomean(std::span<const WeightedRatio> items) {
  double spend_total = 0.0;
  double acc = 0.0;
  for (const auto& it : items) {
    if (it.ratio <= 0.0)
      throw std::domain_error(
          "spend-weighted geomean: non-positive ratio for advertiser " +
          std::to_string(it.advertiser_id));
    spend_total += it.spend;
    acc += it.spend * std::log(it.ratio);
  }
  if (spend_total <= 0.0)
    throw std::domain_error("spend-weighted geomean: total spend is zero");
  return std::exp(acc / spend_total);
}

namespace {

double total_spend(const AdvertiserOutcome& o) {
  return o.total_spend_control + o.total_spend_variant;
}

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::optional<double> pooled_ratio(double spend_v, std::int64_t conv_v,
                                   double spend_c, std::int64_t conv_c) {
  if (conv_v <= 0 || conv_c <= 0) return std::nullopt;
  const double cpa_v = spend_v / static_cast<double>(conv_v);
  const double cpa_c = spend_c / static_cast<double>(conv_c);
  if (cpa_c == 0.0) return std::nullopt;
  return cpa_v / cpa_c;
}

}  // namespace

std::vector<std::vector<std::int64_t>> segment_groups(
    std::span<const AdvertiserOutcome> outcomes,
    std::span<const double> share_targets) {
  std::vector<const AdvertiserOutcome*> sorted;
  sorted.reserve(outcomes.size());
  double platform_spend = 0.0;
  for (const auto& o : outcomes) {
    sorted.push_back(&o);
    platform_spend += total_spend(o);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const AdvertiserOutcome* a, const AdvertiserOutcome* b) {
              if (total_spend(*a) != total_spend(*b))
                return total_spend(*a) > total_spend(*b);
              return a->advertiser_id < b->advertiser_id;
            });

  std::vector<std::vector<std::int64_t>> groups;
  for (double target : share_targets) {
    std::vector<std::int64_t> members;
    double acc = 0.0;
    for (const auto* o : sorted) {
      if (platform_spend > 0.0 && acc >= target * platform_spend) break;
      members.push_back(o->advertiser_id);
      acc += total_spend(*o);
    }
    if (members.empty() && !sorted.empty())
      members.push_back(sorted.front()->advertiser_id);
    groups.push_back(std::move(members));
  }
  return groups;
}

AbAggregates aggregate(std::span<const AdvertiserOutcome> outcomes) {
  AbAggregates agg;
  std::vector<double> cpa_ratios, conv_ratios;
  std::vector<WeightedRatio> geo_cpa, geo_conv;
  for (const auto& o : outcomes) {
    if (o.cpa_ratio.has_value()) {
      cpa_ratios.push_back(*o.cpa_ratio);
      if (*o.cpa_ratio > 0.0)
        geo_cpa.push_back({o.advertiser_id, o.hard_spend_control, *o.cpa_ratio});
    } else {
      ++agg.excluded_cpa;
    }
    if (o.conversion_ratio.has_value()) {
      conv_ratios.push_back(*o.conversion_ratio);
      if (*o.conversion_ratio > 0.0)
        geo_conv.push_back(
            {o.advertiser_id, o.hard_spend_control, *o.conversion_ratio});
    } else {
      ++agg.excluded_conversion;
    }
  }
  if (cpa_ratios.empty() && conv_ratios.empty())
    throw std::domain_error(
        "ab aggregate: no advertiser has defined ratios (control conversions "
        "all zero?)");

  agg.median_cpa_ratio = median(cpa_ratios);
  agg.median_conversion_ratio = median(conv_ratios);
  if (!geo_cpa.empty()) agg.geomean_cpa_ratio = spend_weighted_geomean(geo_cpa);
  if (!geo_conv.empty())
    agg.geomean_conversion_ratio = spend_weighted_geomean(geo_conv);

  const double shares[3] = {0.30, 0.50, 0.70};
  const char* names[3] = {"group_1", "group_2", "group_3"};
  const auto groups = segment_groups(outcomes, shares);
  std::unordered_map<std::int64_t, const AdvertiserOutcome*> by_id;
  for (const auto& o : outcomes) by_id[o.advertiser_id] = &o;
  for (int g = 0; g < 3; ++g) {
    GroupAggregate ga;
    ga.name = names[g];
    ga.spend_share_target = shares[g];
    ga.n_advertisers = groups[g].size();
    double sv = 0.0, sc = 0.0;
    std::int64_t cv = 0, cc = 0;
    for (std::int64_t id : groups[g]) {
      const auto* o = by_id.at(id);
      sv += o->hard_spend_variant;
      sc += o->hard_spend_control;
      cv += o->hard_conv_variant;
      cc += o->hard_conv_control;
    }
    ga.cpa_ratio = pooled_ratio(sv, cv, sc, cc);
    if (cc > 0)
      ga.conversion_ratio = static_cast<double>(cv) / static_cast<double>(cc);
    agg.groups.push_back(std::move(ga));
  }

  double sv = 0.0, sc = 0.0;
  std::int64_t cv = 0, cc = 0;
  for (const auto& o : outcomes) {
    sv += o.hard_spend_variant;
    sc += o.hard_spend_control;
    cv += o.hard_conv_variant;
    cc += o.hard_conv_control;
  }
  agg.pooled_cpa_ratio = pooled_ratio(sv, cv, sc, cc);
  if (cc > 0)
    agg.pooled_conversion_ratio =
        static_cast<double>(cv) / static_cast<double>(cc);
  return agg;
}

AbReport run_ab(std::span<const ClickEvent> events,
                std::span<const ConversionSetup> setups,
                const AssignmentSet& assignments, const AssignmentConfig& acfg,
                const SimConfig& cfg, const PcvrModel& control,
                const PcvrModel& variant) {
  std::unordered_map<std::int64_t, const ConversionSetup*> setup_by_id;
  std::unordered_map<std::int64_t, double> advertiser_budget;
  for (const auto& s : setups) {
    setup_by_id[s.setup_id] = &s;
    advertiser_budget[s.advertiser_id] += s.daily_budget;
  }

  // canonical (day, seq) replay order
  std::vector<std::uint32_t> order(events.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<std::uint32_t>(i);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              if (events[a].day != events[b].day)
                return events[a].day < events[b].day;
              return events[a].seq < events[b].seq;
            });

  struct ArmState {
    const PcvrModel* hard_model;
    const PcvrModel* soft_model;
    std::unordered_map<std::int64_t, double> remaining;  // per advertiser, today
  };
  ArmState arms[2];
  arms[0] = {&control, &control, {}};   // control arm: one model everywhere
  arms[1] = {&variant, &control, {}};   // variant arm: router in front

  std::map<std::int64_t, AdvertiserOutcome> outcomes;
  AbReport report;
  report.seed = cfg.seed;
  report.online_threshold = cfg.online_threshold;
  report.control_model = control.describe();
  report.variant_model = variant.describe();
  report.n_events = events.size();

  int current_day = INT32_MIN;
  for (std::uint32_t idx : order) {
    const ClickEvent& e = events[idx];
    if (e.day != current_day) {
      current_day = e.day;
      for (auto& arm : arms)
        for (const auto& [adv, budget] : advertiser_budget)
          arm.remaining[adv] = 0.5 * budget;
    }
    auto sit = setup_by_id.find(e.setup_id);
    if (sit == setup_by_id.end()) continue;  // unknown setup, nothing to bill
    const ConversionSetup& setup = *sit->second;

    const TaskAssignment* assignment = assignments.find(e.setup_id);
    if (assignment == nullptr || !assignment->sufficient)
      ++report.prior_routed_events;
    const RoutePath path =
        route(assignment, setup.category, cfg.online_threshold, acfg);
    const bool hard = path == RoutePath::kHardModel;
    (hard ? report.hard_routed_events : report.soft_routed_events)++;

    // common random numbers: one conversion draw shared by both arms
    const double u =
        Rng(Rng::derive(cfg.seed, "conversion", e.event_id)).uniform();
    const bool converts = u < e.true_pcvr;

    AdvertiserOutcome& out = outcomes[e.advertiser_id];
    out.advertiser_id = e.advertiser_id;

    for (int a = 0; a < 2; ++a) {
      const PcvrModel& model = hard ? *arms[a].hard_model : *arms[a].soft_model;
      const double p = model.predict(e);
      const double cost = p * setup.value_per_conversion;
      double& remaining = arms[a].remaining[e.advertiser_id];
      if (cost <= 0.0 || cost > remaining) continue;  // budget exhausted
      remaining -= cost;
      const bool is_variant = a == 1;
      if (is_variant) {
        out.total_spend_variant += cost;
        if (converts) ++out.total_conv_variant;
        if (hard) {
          out.hard_spend_variant += cost;
          if (converts) ++out.hard_conv_variant;
        }
      } else {
        out.total_spend_control += cost;
        if (converts) ++out.total_conv_control;
        if (hard) {
          out.hard_spend_control += cost;
          if (converts) ++out.hard_conv_control;
        }
      }
    }
  }

  for (auto& [id, o] : outcomes) {
    if (o.hard_conv_control > 0)
      o.cpa_control =
          o.hard_spend_control / static_cast<double>(o.hard_conv_control);
    if (o.hard_conv_variant > 0)
      o.cpa_variant =
          o.hard_spend_variant / static_cast<double>(o.hard_conv_variant);
    if (o.cpa_control.has_value() && o.cpa_variant.has_value() &&
        *o.cpa_control > 0.0)
      o.cpa_ratio = *o.cpa_variant / *o.cpa_control;
    if (o.hard_conv_control > 0)
      o.conversion_ratio = static_cast<double>(o.hard_conv_variant) /
                           static_cast<double>(o.hard_conv_control);
    report.advertisers.push_back(o);
  }
  report.aggregates = aggregate(report.advertisers);
  return report;
}

}  // namespace mtlcvr
