#include "mtlcvr/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace mtlcvr {

void AssignmentConfig::validate() const {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("assignment: alpha must lie in (0,1)");
  if (decay_lambda <= 0.0 || decay_lambda > 1.0)
    throw std::invalid_argument("assignment: decay_lambda must lie in (0,1]");
  if (window_days < 1)
    throw std::invalid_argument("assignment: window_days must be >= 1");
  if (hysteresis_low_factor > 1.0 || hysteresis_high_factor < 1.0)
    throw std::invalid_argument(
        "assignment: hysteresis band must contain alpha");
  if (dwell_days < 1)
    throw std::invalid_argument("assignment: dwell_days must be >= 1");
  if (online_alpha_factor <= 0.0 || online_alpha_factor >= 1.0)
    throw std::invalid_argument(
        "assignment: online_alpha_factor must lie in (0,1)");
}

void SetupStats::add(int day, std::int64_t clicks, std::int64_t conversions) {
  if (conversions > clicks)
    throw std::invalid_argument("setup stats: conversions exceed clicks");
  auto& d = days[day];
  d.clicks += clicks;
  d.conversions += conversions;
}

DecayedStats decayed_cvr(const SetupStats& stats, int as_of_day,
                         const AssignmentConfig& cfg) {
  DecayedStats out;
  for (const auto& [day, counts] : stats.days) {
    const int age = as_of_day - day;
    if (age < 0 || age >= cfg.window_days) continue;
    const double w = std::pow(cfg.decay_lambda, static_cast<double>(age));
    out.clicks += w * static_cast<double>(counts.clicks);
    out.conversions += w * static_cast<double>(counts.conversions);
  }
  if (out.clicks >= cfg.min_clicks && out.clicks > 0.0)
    out.cvr = out.conversions / out.clicks;
  return out;
}

Task classify(const std::optional<double>& cvr, Category category,
              const AssignmentConfig& cfg, AssignmentSource* source) {
  if (cvr.has_value()) {
    if (source) *source = AssignmentSource::kStats;
    return *cvr > cfg.alpha ? Task::kSoft : Task::kHard;
  }
  if (source) *source = AssignmentSource::kCategoryPrior;
  auto it = cfg.category_prior.find(category);
  // unknown category with insufficient stats: conservative hard default
  return it != cfg.category_prior.end() ? it->second : Task::kHard;
}

TaskAssignment stabilize(const TaskAssignment& prev, Task raw,
                         const std::optional<double>& cvr,
                         const AssignmentConfig& cfg) {
  TaskAssignment next = prev;
  next.raw_label = raw;
  next.decayed_cvr = cvr.value_or(0.0);
  next.sufficient = cvr.has_value();

  if (!cfg.stabilization_enabled) {
    next.label = raw;
    next.days_pending_flip = 0;
    return next;
  }
  if (raw == prev.label) {
    next.days_pending_flip = 0;
    return next;
  }
  const int pending = prev.days_pending_flip + 1;
  const bool outside_band =
      cvr.has_value() && (raw == Task::kSoft ? *cvr > cfg.alpha_high()
                                             : *cvr < cfg.alpha_low());
  if (pending >= cfg.dwell_days && outside_band) {
    next.label = raw;
    next.days_pending_flip = 0;
  } else {
    next.days_pending_flip = std::min(pending, cfg.dwell_days - 1);
  }
  return next;
}

TaskMap AssignmentSet::task_map() const {
  TaskMap map;
  for (const auto& a : assignments) map[a.setup_id] = a.label;
  return map;
}

const TaskAssignment* AssignmentSet::find(std::int64_t setup_id) const {
  auto it = std::lower_bound(
      assignments.begin(), assignments.end(), setup_id,
      [](const TaskAssignment& a, std::int64_t id) { return a.setup_id < id; });
  if (it == assignments.end() || it->setup_id != setup_id) return nullptr;
  return &*it;
}

AssignmentSet assign_all(std::span<const ClickEvent> events,
                         std::span<const ConversionSetup> setups, int as_of_day,
                         const AssignmentConfig& cfg,
                         const AssignmentSet* previous) {
  cfg.validate();
  std::unordered_map<std::int64_t, Category> categories;
  for (const auto& s : setups) categories[s.setup_id] = s.category;

  std::unordered_map<std::int64_t, SetupStats> stats;
  for (const auto& e : events) {
    auto& s = stats[e.setup_id];
    s.setup_id = e.setup_id;
    s.add(e.day, 1, e.converted ? 1 : 0);
  }

  AssignmentSet out;
  out.as_of_day = as_of_day;
  out.alpha = cfg.alpha;
  out.online_threshold = cfg.online_threshold();

  std::vector<std::int64_t> ids;
  ids.reserve(stats.size());
  for (const auto& [id, _] : stats) ids.push_back(id);
  std::sort(ids.begin(), ids.end());

  for (std::int64_t id : ids) {
    const DecayedStats ds = decayed_cvr(stats[id], as_of_day, cfg);
    auto cat_it = categories.find(id);
    const Category category =
        cat_it != categories.end() ? cat_it->second : Category::kPurchase;
    AssignmentSource source;
    const Task raw = classify(ds.cvr, category, cfg, &source);
    if (source == AssignmentSource::kCategoryPrior) ++out.prior_fallbacks;

    const TaskAssignment* prev =
        previous != nullptr ? previous->find(id) : nullptr;
    TaskAssignment assignment;
    if (prev != nullptr) {
      assignment = stabilize(*prev, raw, ds.cvr, cfg);
    } else {
      assignment.setup_id = id;
      assignment.label = raw;
      assignment.raw_label = raw;
      assignment.days_pending_flip = 0;
    }
    assignment.setup_id = id;
    assignment.source = source;
    assignment.decayed_cvr = ds.cvr.value_or(0.0);
    assignment.decayed_clicks = ds.clicks;
    assignment.sufficient = ds.cvr.has_value();
    out.assignments.push_back(assignment);
  }
  return out;
}

}  // namespace mtlcvr
