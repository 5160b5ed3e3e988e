#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mtlcvr/events.hpp"
#include "mtlcvr/model.hpp"

namespace mtlcvr {

enum class AssignmentSource : std::uint8_t { kStats, kCategoryPrior };

inline const char* to_string(Task t) {
  return t == Task::kHard ? "hard" : "soft";
}
inline const char* to_string(AssignmentSource s) {
  return s == AssignmentSource::kStats ? "stats" : "category_prior";
}

struct AssignmentConfig {
  double alpha = 0.01;          // offline CVR threshold
  double decay_lambda = 0.9;    // per-day multiplier
  int window_days = 28;
  double min_clicks = 200.0;    // against decayed clicks
  double hysteresis_low_factor = 0.8;
  double hysteresis_high_factor = 1.25;
  int dwell_days = 3;
  double online_alpha_factor = 0.8;
  bool stabilization_enabled = true;
  // fallback when statistics are insufficient
  std::map<Category, Task> category_prior = {
      {Category::kPurchase, Task::kHard}, {Category::kSignup, Task::kHard},
      {Category::kLead, Task::kHard},     {Category::kPageView, Task::kSoft},
      {Category::kVideoView, Task::kSoft}};

  double alpha_low() const { return alpha * hysteresis_low_factor; }
  double alpha_high() const { return alpha * hysteresis_high_factor; }
  double online_threshold() const { return alpha * online_alpha_factor; }

  void validate() const;
};

struct DayCount {
  std::int64_t clicks = 0;
  std::int64_t conversions = 0;
};

// Per-setup daily click/conversion counts keyed by absolute day.
struct SetupStats {
  std::int64_t setup_id = 0;
  std::map<int, DayCount> days;

  void add(int day, std::int64_t clicks, std::int64_t conversions);
};

struct DecayedStats {
  double clicks = 0.0;
  double conversions = 0.0;
  std::optional<double> cvr;  // nullopt when decayed clicks < min_clicks
};

// Time-decayed conversion/click ratio over the sliding window ending at
// as_of_day; day of age a gets weight lambda^a.
DecayedStats decayed_cvr(const SetupStats& stats, int as_of_day,
                         const AssignmentConfig& cfg);

// Raw label: soft iff cvr > alpha; insufficient stats fall back to the
// category prior (unknown categories default to hard).
Task classify(const std::optional<double>& cvr, Category category,
              const AssignmentConfig& cfg, AssignmentSource* source = nullptr);

struct TaskAssignment {
  std::int64_t setup_id = 0;
  Task label = Task::kHard;
  Task raw_label = Task::kHard;
  int days_pending_flip = 0;
  AssignmentSource source = AssignmentSource::kStats;
  double decayed_cvr = 0.0;  // 0 when insufficient
  double decayed_clicks = 0.0;
  bool sufficient = false;
};

// One stabilization step: the label flips only when the decayed CVR sits
// outside the hysteresis band in the new label's direction AND the raw label
// has disagreed for dwell_days consecutive evaluations.
TaskAssignment stabilize(const TaskAssignment& prev, Task raw,
                         const std::optional<double>& cvr,
                         const AssignmentConfig& cfg);

struct AssignmentSet {
  int as_of_day = 0;
  double alpha = 0.0;
  double online_threshold = 0.0;
  std::vector<TaskAssignment> assignments;  // sorted by setup_id
  std::size_t prior_fallbacks = 0;

  TaskMap task_map() const;
  const TaskAssignment* find(std::int64_t setup_id) const;
};

// Full offline assignment pass: aggregates the log into per-setup stats,
// classifies, and stabilizes against the previous assignments (if any).
AssignmentSet assign_all(std::span<const ClickEvent> events,
                         std::span<const ConversionSetup> setups, int as_of_day,
                         const AssignmentConfig& cfg,
                         const AssignmentSet* previous = nullptr);

}  // namespace mtlcvr
