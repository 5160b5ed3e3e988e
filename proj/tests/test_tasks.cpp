#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mtlcvr/rng.hpp"
#include "mtlcvr/synth.hpp"
#include "mtlcvr/tasks.hpp"
#include "oracles.hpp"

using namespace mtlcvr;

namespace {

AssignmentConfig default_cfg() { return AssignmentConfig{}; }

SetupStats stats_from(std::vector<std::pair<int, DayCount>> rows) {
  SetupStats s;
  s.setup_id = 1;
  for (const auto& [day, counts] : rows)
    s.add(day, counts.clicks, counts.conversions);
  return s;
}

TaskAssignment fresh(Task label) {
  TaskAssignment a;
  a.setup_id = 1;
  a.label = label;
  a.raw_label = label;
  return a;
}

}  // namespace

TEST_CASE("decayed_cvr with lambda 1 is the plain windowed ratio") {
  AssignmentConfig cfg = default_cfg();
  cfg.decay_lambda = 1.0;
  cfg.min_clicks = 1;
  SetupStats s = stats_from({{0, {100, 7}}, {1, {50, 1}}, {2, {25, 2}}});
  const DecayedStats ds = decayed_cvr(s, 2, cfg);
  std::vector<std::pair<long long, long long>> rows = {
      {100, 7}, {50, 1}, {25, 2}};
  CHECK(ds.cvr.has_value());
  CHECK(*ds.cvr == doctest::Approx(oracle::windowed_cvr(rows)).epsilon(1e-15));
  CHECK(ds.clicks == 175.0);
}

TEST_CASE("decayed_cvr hand-evaluated two-day case") {
  AssignmentConfig cfg = default_cfg();
  cfg.decay_lambda = 0.5;
  cfg.min_clicks = 1;
  // day0: age 1 (10 clicks, 1 conv), day1: age 0 (10 clicks, 0 conv)
  SetupStats s = stats_from({{0, {10, 1}}, {1, {10, 0}}});
  const DecayedStats ds = decayed_cvr(s, 1, cfg);
  REQUIRE(ds.cvr.has_value());
  CHECK(*ds.cvr == doctest::Approx(0.5 / 15.0).epsilon(1e-12));
}

TEST_CASE("decayed_cvr is insufficient with zero clicks") {
  AssignmentConfig cfg = default_cfg();
  SetupStats s;
  s.setup_id = 9;
  const DecayedStats ds = decayed_cvr(s, 5, cfg);
  CHECK_FALSE(ds.cvr.has_value());
  CHECK(ds.clicks == 0.0);
}

TEST_CASE("decayed_cvr ignores days outside the window and in the future") {
  AssignmentConfig cfg = default_cfg();
  cfg.window_days = 2;
  cfg.decay_lambda = 1.0;
  cfg.min_clicks = 1;
  SetupStats s = stats_from(
      {{0, {1000, 1000}}, {8, {10, 1}}, {9, {10, 0}}, {12, {500, 500}}});
  const DecayedStats ds = decayed_cvr(s, 9, cfg);
  REQUIRE(ds.cvr.has_value());
  CHECK(*ds.cvr == doctest::Approx(1.0 / 20.0));
}

TEST_CASE("classify thresholds at alpha with the boundary going hard") {
  AssignmentConfig cfg = default_cfg();  // alpha 0.01
  CHECK(classify(0.30, Category::kPageView, cfg) == Task::kSoft);
  CHECK(classify(0.0008, Category::kPurchase, cfg) == Task::kHard);
  CHECK(classify(cfg.alpha, Category::kPageView, cfg) == Task::kHard);
}

TEST_CASE("classify falls back to the category prior on insufficient stats") {
  AssignmentConfig cfg = default_cfg();
  AssignmentSource source;
  CHECK(classify(std::nullopt, Category::kPurchase, cfg, &source) ==
        Task::kHard);
  CHECK(source == AssignmentSource::kCategoryPrior);
  CHECK(classify(std::nullopt, Category::kPageView, cfg) == Task::kSoft);
  // unknown category: conservative hard
  AssignmentConfig no_prior = cfg;
  no_prior.category_prior.clear();
  CHECK(classify(std::nullopt, Category::kVideoView, no_prior) == Task::kHard);
}

TEST_CASE("stabilize: oscillation inside the hysteresis band never flips") {
  AssignmentConfig cfg = default_cfg();  // band (0.008, 0.0125) around 0.01
  TaskAssignment a = fresh(Task::kHard);
  int flips = 0;
  for (int day = 0; day < 28; ++day) {
    const double cvr = day % 2 == 0 ? 0.009 : 0.011;
    const Task raw = classify(cvr, Category::kPurchase, cfg);
    const TaskAssignment next = stabilize(a, raw, cvr, cfg);
    if (next.label != a.label) ++flips;
    a = next;
  }
  CHECK(flips == 0);
  CHECK(a.label == Task::kHard);
}

TEST_CASE("stabilize: sustained far jump flips on the dwell_days-th evaluation") {
  AssignmentConfig cfg = default_cfg();  // dwell 3
  TaskAssignment a = fresh(Task::kHard);
  const double cvr = 0.3;  // far above alpha_high = 0.0125

  a = stabilize(a, classify(cvr, Category::kPageView, cfg), cvr, cfg);
  CHECK(a.label == Task::kHard);
  CHECK(a.days_pending_flip == 1);
  a = stabilize(a, classify(cvr, Category::kPageView, cfg), cvr, cfg);
  CHECK(a.label == Task::kHard);
  CHECK(a.days_pending_flip == 2);
  a = stabilize(a, classify(cvr, Category::kPageView, cfg), cvr, cfg);
  CHECK(a.label == Task::kSoft);
  CHECK(a.days_pending_flip == 0);
}

TEST_CASE("stabilize: agreement resets the pending counter") {
  AssignmentConfig cfg = default_cfg();
  TaskAssignment a = fresh(Task::kHard);
  a = stabilize(a, Task::kSoft, 0.4, cfg);
  CHECK(a.days_pending_flip == 1);
  a = stabilize(a, Task::kHard, 0.001, cfg);
  CHECK(a.days_pending_flip == 0);
  CHECK(a.label == Task::kHard);
}

TEST_CASE("stabilize: disabling stabilization tracks the raw label") {
  AssignmentConfig cfg = default_cfg();
  cfg.stabilization_enabled = false;
  TaskAssignment a = fresh(Task::kHard);
  int flips = 0;
  for (int day = 0; day < 28; ++day) {
    const double cvr = day % 2 == 0 ? 0.009 : 0.011;
    const Task raw = classify(cvr, Category::kPurchase, cfg);
    const TaskAssignment next = stabilize(a, raw, cvr, cfg);
    if (next.label != a.label) ++flips;
    a = next;
  }
  CHECK(flips >= 10);
}

TEST_CASE("stabilize: at most one flip per dwell_days window for any series") {
  AssignmentConfig cfg = default_cfg();
  Rng rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    TaskAssignment a = fresh(Task::kHard);
    std::vector<int> flip_days;
    for (int day = 0; day < 120; ++day) {
      const double cvr = rng.uniform(0.0, 0.05);
      const Task raw = classify(cvr, Category::kPurchase, cfg);
      const TaskAssignment next = stabilize(a, raw, cvr, cfg);
      if (next.label != a.label) flip_days.push_back(day);
      CHECK(next.days_pending_flip < cfg.dwell_days);
      a = next;
    }
    for (std::size_t i = 1; i < flip_days.size(); ++i)
      CHECK(flip_days[i] - flip_days[i - 1] >= cfg.dwell_days);
  }
}

TEST_CASE("monotonicity: more conversions never lower the decayed CVR") {
  AssignmentConfig cfg = default_cfg();
  cfg.min_clicks = 10;
  Rng rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    SetupStats base;
    base.setup_id = 1;
    for (int day = 0; day < 10; ++day) {
      const std::int64_t clicks = 5 + static_cast<std::int64_t>(rng.uniform_int(50));
      const std::int64_t conv = static_cast<std::int64_t>(rng.uniform_int(clicks + 1));
      base.add(day, clicks, conv);
    }
    SetupStats more = base;
    // add conversions on a random day without adding clicks beyond capacity
    for (auto& [day, counts] : more.days) {
      if (counts.conversions < counts.clicks) {
        ++counts.conversions;
        break;
      }
    }
    const auto a = decayed_cvr(base, 9, cfg);
    const auto b = decayed_cvr(more, 9, cfg);
    if (a.cvr.has_value() && b.cvr.has_value()) {
      CHECK(*b.cvr >= *a.cvr);
      const Task raw_a = classify(a.cvr, Category::kPurchase, cfg);
      const Task raw_b = classify(b.cvr, Category::kPurchase, cfg);
      // raw label can only move hard -> soft with more conversions
      if (raw_a == Task::kSoft) CHECK(raw_b == Task::kSoft);
    }
  }
}

TEST_CASE("online threshold sits strictly below alpha") {
  AssignmentConfig cfg = default_cfg();
  CHECK(cfg.online_threshold() < cfg.alpha);
  CHECK(cfg.online_threshold() == doctest::Approx(0.008));
}

TEST_CASE("assign_all on an empty log is empty") {
  AssignmentConfig cfg = default_cfg();
  const AssignmentSet set = assign_all({}, {}, 10, cfg);
  CHECK(set.assignments.empty());
  CHECK(set.online_threshold == doctest::Approx(cfg.online_threshold()));
}

TEST_CASE("assign_all separates setups with well-separated true CVRs") {
  // ground truth pinned far from alpha on both sides: ~0.0005 vs ~0.2
  GeneratorConfig gen;
  gen.n_advertisers = 4;
  gen.setups_per_advertiser = 2;
  gen.n_days = 10;
  gen.clicks_per_day = 8000;
  gen.hard_cvr_low = 0.0004;
  gen.hard_cvr_high = 0.0006;
  gen.soft_cvr_low = 0.15;
  gen.soft_cvr_high = 0.25;
  gen.shared_effect_scale = 0.0;
  gen.task_specific_effect_scale = 0.0;
  gen.seed = 2021;
  const SynthOutput synth = generate(gen);

  AssignmentConfig cfg = default_cfg();
  const AssignmentSet set = assign_all(synth.events, synth.setups, 9, cfg);
  REQUIRE_FALSE(set.assignments.empty());
  std::size_t sufficient = 0;
  for (const auto& a : set.assignments) {
    if (!a.sufficient) continue;
    ++sufficient;
    const auto& setup = synth.setups[static_cast<std::size_t>(a.setup_id)];
    const bool truly_hard = is_hard_setup_index(
        static_cast<int>(setup.setup_id % gen.setups_per_advertiser));
    CHECK(a.label == (truly_hard ? Task::kHard : Task::kSoft));
  }
  CHECK(sufficient > 0);
}

TEST_CASE("assign_all is deterministic across reruns") {
  GeneratorConfig gen;
  gen.n_advertisers = 3;
  gen.setups_per_advertiser = 2;
  gen.n_days = 6;
  gen.clicks_per_day = 1000;
  gen.seed = 5;
  const SynthOutput synth = generate(gen);
  AssignmentConfig cfg = default_cfg();
  const AssignmentSet a = assign_all(synth.events, synth.setups, 5, cfg);
  const AssignmentSet b = assign_all(synth.events, synth.setups, 5, cfg);
  REQUIRE(a.assignments.size() == b.assignments.size());
  for (std::size_t i = 0; i < a.assignments.size(); ++i) {
    CHECK(a.assignments[i].setup_id == b.assignments[i].setup_id);
    CHECK(a.assignments[i].label == b.assignments[i].label);
    CHECK(a.assignments[i].decayed_cvr == b.assignments[i].decayed_cvr);
  }
}

TEST_CASE("assign_all chains stabilization state through previous sets") {
  GeneratorConfig gen;
  gen.n_advertisers = 2;
  gen.setups_per_advertiser = 2;
  gen.n_days = 8;
  gen.clicks_per_day = 2000;
  gen.seed = 6;
  const SynthOutput synth = generate(gen);
  AssignmentConfig cfg = default_cfg();
  const AssignmentSet day6 = assign_all(synth.events, synth.setups, 6, cfg);
  const AssignmentSet day7 =
      assign_all(synth.events, synth.setups, 7, cfg, &day6);
  CHECK(day7.assignments.size() == day6.assignments.size());
}

TEST_CASE("config validation rejects bad parameters") {
  AssignmentConfig cfg = default_cfg();
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = default_cfg();
  cfg.dwell_days = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = default_cfg();
  cfg.online_alpha_factor = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = default_cfg();
  cfg.hysteresis_low_factor = 1.2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("setup stats reject conversions above clicks") {
  SetupStats s;
  s.setup_id = 1;
  CHECK_THROWS_AS(s.add(0, 5, 6), std::invalid_argument);
}
