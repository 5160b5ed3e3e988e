#include "mtlcvr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mtlcvr/nn.hpp"
#include "mtlcvr/rng.hpp"

namespace mtlcvr {

FeatureSchema default_feature_schema(std::size_t embedding_dim) {
  return {
      {"user_segment", 30, embedding_dim},
      {"site", 50, embedding_dim},
      {"ad_attribute", 20, embedding_dim},
      {"device", 4, embedding_dim},
  };
}

void GeneratorConfig::validate() const {
  if (n_advertisers < 1 || setups_per_advertiser < 1)
    throw std::invalid_argument("generator: need at least one setup");
  if (n_days < 1 || clicks_per_day < 1)
    throw std::invalid_argument("generator: need at least one day of clicks");
  if (schema.empty()) throw std::invalid_argument("generator: empty schema");
  auto range_ok = [](double lo, double hi) {
    return 0.0 < lo && lo <= hi && hi < 1.0;
  };
  if (!range_ok(soft_cvr_low, soft_cvr_high) ||
      !range_ok(hard_cvr_low, hard_cvr_high))
    throw std::invalid_argument("generator: CVR ranges must lie in (0,1)");
  if (hard_cvr_high >= soft_cvr_low)
    throw std::invalid_argument(
        "generator: hard CVR range must lie strictly below the soft range");
  if (shared_effect_scale < 0.0 || task_specific_effect_scale < 0.0)
    throw std::invalid_argument("generator: effect scales must be >= 0");
}

bool is_hard_setup_index(int setup_index_within_advertiser) {
  return setup_index_within_advertiser % 2 == 0;
}

namespace {

constexpr Category kHardCategories[] = {Category::kPurchase, Category::kSignup,
                                        Category::kLead};
constexpr Category kSoftCategories[] = {Category::kPageView,
                                        Category::kVideoView};

double logit(double p) { return std::log(p / (1.0 - p)); }

std::vector<ConversionSetup> make_setups(const GeneratorConfig& cfg) {
  Rng rng(Rng::derive(cfg.seed, "setups"));
  std::vector<ConversionSetup> setups;
  setups.reserve(static_cast<std::size_t>(cfg.n_advertisers) *
                 cfg.setups_per_advertiser);
  std::int64_t next_id = 0;
  for (int a = 0; a < cfg.n_advertisers; ++a) {
    for (int s = 0; s < cfg.setups_per_advertiser; ++s) {
      ConversionSetup setup;
      setup.setup_id = next_id++;
      setup.advertiser_id = a;
      const bool hard = is_hard_setup_index(s);
      if (hard) {
        setup.category = kHardCategories[static_cast<std::size_t>(
            rng.uniform_int(std::size(kHardCategories)))];
        // log-uniform across the range so both ends of the decade appear
        setup.base_cvr = std::exp(rng.uniform(std::log(cfg.hard_cvr_low),
                                              std::log(cfg.hard_cvr_high)));
        setup.value_per_conversion = rng.uniform(20.0, 100.0);
        setup.daily_budget = rng.uniform(50.0, 200.0);
      } else {
        setup.category = kSoftCategories[static_cast<std::size_t>(
            rng.uniform_int(std::size(kSoftCategories)))];
        setup.base_cvr = std::exp(rng.uniform(std::log(cfg.soft_cvr_low),
                                              std::log(cfg.soft_cvr_high)));
        setup.value_per_conversion = rng.uniform(0.5, 5.0);
        setup.daily_budget = rng.uniform(20.0, 100.0);
      }
      setups.push_back(setup);
    }
  }
  return setups;
}

FeatureEffects make_effects(const GeneratorConfig& cfg) {
  Rng rng(Rng::derive(cfg.seed, "effects"));
  FeatureEffects fx;
  auto draw = [&](std::vector<std::vector<double>>& dst) {
    dst.resize(cfg.schema.size());
    for (std::size_t f = 0; f < cfg.schema.size(); ++f) {
      dst[f].resize(cfg.schema[f].vocab_size);
      for (double& v : dst[f]) v = rng.normal();
    }
  };
  draw(fx.shared);
  draw(fx.task_hard);
  draw(fx.task_soft);

  // lognormal intercept correction: subtract the mean and half the variance
  // of the per-event effect sum (features drawn uniformly), so E[sigma(...)]
  // stays near base_cvr instead of being Jensen-lifted above it
  auto adjustment = [&](const std::vector<std::vector<double>>& task_fx) {
    double mean_sum = 0.0, var_sum = 0.0;
    for (std::size_t f = 0; f < cfg.schema.size(); ++f) {
      const std::size_t vocab = cfg.schema[f].vocab_size;
      double m = 0.0;
      for (std::size_t v = 0; v < vocab; ++v)
        m += cfg.shared_effect_scale * fx.shared[f][v] +
             cfg.task_specific_effect_scale * task_fx[f][v];
      m /= static_cast<double>(vocab);
      double var = 0.0;
      for (std::size_t v = 0; v < vocab; ++v) {
        const double e = cfg.shared_effect_scale * fx.shared[f][v] +
                         cfg.task_specific_effect_scale * task_fx[f][v] - m;
        var += e * e;
      }
      var /= static_cast<double>(vocab);
      mean_sum += m;
      var_sum += var;
    }
    return -mean_sum - 0.5 * var_sum;
  };
  fx.logit_adjust_hard = adjustment(fx.task_hard);
  fx.logit_adjust_soft = adjustment(fx.task_soft);
  return fx;
}

// advertiser sampling weights: smooth power-law over a seeded rank shuffle,
// so spend concentration is realistic but deterministic
std::vector<double> advertiser_cdf(const GeneratorConfig& cfg) {
  Rng rng(Rng::derive(cfg.seed, "popularity"));
  std::vector<int> rank(cfg.n_advertisers);
  for (int i = 0; i < cfg.n_advertisers; ++i) rank[i] = i;
  rng.shuffle(rank);
  std::vector<double> weight(cfg.n_advertisers);
  for (int i = 0; i < cfg.n_advertisers; ++i)
    weight[i] = 1.0 / std::pow(static_cast<double>(rank[i]) + 1.0, 0.7);
  std::vector<double> cdf(weight.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    acc += weight[i];
    cdf[i] = acc;
  }
  for (double& c : cdf) c /= acc;
  cdf.back() = 1.0;
  return cdf;
}

std::size_t sample_cdf(const std::vector<double>& cdf, double u) {
  return static_cast<std::size_t>(
      std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

double event_true_pcvr(const GeneratorConfig& cfg, const FeatureEffects& fx,
                       const ConversionSetup& setup, bool hard,
                       std::span<const std::uint32_t> features) {
  double z = logit(setup.base_cvr) +
             (hard ? fx.logit_adjust_hard : fx.logit_adjust_soft);
  const auto& task_fx = hard ? fx.task_hard : fx.task_soft;
  for (std::size_t f = 0; f < features.size(); ++f) {
    z += cfg.shared_effect_scale * fx.shared[f][features[f]];
    z += cfg.task_specific_effect_scale * task_fx[f][features[f]];
  }
  return sigmoid(z);
}

std::vector<ClickEvent> generate_day(const GeneratorConfig& cfg,
                                     const std::vector<ConversionSetup>& setups,
                                     const FeatureEffects& fx,
                                     const std::vector<double>& adv_cdf,
                                     int day) {
  Rng rng(Rng::derive(cfg.seed, "day", static_cast<std::uint64_t>(day)));
  std::vector<ClickEvent> events;
  events.reserve(cfg.clicks_per_day);
  for (int seq = 0; seq < cfg.clicks_per_day; ++seq) {
    ClickEvent e;
    e.day = day;
    e.seq = seq;
    e.event_id = static_cast<std::uint64_t>(day) *
                     static_cast<std::uint64_t>(cfg.clicks_per_day) +
                 static_cast<std::uint64_t>(seq);
    const std::size_t adv = sample_cdf(adv_cdf, rng.uniform());
    const int setup_index =
        static_cast<int>(rng.uniform_int(cfg.setups_per_advertiser));
    const ConversionSetup& setup =
        setups[adv * static_cast<std::size_t>(cfg.setups_per_advertiser) +
               static_cast<std::size_t>(setup_index)];
    e.setup_id = setup.setup_id;
    e.advertiser_id = setup.advertiser_id;
    e.features.resize(cfg.schema.size());
    for (std::size_t f = 0; f < cfg.schema.size(); ++f)
      e.features[f] =
          static_cast<std::uint32_t>(rng.uniform_int(cfg.schema[f].vocab_size));
    const bool hard = is_hard_setup_index(setup_index);
    e.true_pcvr = event_true_pcvr(cfg, fx, setup, hard, e.features);
    e.converted = rng.bernoulli(e.true_pcvr);
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace

SynthOutput generate(const GeneratorConfig& cfg) {
  cfg.validate();
  SynthOutput out;
  out.setups = make_setups(cfg);
  out.effects = make_effects(cfg);
  const std::vector<double> adv_cdf = advertiser_cdf(cfg);

  std::vector<std::vector<ClickEvent>> by_day(cfg.n_days);
#pragma omp parallel for schedule(dynamic)
  for (int day = 0; day < cfg.n_days; ++day)
    by_day[day] = generate_day(cfg, out.setups, out.effects, adv_cdf, day);

  out.events.reserve(static_cast<std::size_t>(cfg.n_days) *
                     static_cast<std::size_t>(cfg.clicks_per_day));
  for (auto& day_events : by_day)
    for (auto& e : day_events) out.events.push_back(std::move(e));
  return out;
}

SynthOutput generate_serial(const GeneratorConfig& cfg) {
  cfg.validate();
  SynthOutput out;
  out.setups = make_setups(cfg);
  out.effects = make_effects(cfg);
  const std::vector<double> adv_cdf = advertiser_cdf(cfg);
  for (int day = 0; day < cfg.n_days; ++day) {
    auto day_events = generate_day(cfg, out.setups, out.effects, adv_cdf, day);
    for (auto& e : day_events) out.events.push_back(std::move(e));
  }
  return out;
}

std::pair<std::vector<ClickEvent>, std::vector<ClickEvent>> split_by_time(
    std::span<const ClickEvent> events, double train_fraction) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::invalid_argument("split: train fraction must lie in (0,1)");
  if (events.empty()) throw std::invalid_argument("split: no events");
  int lo = events.front().day, hi = events.front().day;
  for (const auto& e : events) {
    lo = std::min(lo, e.day);
    hi = std::max(hi, e.day);
  }
  const int n_days = hi - lo + 1;
  const int train_days = static_cast<int>(
      std::floor(static_cast<double>(n_days) * train_fraction));
  if (train_days < 1 || train_days >= n_days)
    throw std::invalid_argument(
        "split: time split needs more distinct days (have " +
        std::to_string(n_days) + ")");
  const int cut = lo + train_days;  // first eval day
  std::pair<std::vector<ClickEvent>, std::vector<ClickEvent>> out;
  for (const auto& e : events)
    (e.day < cut ? out.first : out.second).push_back(e);
  return out;
}

}  // namespace mtlcvr
