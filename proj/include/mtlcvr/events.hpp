#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtlcvr {

enum class Category : std::uint8_t {
  kPurchase,
  kSignup,
  kPageView,
  kVideoView,
  kLead,
};

inline const char* to_string(Category c) {
  switch (c) {
    case Category::kPurchase: return "purchase";
    case Category::kSignup: return "signup";
    case Category::kPageView: return "pageview";
    case Category::kVideoView: return "videoview";
    case Category::kLead: return "lead";
  }
  return "unknown";
}

inline Category category_from_string(const std::string& s) {
  if (s == "purchase") return Category::kPurchase;
  if (s == "signup") return Category::kSignup;
  if (s == "pageview") return Category::kPageView;
  if (s == "videoview") return Category::kVideoView;
  if (s == "lead") return Category::kLead;
  throw std::invalid_argument("unknown conversion category: " + s);
}

struct FeatureSpec {
  std::string name;
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 0;
};

using FeatureSchema = std::vector<FeatureSpec>;

// One logged click. `features` is aligned with the dataset's FeatureSchema
// order. `true_pcvr` is generator ground truth; models never read it.
struct ClickEvent {
  std::uint64_t event_id = 0;
  std::int32_t day = 0;
  std::int32_t seq = 0;
  std::vector<std::uint32_t> features;
  std::int64_t setup_id = 0;
  std::int64_t advertiser_id = 0;
  bool converted = false;
  double true_pcvr = 0.0;
};

// An advertiser's conversion definition. `value_per_conversion` doubles as
// the target CPA for bidding in the simulator.
struct ConversionSetup {
  std::int64_t setup_id = 0;
  std::int64_t advertiser_id = 0;
  Category category = Category::kPurchase;
  double base_cvr = 0.0;
  double daily_budget = 0.0;
  double value_per_conversion = 0.0;
};

}  // namespace mtlcvr
