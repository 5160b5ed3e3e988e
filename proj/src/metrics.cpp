#include "mtlcvr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "mtlcvr/model.hpp"

namespace mtlcvr {

double mean_log_loss(std::span<const EvalRecord> records) {
  if (records.empty())
    throw std::invalid_argument("mean_log_loss: no records");
  double sum = 0.0;
  for (const auto& r : records) sum += bce_loss(r.c, r.p);
  return sum / static_cast<double>(records.size());
}

double rig(std::span<const EvalRecord> records) {
  if (records.empty()) throw std::invalid_argument("rig: no records");
  double conv = 0.0;
  for (const auto& r : records) conv += r.c;
  const double gamma = conv / static_cast<double>(records.size());
  if (gamma <= 0.0 || gamma >= 1.0)
    throw std::domain_error("rig undefined: gamma = " + std::to_string(gamma) +
                            " has zero entropy");
  const double entropy = -gamma * std::log(gamma) -
                         (1.0 - gamma) * std::log(1.0 - gamma);
  return 1.0 - mean_log_loss(records) / entropy;
}

double auc(std::span<const EvalRecord> records) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& r : records) (r.c > 0.5 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::domain_error("auc undefined: needs both classes, got " +
                            std::to_string(n_pos) + " positives and " +
                            std::to_string(n_neg) + " negatives");

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].p < records[b].p;
  });

  // average ranks within tie groups, accumulate positive rank sum
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           records[order[j + 1]].p == records[order[i]].p)
      ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k)
      if (records[order[k]].c > 0.5) rank_sum_pos += avg_rank;
    i = j + 1;
  }

  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

MetricReport make_report(std::span<const EvalRecord> records,
                         const std::string& label) {
  if (records.empty()) throw std::invalid_argument("report: no records");
  MetricReport rep;
  rep.label = label;
  rep.n = records.size();
  double conv = 0.0, psum = 0.0;
  for (const auto& r : records) {
    conv += r.c;
    psum += r.p;
  }
  rep.gamma = conv / static_cast<double>(rep.n);
  rep.mean_log_loss = mean_log_loss(records);
  try {
    rep.rig = rig(records);
  } catch (const std::domain_error& e) {
    throw std::domain_error(std::string("report: rig failed: ") + e.what());
  }
  try {
    rep.auc = auc(records);
  } catch (const std::domain_error& e) {
    throw std::domain_error(std::string("report: auc failed: ") + e.what());
  }
  rep.calibration_ratio =
      rep.gamma > 0.0 ? (psum / static_cast<double>(rep.n)) / rep.gamma : 0.0;
  return rep;
}

namespace {
double ratio_delta(double value, double baseline, const char* what) {
  if (baseline == 0.0)
    throw std::domain_error(std::string("relative report: baseline ") + what +
                            " is zero");
  return value / baseline - 1.0;
}
}  // namespace

RelativeReport relative_report(const MetricReport& report,
                               const MetricReport& baseline) {
  RelativeReport rel;
  rel.label = report.label;
  rel.baseline_label = baseline.label;
  rel.rig_delta = ratio_delta(report.rig, baseline.rig, "rig");
  rel.auc_delta = ratio_delta(report.auc, baseline.auc, "auc");
  rel.log_loss_delta =
      ratio_delta(report.mean_log_loss, baseline.mean_log_loss, "log loss");
  rel.calibration_delta = ratio_delta(report.calibration_ratio,
                                      baseline.calibration_ratio,
                                      "calibration");
  return rel;
}

std::string format_percent(double delta_fraction, int decimals) {
  const double pct = delta_fraction * 100.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.*f%%", decimals, pct);
  return std::string(buf);
}

}  // namespace mtlcvr
