#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mtlcvr {

// One scored example: observed conversion c in {0,1} and predicted
// probability p. Probabilities are clamped to [1e-7, 1-1e-7] before any log.
struct EvalRecord {
  double c = 0.0;
  double p = 0.0;
};

double mean_log_loss(std::span<const EvalRecord> records);

// Relative Information Gain: 1 minus model log-loss over the entropy of the
// base rate. Zero for the constant predictor p == gamma, positive for
// anything that beats it. Natural log throughout.
double rig(std::span<const EvalRecord> records);

// Mann-Whitney AUC with average ranks for ties.
double auc(std::span<const EvalRecord> records);

struct MetricReport {
  std::string label;
  std::size_t n = 0;
  double gamma = 0.0;  // mean observed CVR
  double mean_log_loss = 0.0;
  double rig = 0.0;
  double auc = 0.0;
  double calibration_ratio = 0.0;  // mean p / gamma
};

MetricReport make_report(std::span<const EvalRecord> records,
                         const std::string& label);

// Relative view: (metric / baseline - 1) per metric.
struct RelativeReport {
  std::string label;
  std::string baseline_label;
  double rig_delta = 0.0;
  double auc_delta = 0.0;
  double log_loss_delta = 0.0;
  double calibration_delta = 0.0;
};

RelativeReport relative_report(const MetricReport& report,
                               const MetricReport& baseline);

// Delta fraction formatted as a signed percentage: 0.0408 -> "+4.08%",
// -0.02 -> "-2.0%" (decimals = 1).
std::string format_percent(double delta_fraction, int decimals = 2);

}  // namespace mtlcvr
