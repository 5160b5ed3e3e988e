#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlcvr/adam.hpp"
#include "mtlcvr/events.hpp"
#include "mtlcvr/nn.hpp"

namespace mtlcvr {

enum class Task : std::uint8_t { kHard = 0, kSoft = 1 };

using TaskMap = std::unordered_map<std::int64_t, Task>;

struct ModelConfig {
  FeatureSchema schema;
  std::size_t num_cross_layers = 1;
  std::size_t num_shared_dense_layers = 2;
  std::size_t shared_dense_width = 64;
  std::vector<std::size_t> tower_widths = {32, 1};
  double w_hard = 0.5;
  double w_soft = 0.5;
  double learning_rate = 1e-3;
  std::size_t batch_size = 512;
  std::size_t epochs = 2;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t concat_width() const;
  // width of the shared trunk output that both towers consume
  std::size_t shared_out_width() const;
};

// Full two-tower network of Fig-1 shape: shared embeddings, then cross
// layers, then shared dense layers, then two towers of identical shape.
struct MtlNetwork {
  ModelConfig config;
  std::vector<EmbeddingTable> embeddings;
  std::vector<CrossLayer> shared_cross;
  std::vector<DenseLayer> shared_dense;
  std::vector<DenseLayer> tower_soft;
  std::vector<DenseLayer> tower_hard;

  // Both towers start from the same derived seed, so p_soft == p_hard on a
  // fresh network.
  static MtlNetwork init(const ModelConfig& cfg);

  std::size_t parameter_count() const;
};

// Gradient buffer mirroring MtlNetwork parameters.
struct NetGrads {
  std::vector<Matrix> embeddings;
  std::vector<std::vector<double>> cross_weight, cross_bias;
  std::vector<Matrix> shared_weight;
  std::vector<std::vector<double>> shared_bias;
  std::vector<Matrix> tower_weight[2];  // [Task::kHard][layer], [Task::kSoft]
  std::vector<std::vector<double>> tower_bias[2];

  static NetGrads zeros_like(const MtlNetwork& net);
  void set_zero();
  void add(const NetGrads& other);
};

// Enumerates (name, param, grad) in a fixed order shared by the optimizer,
// serialization, and tests.
std::vector<ParamGradRef> enumerate_params(MtlNetwork& net, NetGrads& grads);

// Per-event activation record, reused across events.
struct ForwardTrace {
  std::vector<std::size_t> indices;
  std::vector<double> x0;
  std::vector<std::vector<double>> cross_out;           // after each cross layer
  std::vector<std::vector<double>> shared_pre, shared_out;
  std::vector<std::vector<double>> tower_pre[2], tower_out[2];
  double logit[2] = {0.0, 0.0};
  double p[2] = {0.5, 0.5};  // [0]=hard, [1]=soft
  bool valid = false;

  explicit ForwardTrace(const ModelConfig& cfg);
  ForwardTrace() = default;
};

struct Prediction {
  double p_soft = 0.0;
  double p_hard = 0.0;
};

// Unknown feature values map to the reserved in-vocabulary index 0.
std::size_t oov_mapped_index(std::uint32_t value, std::size_t vocab);

// Shared trunk computed once, both towers evaluated.
void forward_event(const MtlNetwork& net, const ClickEvent& event,
                   ForwardTrace& trace);
Prediction forward(const MtlNetwork& net, const ClickEvent& event);

// Backward for one event whose loss term is d_logit on the given task tower.
// Requires the trace of a forward pass for the same event.
void backward_event(const MtlNetwork& net, const ForwardTrace& trace,
                    Task task, double d_logit, NetGrads& grads);

struct LossBreakdown {
  double loss_total = 0.0;
  double loss_soft = 0.0;
  double loss_hard = 0.0;
  std::size_t n_soft = 0;
  std::size_t n_hard = 0;
};

constexpr double kProbClamp = 1e-7;

inline double clamp_probability(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

inline double bce_loss(double c, double p) {
  const double pc = clamp_probability(p);
  return -c * std::log(pc) - (1.0 - c) * std::log(1.0 - pc);
}

// Task-masked minibatch loss: per-task mean BCE, combined with the task
// weights. Events contribute only to their assigned task's term.
LossBreakdown minibatch_loss(const MtlNetwork& net,
                             std::span<const ClickEvent> batch,
                             std::span<const Task> tasks, double w_hard,
                             double w_soft);

struct EpochCallbackInfo {
  std::size_t epoch;
  LossBreakdown loss;
};

struct TrainResult {
  std::vector<LossBreakdown> history;  // one entry per epoch
  std::vector<std::string> warnings;
};

// Minibatch Adam training, deterministic given config.seed (shuffling
// included). Throws on non-finite loss with the epoch/batch position.
TrainResult train(MtlNetwork& net, std::span<const ClickEvent> events,
                  std::span<const Task> tasks);

// Serving-time model: shared trunk plus only the hard tower.
struct InferenceModel {
  FeatureSchema schema;
  std::vector<EmbeddingTable> embeddings;
  std::vector<CrossLayer> shared_cross;
  std::vector<DenseLayer> shared_dense;
  std::vector<DenseLayer> tower;
  std::string provenance;

  double predict(const ClickEvent& event) const;
  std::size_t parameter_count() const;
};

InferenceModel prune_to_inference(const MtlNetwork& net,
                                  std::string provenance = "");

// Batch prediction (hard head) for either model form; parallel over events.
void predict_batch(const MtlNetwork& net, std::span<const ClickEvent> events,
                   std::span<double> p_soft, std::span<double> p_hard);
void predict_batch(const InferenceModel& model,
                   std::span<const ClickEvent> events, std::span<double> out);

struct SweepRow {
  std::string config_id;
  double w_hard = 0.0;
  double w_soft = 0.0;
  std::size_t shared_layers = 0;
  double rig = 0.0;      // absolute hard-task RIG on the eval split
  double rig_rel = 0.0;  // (rig / baseline_rig) - 1
  double auc = 0.0;
};

// Trains one model per config and evaluates the hard head on the hard-task
// subset of `eval_events`. Rows keep config order; rig_rel is relative to the
// row at `baseline_index`. Independent configs run in parallel.
std::vector<SweepRow> sweep(const std::vector<ModelConfig>& configs,
                            std::span<const ClickEvent> train_events,
                            std::span<const ClickEvent> eval_events,
                            const TaskMap& assignments,
                            std::size_t baseline_index, int workers = 0);

std::vector<Task> tasks_for_events(std::span<const ClickEvent> events,
                                   const TaskMap& assignments);

}  // namespace mtlcvr
