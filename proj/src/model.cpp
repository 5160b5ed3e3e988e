#include "mtlcvr/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mtlcvr/batch.hpp"
#include "mtlcvr/metrics.hpp"
#include "mtlcvr/rng.hpp"

namespace mtlcvr {

void ModelConfig::validate() const {
  if (schema.empty()) throw std::invalid_argument("model: empty feature schema");
  for (const auto& f : schema) {
    if (f.vocab_size == 0 || f.embedding_dim == 0)
      throw std::invalid_argument("model: feature '" + f.name +
                                  "' needs vocab_size and embedding_dim >= 1");
  }
  if (w_hard + w_soft <= 0.0)
    throw std::invalid_argument("model: w_hard + w_soft must be > 0");
  if (w_hard < 0.0 || w_hard > 1.0 || w_soft < 0.0 || w_soft > 1.0)
    throw std::invalid_argument("model: task weights must lie in [0,1]");
  if (tower_widths.empty() || tower_widths.back() != 1)
    throw std::invalid_argument("model: tower_widths must end in a width-1 logit");
  if (num_shared_dense_layers > 0 && shared_dense_width == 0)
    throw std::invalid_argument("model: shared_dense_width must be >= 1");
  if (learning_rate <= 0.0)
    throw std::invalid_argument("model: learning_rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("model: batch_size must be >= 1");
}

std::size_t ModelConfig::concat_width() const {
  std::size_t w = 0;
  for (const auto& f : schema) w += f.embedding_dim;
  return w;
}

std::size_t ModelConfig::shared_out_width() const {
  return num_shared_dense_layers > 0 ? shared_dense_width : concat_width();
}

namespace {

std::vector<DenseLayer> make_tower(const ModelConfig& cfg, Rng& rng) {
  std::vector<DenseLayer> tower;
  std::size_t in = cfg.shared_out_width();
  for (std::size_t i = 0; i < cfg.tower_widths.size(); ++i) {
    const bool last = i + 1 == cfg.tower_widths.size();
    DenseLayer layer(cfg.tower_widths[i], in,
                     last ? Activation::kIdentity : Activation::kReLU);
    init_dense(layer, rng);
    in = cfg.tower_widths[i];
    tower.push_back(std::move(layer));
  }
  return tower;
}

}  // namespace

MtlNetwork MtlNetwork::init(const ModelConfig& cfg) {
  cfg.validate();
  MtlNetwork net;
  net.config = cfg;

  Rng emb_rng(Rng::derive(cfg.seed, "init/embeddings"));
  for (const auto& f : cfg.schema) {
    EmbeddingTable table(f.name, f.vocab_size, f.embedding_dim);
    init_embedding(table, emb_rng);
    net.embeddings.push_back(std::move(table));
  }

  const std::size_t d = cfg.concat_width();
  Rng cross_rng(Rng::derive(cfg.seed, "init/cross"));
  for (std::size_t i = 0; i < cfg.num_cross_layers; ++i) {
    CrossLayer layer(d);
    init_cross(layer, cross_rng);
    net.shared_cross.push_back(std::move(layer));
  }

  Rng dense_rng(Rng::derive(cfg.seed, "init/shared_dense"));
  std::size_t in = d;
  for (std::size_t i = 0; i < cfg.num_shared_dense_layers; ++i) {
    DenseLayer layer(cfg.shared_dense_width, in, Activation::kReLU);
    init_dense(layer, dense_rng);
    in = cfg.shared_dense_width;
    net.shared_dense.push_back(std::move(layer));
  }

  // Tied tower seeds: identical initial towers, so p_soft == p_hard on a
  // fresh network for every input.
  Rng tower_rng_soft(Rng::derive(cfg.seed, "init/tower"));
  Rng tower_rng_hard(Rng::derive(cfg.seed, "init/tower"));
  net.tower_soft = make_tower(cfg, tower_rng_soft);
  net.tower_hard = make_tower(cfg, tower_rng_hard);
  return net;
}

std::size_t MtlNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : embeddings) n += e.table.size();
  for (const auto& c : shared_cross) n += c.weight.size() + c.bias.size();
  for (const auto& l : shared_dense) n += l.weight.size() + l.bias.size();
  for (const auto& l : tower_soft) n += l.weight.size() + l.bias.size();
  for (const auto& l : tower_hard) n += l.weight.size() + l.bias.size();
  return n;
}

NetGrads NetGrads::zeros_like(const MtlNetwork& net) {
  NetGrads g;
  for (const auto& e : net.embeddings)
    g.embeddings.emplace_back(e.vocab_size, e.dim);
  for (const auto& c : net.shared_cross) {
    g.cross_weight.emplace_back(c.weight.size(), 0.0);
    g.cross_bias.emplace_back(c.bias.size(), 0.0);
  }
  for (const auto& l : net.shared_dense) {
    g.shared_weight.emplace_back(l.out_dim(), l.in_dim());
    g.shared_bias.emplace_back(l.out_dim(), 0.0);
  }
  const std::vector<DenseLayer>* towers[2] = {&net.tower_hard, &net.tower_soft};
  for (int t = 0; t < 2; ++t) {
    for (const auto& l : *towers[t]) {
      g.tower_weight[t].emplace_back(l.out_dim(), l.in_dim());
      g.tower_bias[t].emplace_back(l.out_dim(), 0.0);
    }
  }
  return g;
}

void NetGrads::set_zero() {
  auto zero_mat = [](Matrix& m) { std::fill(m.data.begin(), m.data.end(), 0.0); };
  auto zero_vec = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
  for (auto& m : embeddings) zero_mat(m);
  for (auto& v : cross_weight) zero_vec(v);
  for (auto& v : cross_bias) zero_vec(v);
  for (auto& m : shared_weight) zero_mat(m);
  for (auto& v : shared_bias) zero_vec(v);
  for (int t = 0; t < 2; ++t) {
    for (auto& m : tower_weight[t]) zero_mat(m);
    for (auto& v : tower_bias[t]) zero_vec(v);
  }
}

void NetGrads::add(const NetGrads& other) {
  auto add_mat = [](Matrix& a, const Matrix& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  };
  auto add_vec = [](std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  for (std::size_t i = 0; i < embeddings.size(); ++i)
    add_mat(embeddings[i], other.embeddings[i]);
  for (std::size_t i = 0; i < cross_weight.size(); ++i) {
    add_vec(cross_weight[i], other.cross_weight[i]);
    add_vec(cross_bias[i], other.cross_bias[i]);
  }
  for (std::size_t i = 0; i < shared_weight.size(); ++i) {
    add_mat(shared_weight[i], other.shared_weight[i]);
    add_vec(shared_bias[i], other.shared_bias[i]);
  }
  for (int t = 0; t < 2; ++t) {
    for (std::size_t i = 0; i < tower_weight[t].size(); ++i) {
      add_mat(tower_weight[t][i], other.tower_weight[t][i]);
      add_vec(tower_bias[t][i], other.tower_bias[t][i]);
    }
  }
}

std::vector<ParamGradRef> enumerate_params(MtlNetwork& net, NetGrads& grads) {
  std::vector<ParamGradRef> refs;
  for (std::size_t i = 0; i < net.embeddings.size(); ++i)
    refs.push_back({"embedding/" + net.embeddings[i].feature_name,
                    net.embeddings[i].table.data, grads.embeddings[i].data});
  for (std::size_t i = 0; i < net.shared_cross.size(); ++i) {
    const std::string base = "cross" + std::to_string(i);
    refs.push_back({base + "/weight", net.shared_cross[i].weight,
                    grads.cross_weight[i]});
    refs.push_back({base + "/bias", net.shared_cross[i].bias,
                    grads.cross_bias[i]});
  }
  for (std::size_t i = 0; i < net.shared_dense.size(); ++i) {
    const std::string base = "shared" + std::to_string(i);
    refs.push_back({base + "/weight", net.shared_dense[i].weight.data,
                    grads.shared_weight[i].data});
    refs.push_back({base + "/bias", net.shared_dense[i].bias,
                    grads.shared_bias[i]});
  }
  const char* tower_name[2] = {"tower_hard", "tower_soft"};
  std::vector<DenseLayer>* towers[2] = {&net.tower_hard, &net.tower_soft};
  for (int t = 0; t < 2; ++t) {
    for (std::size_t i = 0; i < towers[t]->size(); ++i) {
      const std::string base =
          std::string(tower_name[t]) + ".dense" + std::to_string(i);
      refs.push_back({base + "/weight", (*towers[t])[i].weight.data,
                      grads.tower_weight[t][i].data});
      refs.push_back({base + "/bias", (*towers[t])[i].bias,
                      grads.tower_bias[t][i]});
    }
  }
  return refs;
}

ForwardTrace::ForwardTrace(const ModelConfig& cfg) {
  indices.resize(cfg.schema.size());
  x0.resize(cfg.concat_width());
  cross_out.assign(cfg.num_cross_layers,
                   std::vector<double>(cfg.concat_width()));
  shared_pre.assign(cfg.num_shared_dense_layers,
                    std::vector<double>(cfg.shared_dense_width));
  shared_out = shared_pre;
  for (int t = 0; t < 2; ++t) {
    tower_pre[t].clear();
    tower_out[t].clear();
    for (std::size_t w : cfg.tower_widths) {
      tower_pre[t].emplace_back(w);
      tower_out[t].emplace_back(w);
    }
  }
}

std::size_t oov_mapped_index(std::uint32_t value, std::size_t vocab) {
  return value < vocab ? static_cast<std::size_t>(value) : 0;
}

void forward_event(const MtlNetwork& net, const ClickEvent& event,
                   ForwardTrace& trace) {
  const ModelConfig& cfg = net.config;
  if (event.features.size() != cfg.schema.size())
    throw std::invalid_argument("event feature count does not match schema");
  for (std::size_t f = 0; f < cfg.schema.size(); ++f)
    trace.indices[f] =
        oov_mapped_index(event.features[f], cfg.schema[f].vocab_size);

  embed_concat(net.embeddings, trace.indices, trace.x0);

  std::span<const double> cur(trace.x0);
  for (std::size_t l = 0; l < net.shared_cross.size(); ++l) {
    cross_forward(net.shared_cross[l], trace.x0, cur, trace.cross_out[l]);
    cur = trace.cross_out[l];
  }
  for (std::size_t l = 0; l < net.shared_dense.size(); ++l) {
    dense_forward(net.shared_dense[l], cur, trace.shared_pre[l],
                  trace.shared_out[l]);
    cur = trace.shared_out[l];
  }

  const std::vector<DenseLayer>* towers[2] = {&net.tower_hard, &net.tower_soft};
  for (int t = 0; t < 2; ++t) {
    std::span<const double> x = cur;
    for (std::size_t l = 0; l < towers[t]->size(); ++l) {
      dense_forward((*towers[t])[l], x, trace.tower_pre[t][l],
                    trace.tower_out[t][l]);
      x = trace.tower_out[t][l];
    }
    trace.logit[t] = x[0];
    trace.p[t] = sigmoid(x[0]);
  }
  trace.valid = true;
}

Prediction forward(const MtlNetwork& net, const ClickEvent& event) {
  ForwardTrace trace(net.config);
  forward_event(net, event, trace);
  return {trace.p[static_cast<int>(Task::kSoft)],
          trace.p[static_cast<int>(Task::kHard)]};
}

void backward_event(const MtlNetwork& net, const ForwardTrace& trace,
                    Task task, double d_logit, NetGrads& grads) {
  if (!trace.valid)
    throw std::logic_error("backward without a recorded forward pass");
  const int t = static_cast<int>(task);
  const std::vector<DenseLayer>& tower =
      task == Task::kHard ? net.tower_hard : net.tower_soft;

  const std::size_t trunk_width = net.config.shared_out_width();
  std::vector<double> d_upper(1, d_logit);
  std::vector<double> d_lower;

  // shared trunk output that fed the towers
  std::span<const double> trunk_out =
      net.shared_dense.empty()
          ? (net.shared_cross.empty() ? std::span<const double>(trace.x0)
                                      : std::span<const double>(
                                            trace.cross_out.back()))
          : std::span<const double>(trace.shared_out.back());

  for (std::size_t l = tower.size(); l-- > 0;) {
    std::span<const double> x =
        l == 0 ? trunk_out : std::span<const double>(trace.tower_out[t][l - 1]);
    d_lower.assign(x.size(), 0.0);
    dense_backward(tower[l], x, trace.tower_pre[t][l], trace.tower_out[t][l],
                   d_upper, grads.tower_weight[t][l], grads.tower_bias[t][l],
                   d_lower);
    d_upper.swap(d_lower);
  }
  // d_upper now holds dL/d(trunk output) of width trunk_width
  check_shape(d_upper.size() == trunk_width, "tower backward width");

  for (std::size_t l = net.shared_dense.size(); l-- > 0;) {
    std::span<const double> x =
        l == 0 ? (net.shared_cross.empty()
                      ? std::span<const double>(trace.x0)
                      : std::span<const double>(trace.cross_out.back()))
               : std::span<const double>(trace.shared_out[l - 1]);
    d_lower.assign(x.size(), 0.0);
    dense_backward(net.shared_dense[l], x, trace.shared_pre[l],
                   trace.shared_out[l], d_upper, grads.shared_weight[l],
                   grads.shared_bias[l], d_lower);
    d_upper.swap(d_lower);
  }

  // cross chain: track gradient into x0 separately, it accumulates from
  // every layer plus the chain head
  std::vector<double> d_x0(trace.x0.size(), 0.0);
  for (std::size_t l = net.shared_cross.size(); l-- > 0;) {
    std::span<const double> xl =
        l == 0 ? std::span<const double>(trace.x0)
               : std::span<const double>(trace.cross_out[l - 1]);
    d_lower.assign(xl.size(), 0.0);
    cross_backward(net.shared_cross[l], trace.x0, xl, d_upper,
                   grads.cross_weight[l], grads.cross_bias[l], d_x0, d_lower);
    d_upper.swap(d_lower);
  }
  // at the chain head x_l is x0 itself
  for (std::size_t i = 0; i < d_x0.size(); ++i) d_x0[i] += d_upper[i];

  std::size_t off = 0;
  for (std::size_t f = 0; f < net.embeddings.size(); ++f) {
    const std::size_t dim = net.embeddings[f].dim;
    auto grow = grads.embeddings[f].row(trace.indices[f]);
    for (std::size_t i = 0; i < dim; ++i) grow[i] += d_x0[off + i];
    off += dim;
  }
}

LossBreakdown minibatch_loss(const MtlNetwork& net,
                             std::span<const ClickEvent> batch,
                             std::span<const Task> tasks, double w_hard,
                             double w_soft) {
  if (batch.empty()) throw std::invalid_argument("minibatch_loss: empty batch");
  check_shape(batch.size() == tasks.size(), "minibatch_loss tasks");
  ForwardTrace trace(net.config);
  double sum[2] = {0.0, 0.0};
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward_event(net, batch[i], trace);
    const int t = static_cast<int>(tasks[i]);
    const double c = batch[i].converted ? 1.0 : 0.0;
    sum[t] += bce_loss(c, trace.p[t]);
    ++n[t];
  }
  LossBreakdown lb;
  lb.n_hard = n[0];
  lb.n_soft = n[1];
  lb.loss_hard = n[0] > 0 ? sum[0] / static_cast<double>(n[0]) : 0.0;
  lb.loss_soft = n[1] > 0 ? sum[1] / static_cast<double>(n[1]) : 0.0;
  lb.loss_total = w_soft * lb.loss_soft + w_hard * lb.loss_hard;
  return lb;
}

TrainResult train(MtlNetwork& net, std::span<const ClickEvent> events,
                  std::span<const Task> tasks) {
  if (events.empty()) throw std::invalid_argument("train: empty dataset");
  check_shape(events.size() == tasks.size(), "train tasks");
  const ModelConfig& cfg = net.config;

  TrainResult result;
  std::size_t total[2] = {0, 0};
  for (Task t : tasks) ++total[static_cast<int>(t)];
  if (total[static_cast<int>(Task::kHard)] == 0)
    result.warnings.push_back("no hard-task examples in training data");
  if (total[static_cast<int>(Task::kSoft)] == 0)
    result.warnings.push_back("no soft-task examples in training data");

  NetGrads grads = NetGrads::zeros_like(net);
  BatchWorkspace ws(net, cfg.batch_size);
  AdamState adam(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  const auto refs = enumerate_params(net, grads);

  std::vector<std::uint32_t> order(events.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<std::uint32_t>(i);
  Rng shuffle_rng(Rng::derive(cfg.seed, "train/shuffle"));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sum[2] = {0.0, 0.0};
    std::size_t epoch_n[2] = {0, 0};
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch_index) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      std::span<const std::uint32_t> batch(order.data() + start, len);
      const LossBreakdown lb = batch_grad_blocked(
          net, events, tasks, batch, cfg.w_hard, cfg.w_soft, grads, ws);
      if (!std::isfinite(lb.loss_total))
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            " batch " + std::to_string(batch_index));
      adam.step(refs);
      epoch_sum[0] += lb.loss_hard * static_cast<double>(lb.n_hard);
      epoch_sum[1] += lb.loss_soft * static_cast<double>(lb.n_soft);
      epoch_n[0] += lb.n_hard;
      epoch_n[1] += lb.n_soft;
    }
    LossBreakdown epoch_loss;
    epoch_loss.n_hard = epoch_n[0];
    epoch_loss.n_soft = epoch_n[1];
    epoch_loss.loss_hard =
        epoch_n[0] > 0 ? epoch_sum[0] / static_cast<double>(epoch_n[0]) : 0.0;
    epoch_loss.loss_soft =
        epoch_n[1] > 0 ? epoch_sum[1] / static_cast<double>(epoch_n[1]) : 0.0;
    epoch_loss.loss_total =
        cfg.w_soft * epoch_loss.loss_soft + cfg.w_hard * epoch_loss.loss_hard;
    result.history.push_back(epoch_loss);
  }
  return result;
}

double InferenceModel::predict(const ClickEvent& event) const {
  if (event.features.size() != schema.size())
    throw std::invalid_argument("event feature count does not match schema");
  thread_local std::vector<double> x0, buf_a, buf_b, pre;
  thread_local std::vector<std::size_t> indices;
  indices.resize(schema.size());
  for (std::size_t f = 0; f < schema.size(); ++f)
    indices[f] = oov_mapped_index(event.features[f], schema[f].vocab_size);

  std::size_t width = 0;
  for (const auto& e : embeddings) width += e.dim;
  x0.resize(width);
  embed_concat(embeddings, indices, x0);

  buf_a = x0;
  std::vector<double>* cur = &buf_a;
  std::vector<double>* nxt = &buf_b;
  for (const auto& layer : shared_cross) {
    nxt->resize(layer.dim());
    cross_forward(layer, x0, *cur, *nxt);
    std::swap(cur, nxt);
  }
  for (const auto& layer : shared_dense) {
    pre.resize(layer.out_dim());
    nxt->resize(layer.out_dim());
    dense_forward(layer, *cur, pre, *nxt);
    std::swap(cur, nxt);
  }
  for (const auto& layer : tower) {
    pre.resize(layer.out_dim());
    nxt->resize(layer.out_dim());
    dense_forward(layer, *cur, pre, *nxt);
    std::swap(cur, nxt);
  }
  return sigmoid((*cur)[0]);
}

std::size_t InferenceModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : embeddings) n += e.table.size();
  for (const auto& c : shared_cross) n += c.weight.size() + c.bias.size();
  for (const auto& l : shared_dense) n += l.weight.size() + l.bias.size();
  for (const auto& l : tower) n += l.weight.size() + l.bias.size();
  return n;
}

InferenceModel prune_to_inference(const MtlNetwork& net,
                                  std::string provenance) {
  InferenceModel m;
  m.schema = net.config.schema;
  m.embeddings = net.embeddings;
  m.shared_cross = net.shared_cross;
  m.shared_dense = net.shared_dense;
  m.tower = net.tower_hard;
  m.provenance = std::move(provenance);
  return m;
}

void predict_batch(const MtlNetwork& net, std::span<const ClickEvent> events,
                   std::span<double> p_soft, std::span<double> p_hard) {
  check_shape(p_soft.size() == events.size() && p_hard.size() == events.size(),
              "predict_batch output");
  const std::int64_t n = static_cast<std::int64_t>(events.size());
#pragma omp parallel
  {
    ForwardTrace trace(net.config);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      forward_event(net, events[i], trace);
      p_hard[i] = trace.p[static_cast<int>(Task::kHard)];
      p_soft[i] = trace.p[static_cast<int>(Task::kSoft)];
    }
  }
}

void predict_batch(const InferenceModel& model,
                   std::span<const ClickEvent> events, std::span<double> out) {
  check_shape(out.size() == events.size(), "predict_batch output");
  const std::int64_t n = static_cast<std::int64_t>(events.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = model.predict(events[i]);
}

std::vector<Task> tasks_for_events(std::span<const ClickEvent> events,
                                   const TaskMap& assignments) {
  std::vector<Task> tasks(events.size(), Task::kHard);
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto it = assignments.find(events[i].setup_id);
    if (it == assignments.end())
      throw std::invalid_argument("no task assignment for setup " +
                                  std::to_string(events[i].setup_id));
    tasks[i] = it->second;
  }
  return tasks;
}

std::vector<SweepRow> sweep(const std::vector<ModelConfig>& configs,
                            std::span<const ClickEvent> train_events,
                            std::span<const ClickEvent> eval_events,
                            const TaskMap& assignments,
                            std::size_t baseline_index, int workers) {
  if (configs.empty()) throw std::invalid_argument("sweep: no configs");
  if (baseline_index >= configs.size())
    throw std::invalid_argument("sweep: baseline index out of range");
  for (const auto& cfg : configs) cfg.validate();

  const std::vector<Task> train_tasks =
      tasks_for_events(train_events, assignments);
  const std::vector<Task> eval_tasks =
      tasks_for_events(eval_events, assignments);

  // hard-task eval subset
  std::vector<ClickEvent> hard_eval;
  for (std::size_t i = 0; i < eval_events.size(); ++i)
    if (eval_tasks[i] == Task::kHard) hard_eval.push_back(eval_events[i]);
  if (hard_eval.empty())
    throw std::invalid_argument("sweep: no hard-task events in eval split");

  std::vector<SweepRow> rows(configs.size());
  const std::int64_t n_cfg = static_cast<std::int64_t>(configs.size());
#ifdef _OPENMP
  const int max_workers = workers > 0 ? workers : omp_get_max_threads();
#else
  (void)workers;
  const int max_workers = 1;
#endif
#pragma omp parallel for schedule(dynamic, 1) num_threads(max_workers)
  for (std::int64_t i = 0; i < n_cfg; ++i) {
    MtlNetwork net = MtlNetwork::init(configs[i]);
    train(net, train_events, train_tasks);
    std::vector<double> ps(hard_eval.size()), ph(hard_eval.size());
    predict_batch(net, hard_eval, ps, ph);
    std::vector<EvalRecord> records(hard_eval.size());
    for (std::size_t k = 0; k < hard_eval.size(); ++k)
      records[k] = {hard_eval[k].converted ? 1.0 : 0.0, ph[k]};
    SweepRow row;
    row.config_id = "cfg" + std::to_string(i);
    row.w_hard = configs[i].w_hard;
    row.w_soft = configs[i].w_soft;
    row.shared_layers = configs[i].num_shared_dense_layers;
    row.rig = rig(records);
    row.auc = auc(records);
    rows[i] = row;
  }

  const double base = rows[baseline_index].rig;
  for (auto& row : rows) {
    if (base == 0.0)
      throw std::domain_error("sweep: baseline RIG is zero, relative RIG undefined");
    row.rig_rel = row.rig / base - 1.0;
  }
  return rows;
}

}  // namespace mtlcvr
