#include "mtlcvr/batch.hpp"

#include <cmath>

namespace mtlcvr {

BatchCounts count_tasks(std::span<const std::uint32_t> batch_indices,
                        std::span<const Task> tasks) {
  BatchCounts counts;
  for (std::uint32_t idx : batch_indices) {
    if (tasks[idx] == Task::kHard)
      ++counts.n_hard;
    else
      ++counts.n_soft;
  }
  return counts;
}

namespace {

// forward + backward for one event, loss sums returned via sum_hard/sum_soft
inline void accumulate_event(const MtlNetwork& net, const ClickEvent& event,
                             Task task, double w_hard, double w_soft,
                             std::size_t n_hard, std::size_t n_soft,
                             ForwardTrace& trace, NetGrads& grads,
                             double& sum_hard, double& sum_soft) {
  forward_event(net, event, trace);
  const int t = static_cast<int>(task);
  const double c = event.converted ? 1.0 : 0.0;
  const double p = trace.p[t];
  if (task == Task::kHard) {
    sum_hard += bce_loss(c, p);
    backward_event(net, trace, task, bce_logit_grad(c, p, w_hard, n_hard),
                   grads);
  } else {
    sum_soft += bce_loss(c, p);
    backward_event(net, trace, task, bce_logit_grad(c, p, w_soft, n_soft),
                   grads);
  }
}

LossBreakdown finalize(double sum_hard, double sum_soft, std::size_t n_hard,
                       std::size_t n_soft, double w_hard, double w_soft) {
  LossBreakdown lb;
  lb.n_hard = n_hard;
  lb.n_soft = n_soft;
  lb.loss_hard = n_hard > 0 ? sum_hard / static_cast<double>(n_hard) : 0.0;
  lb.loss_soft = n_soft > 0 ? sum_soft / static_cast<double>(n_soft) : 0.0;
  lb.loss_total = w_soft * lb.loss_soft + w_hard * lb.loss_hard;
  return lb;
}

}  // namespace

LossBreakdown batch_grad_serial(const MtlNetwork& net,
                                std::span<const ClickEvent> events,
                                std::span<const Task> tasks,
                                std::span<const std::uint32_t> batch_indices,
                                double w_hard, double w_soft, NetGrads& grads) {
  grads.set_zero();
  const BatchCounts counts = count_tasks(batch_indices, tasks);
  ForwardTrace trace(net.config);
  double sum_hard = 0.0, sum_soft = 0.0;
  for (std::uint32_t idx : batch_indices)
    accumulate_event(net, events[idx], tasks[idx], w_hard, w_soft,
                     counts.n_hard, counts.n_soft, trace, grads, sum_hard,
                     sum_soft);
  return finalize(sum_hard, sum_soft, counts.n_hard, counts.n_soft, w_hard,
                  w_soft);
}

BatchWorkspace::BatchWorkspace(const MtlNetwork& net, std::size_t max_batch) {
  const std::size_t max_blocks = (max_batch + kBatchBlock - 1) / kBatchBlock;
  block_grads.reserve(max_blocks);
  block_trace.reserve(max_blocks);
  for (std::size_t b = 0; b < max_blocks; ++b) {
    block_grads.push_back(NetGrads::zeros_like(net));
    block_trace.emplace_back(net.config);
  }
  block_loss_hard.assign(max_blocks, 0.0);
  block_loss_soft.assign(max_blocks, 0.0);
}

LossBreakdown batch_grad_blocked(const MtlNetwork& net,
                                 std::span<const ClickEvent> events,
                                 std::span<const Task> tasks,
                                 std::span<const std::uint32_t> batch_indices,
                                 double w_hard, double w_soft, NetGrads& grads,
                                 BatchWorkspace& ws) {
  grads.set_zero();
  const BatchCounts counts = count_tasks(batch_indices, tasks);
  const std::size_t n = batch_indices.size();
  const std::size_t n_blocks = (n + kBatchBlock - 1) / kBatchBlock;
  if (n_blocks > ws.block_grads.size())
    throw std::invalid_argument("batch larger than workspace capacity");

  const std::int64_t nb = static_cast<std::int64_t>(n_blocks);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nb; ++b) {
    NetGrads& bg = ws.block_grads[b];
    bg.set_zero();
    ForwardTrace& trace = ws.block_trace[b];
    double sum_hard = 0.0, sum_soft = 0.0;
    const std::size_t lo = static_cast<std::size_t>(b) * kBatchBlock;
    const std::size_t hi = std::min(n, lo + kBatchBlock);
    for (std::size_t k = lo; k < hi; ++k) {
      const std::uint32_t idx = batch_indices[k];
      accumulate_event(net, events[idx], tasks[idx], w_hard, w_soft,
                       counts.n_hard, counts.n_soft, trace, bg, sum_hard,
                       sum_soft);
    }
    ws.block_loss_hard[b] = sum_hard;
    ws.block_loss_soft[b] = sum_soft;
  }

  // fixed-order reduction keeps results independent of the thread count
  double sum_hard = 0.0, sum_soft = 0.0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    grads.add(ws.block_grads[b]);
    sum_hard += ws.block_loss_hard[b];
    sum_soft += ws.block_loss_soft[b];
  }
  return finalize(sum_hard, sum_soft, counts.n_hard, counts.n_soft, w_hard,
                  w_soft);
}

}  // namespace mtlcvr
