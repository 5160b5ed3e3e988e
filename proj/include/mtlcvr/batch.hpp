#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mtlcvr/model.hpp"

namespace mtlcvr {

// Minibatch gradient accumulation.
//
// The production kernel splits a batch into fixed blocks of kBatchBlock
// events, accumulates one gradient buffer per block (blocks run in parallel
// under OpenMP), then reduces the blocks in index order. The block structure
// is independent of the thread count, so results are bit-identical for any
// OMP_NUM_THREADS, including a serial build.
//
// batch_grad_serial is the plain event-by-event reference kept for testing
// and benchmarking; it differs from the block kernel only in summation
// order.

constexpr std::size_t kBatchBlock = 128;

// Scaled loss gradient for one event: d(total)/d(logit) with the per-task
// mean normalization folded in.
inline double bce_logit_grad(double c, double p, double task_weight,
                             std::size_t task_count) {
  return task_weight * (p - c) / static_cast<double>(task_count);
}

struct BatchCounts {
  std::size_t n_hard = 0;
  std::size_t n_soft = 0;
};

BatchCounts count_tasks(std::span<const std::uint32_t> batch_indices,
                        std::span<const Task> tasks);

// Reusable buffers for the block kernel, sized for a maximum batch size.
struct BatchWorkspace {
  std::vector<NetGrads> block_grads;
  std::vector<ForwardTrace> block_trace;
  std::vector<double> block_loss_hard, block_loss_soft;

  BatchWorkspace(const MtlNetwork& net, std::size_t max_batch);
};

// Both kernels accumulate into `grads` (cleared first) and return the
// task-masked loss breakdown of the batch.
LossBreakdown batch_grad_serial(const MtlNetwork& net,
                                std::span<const ClickEvent> events,
                                std::span<const Task> tasks,
                                std::span<const std::uint32_t> batch_indices,
                                double w_hard, double w_soft, NetGrads& grads);

LossBreakdown batch_grad_blocked(const MtlNetwork& net,
                                 std::span<const ClickEvent> events,
                                 std::span<const Task> tasks,
                                 std::span<const std::uint32_t> batch_indices,
                                 double w_hard, double w_soft, NetGrads& grads,
                                 BatchWorkspace& ws);

}  // namespace mtlcvr
