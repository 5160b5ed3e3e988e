#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mtlcvr/batch.hpp"
#include "mtlcvr/model.hpp"
#include "mtlcvr/rng.hpp"
#include "mtlcvr/synth.hpp"

using namespace mtlcvr;

namespace {

struct Fixture {
  ModelConfig cfg;
  MtlNetwork net;
  std::vector<ClickEvent> events;
  std::vector<Task> tasks;
  std::vector<std::uint32_t> indices;

  explicit Fixture(std::uint64_t seed, std::size_t n_events = 400)
      : cfg(make_cfg(seed)), net(MtlNetwork::init(cfg)) {
    Rng rng(seed);
    for (std::size_t i = 0; i < n_events; ++i) {
      ClickEvent e;
      e.event_id = i;
      e.features = {static_cast<std::uint32_t>(rng.uniform_int(8)),
                    static_cast<std::uint32_t>(rng.uniform_int(6)),
                    static_cast<std::uint32_t>(rng.uniform_int(4))};
      e.converted = rng.bernoulli(0.3);
      events.push_back(e);
      tasks.push_back(rng.bernoulli(0.5) ? Task::kHard : Task::kSoft);
      indices.push_back(static_cast<std::uint32_t>(i));
    }
  }

  static ModelConfig make_cfg(std::uint64_t seed) {
    ModelConfig cfg;
    cfg.schema = {{"a", 8, 4}, {"b", 6, 3}, {"c", 4, 2}};
    cfg.num_cross_layers = 1;
    cfg.num_shared_dense_layers = 2;
    cfg.shared_dense_width = 8;
    cfg.tower_widths = {6, 1};
    cfg.seed = seed;
    cfg.batch_size = 400;
    return cfg;
  }
};

double max_rel_diff(MtlNetwork& net, NetGrads& a, NetGrads& b) {
  NetGrads scratch = NetGrads::zeros_like(net);
  auto ra = enumerate_params(net, a);
  auto rb = enumerate_params(net, b);
  double worst = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i)
    for (std::size_t k = 0; k < ra[i].grad.size(); ++k) {
      const double d = std::abs(ra[i].grad[k] - rb[i].grad[k]) /
                       std::max(1.0, std::abs(ra[i].grad[k]));
      worst = std::max(worst, d);
    }
  (void)scratch;
  return worst;
}

}  // namespace

TEST_CASE("blocked kernel matches the serial reference within 1e-10") {
  Fixture fx(501);
  NetGrads serial = NetGrads::zeros_like(fx.net);
  NetGrads blocked = NetGrads::zeros_like(fx.net);
  BatchWorkspace ws(fx.net, fx.indices.size());

  const LossBreakdown a = batch_grad_serial(fx.net, fx.events, fx.tasks,
                                            fx.indices, 0.5, 0.5, serial);
  const LossBreakdown b = batch_grad_blocked(fx.net, fx.events, fx.tasks,
                                             fx.indices, 0.5, 0.5, blocked, ws);
  CHECK(a.n_hard == b.n_hard);
  CHECK(a.n_soft == b.n_soft);
  CHECK(a.loss_total == doctest::Approx(b.loss_total).epsilon(1e-12));
  CHECK(max_rel_diff(fx.net, serial, blocked) < 1e-10);
}

TEST_CASE("blocked kernel is bit-identical across thread counts") {
  Fixture fx(502);
  BatchWorkspace ws(fx.net, fx.indices.size());

  auto run_with = [&](int threads) {
    NetGrads grads = NetGrads::zeros_like(fx.net);
#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(threads);
    batch_grad_blocked(fx.net, fx.events, fx.tasks, fx.indices, 0.7, 0.3,
                       grads, ws);
    omp_set_num_threads(saved);
#else
    (void)threads;
    batch_grad_blocked(fx.net, fx.events, fx.tasks, fx.indices, 0.7, 0.3,
                       grads, ws);
#endif
    return grads;
  };

  NetGrads one = run_with(1);
  NetGrads two = run_with(2);
  NetGrads four = run_with(4);
  auto r1 = enumerate_params(fx.net, one);
  auto r2 = enumerate_params(fx.net, two);
  auto r4 = enumerate_params(fx.net, four);
  for (std::size_t i = 0; i < r1.size(); ++i)
    for (std::size_t k = 0; k < r1[i].grad.size(); ++k) {
      CHECK(r1[i].grad[k] == r2[i].grad[k]);
      CHECK(r1[i].grad[k] == r4[i].grad[k]);
    }
}

TEST_CASE("predict_batch matches per-event forward exactly") {
  Fixture fx(503, 257);
  std::vector<double> ps(fx.events.size()), ph(fx.events.size());
  predict_batch(fx.net, fx.events, ps, ph);
  for (std::size_t i = 0; i < fx.events.size(); ++i) {
    const Prediction p = forward(fx.net, fx.events[i]);
    CHECK(ps[i] == p.p_soft);
    CHECK(ph[i] == p.p_hard);
  }

  const InferenceModel pruned = prune_to_inference(fx.net);
  std::vector<double> out(fx.events.size());
  predict_batch(pruned, fx.events, out);
  for (std::size_t i = 0; i < fx.events.size(); ++i)
    CHECK(out[i] == ph[i]);
}

TEST_CASE("day-sharded generation equals the serial generator") {
  GeneratorConfig cfg;
  cfg.n_advertisers = 8;
  cfg.setups_per_advertiser = 2;
  cfg.n_days = 12;
  cfg.clicks_per_day = 1500;
  cfg.seed = 888;
  const SynthOutput parallel = generate(cfg);
  const SynthOutput serial = generate_serial(cfg);
  REQUIRE(parallel.events.size() == serial.events.size());
  for (std::size_t i = 0; i < parallel.events.size(); ++i) {
    CHECK(parallel.events[i].event_id == serial.events[i].event_id);
    CHECK(parallel.events[i].setup_id == serial.events[i].setup_id);
    CHECK(parallel.events[i].features == serial.events[i].features);
    CHECK(parallel.events[i].true_pcvr == serial.events[i].true_pcvr);
    CHECK(parallel.events[i].converted == serial.events[i].converted);
  }
}

TEST_CASE("training end to end is invariant to the thread count") {
#ifdef _OPENMP
  Fixture fx(504, 600);
  std::vector<Task> tasks = fx.tasks;
  const int saved = omp_get_max_threads();

  auto train_with = [&](int threads) {
    omp_set_num_threads(threads);
    ModelConfig cfg = fx.cfg;
    cfg.epochs = 2;
    cfg.batch_size = 128;
    MtlNetwork net = MtlNetwork::init(cfg);
    train(net, fx.events, tasks);
    return net;
  };
  MtlNetwork a = train_with(1);
  MtlNetwork b = train_with(2);
  omp_set_num_threads(saved);

  NetGrads ga = NetGrads::zeros_like(a), gb = NetGrads::zeros_like(b);
  auto ra = enumerate_params(a, ga), rb = enumerate_params(b, gb);
  for (std::size_t i = 0; i < ra.size(); ++i)
    for (std::size_t k = 0; k < ra[i].param.size(); ++k)
      CHECK(ra[i].param[k] == rb[i].param[k]);
#endif
}
