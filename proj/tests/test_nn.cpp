#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mtlcvr/adam.hpp"
#include "mtlcvr/model.hpp"
#include "mtlcvr/nn.hpp"
#include "mtlcvr/rng.hpp"
#include "oracles.hpp"

using namespace mtlcvr;

namespace {

ModelConfig tiny_config(std::uint64_t seed, std::size_t cross = 1,
                        std::size_t shared = 1) {
  ModelConfig cfg;
  cfg.schema = {{"f0", 5, 3}, {"f1", 4, 2}};
  cfg.num_cross_layers = cross;
  cfg.num_shared_dense_layers = shared;
  cfg.shared_dense_width = 4;
  cfg.tower_widths = {3, 1};
  cfg.seed = seed;
  return cfg;
}

ClickEvent event_with_features(std::vector<std::uint32_t> f,
                               bool converted = false) {
  ClickEvent e;
  e.features = std::move(f);
  e.converted = converted;
  return e;
}

// full-model scalar loss for finite differencing
double net_loss(MtlNetwork& net, const ClickEvent& e, Task task, double c,
                double w) {
  ForwardTrace trace(net.config);
  forward_event(net, e, trace);
  return w * bce_loss(c, trace.p[static_cast<int>(task)]);
}

}  // namespace

TEST_CASE("embed_concat concatenates rows in table order") {
  std::vector<EmbeddingTable> tables;
  tables.emplace_back("a", 2, 2);
  tables.emplace_back("b", 3, 3);
  tables[0].table.data = {1, 2, 3, 4};
  tables[1].table.data = {5, 6, 7, 8, 9, 10, 11, 12, 13};
  std::vector<std::size_t> idx = {0, 1};
  const auto out = embed_concat(tables, idx);
  CHECK(out == std::vector<double>{1, 2, 8, 9, 10});
}

TEST_CASE("embed_concat of an all-zero row is the zero vector") {
  std::vector<EmbeddingTable> tables;
  tables.emplace_back("a", 3, 4);
  std::vector<std::size_t> idx = {2};
  const auto out = embed_concat(tables, idx);
  CHECK(out == std::vector<double>(4, 0.0));
}

TEST_CASE("embed_concat matches the direct array-lookup oracle") {
  Rng rng(77);
  std::vector<EmbeddingTable> tables;
  std::vector<Matrix> raw;
  for (int t = 0; t < 3; ++t) {
    EmbeddingTable tab("f" + std::to_string(t), 6, 2 + t);
    init_embedding(tab, rng);
    raw.push_back(tab.table);
    tables.push_back(std::move(tab));
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> idx = {rng.uniform_int(6), rng.uniform_int(6),
                                    rng.uniform_int(6)};
    CHECK(embed_concat(tables, idx) == oracle::embed_lookup(raw, idx));
  }
}

TEST_CASE("embed_concat rejects out-of-vocabulary indices naming the feature") {
  std::vector<EmbeddingTable> tables;
  tables.emplace_back("user_segment", 4, 2);
  std::vector<std::size_t> idx = {4};
  std::vector<double> out(2);
  CHECK_THROWS_WITH_AS(embed_concat(tables, idx, out),
                       doctest::Contains("user_segment"), std::out_of_range);
}

TEST_CASE("cross_forward with zero weight and bias is the identity on xl") {
  Rng rng(5);
  CrossLayer layer(6);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> x0(6), xl(6);
    for (auto& v : x0) v = rng.normal();
    for (auto& v : xl) v = rng.normal();
    CHECK(cross_forward(layer, x0, xl) == xl);
  }
}

TEST_CASE("cross_forward hand-evaluated case") {
  CrossLayer layer(2);
  layer.weight = {1, 1};
  layer.bias = {0, 0};
  std::vector<double> x = {1, 1};
  const auto out = cross_forward(layer, x, x);
  CHECK(out[0] == doctest::Approx(3.0));
  CHECK(out[1] == doctest::Approx(3.0));
}

TEST_CASE("cross_forward additive case: zero weight adds bias to xl") {
  CrossLayer layer(3);
  layer.bias = {0.5, -1.0, 2.0};
  std::vector<double> x0 = {9, 9, 9}, xl = {1, 2, 3};
  const auto out = cross_forward(layer, x0, xl);
  CHECK(out == std::vector<double>{1.5, 1.0, 5.0});
}

TEST_CASE("cross_forward rejects mismatched dimensions") {
  CrossLayer layer(3);
  std::vector<double> x0 = {1, 2}, xl = {1, 2, 3}, out(3);
  CHECK_THROWS_AS(cross_forward(layer, x0, xl, out), std::invalid_argument);
}

TEST_CASE("dense_forward identity weight passes input through") {
  DenseLayer layer(3, 3, Activation::kIdentity);
  for (int i = 0; i < 3; ++i) layer.weight.at(i, i) = 1.0;
  std::vector<double> x = {0.5, -2.0, 7.0};
  CHECK(dense_forward(layer, x) == x);
}

TEST_CASE("dense_forward ReLU clamps negatives") {
  DenseLayer layer(2, 2, Activation::kReLU);
  layer.weight.at(0, 0) = 1.0;
  layer.weight.at(1, 1) = 1.0;
  std::vector<double> x = {-1.0, 2.0};
  CHECK(dense_forward(layer, x) == std::vector<double>{0.0, 2.0});
}

TEST_CASE("dense_forward matches the naive matvec oracle") {
  Rng rng(123);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t out_dim = 1 + rng.uniform_int(6);
    const std::size_t in_dim = 1 + rng.uniform_int(6);
    DenseLayer layer(out_dim, in_dim, Activation::kIdentity);
    init_dense(layer, rng);
    for (auto& b : layer.bias) b = rng.normal();
    std::vector<double> x(in_dim);
    for (auto& v : x) v = rng.normal();
    auto expected = oracle::matvec(layer.weight, x);
    for (std::size_t i = 0; i < out_dim; ++i) expected[i] += layer.bias[i];
    const auto got = dense_forward(layer, x);
    for (std::size_t i = 0; i < out_dim; ++i)
      CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("single identity dense layer with BCE: dL/dz equals p - c") {
  ModelConfig cfg;
  cfg.schema = {{"f0", 2, 2}};
  cfg.num_cross_layers = 0;
  cfg.num_shared_dense_layers = 0;
  cfg.tower_widths = {1};
  cfg.seed = 3;
  MtlNetwork net = MtlNetwork::init(cfg);

  ClickEvent e = event_with_features({1}, true);
  ForwardTrace trace(cfg);
  forward_event(net, e, trace);
  const double p = trace.p[static_cast<int>(Task::kHard)];

  NetGrads grads = NetGrads::zeros_like(net);
  backward_event(net, trace, Task::kHard, p - 1.0, grads);
  // bias gradient of the logit layer is exactly dL/dz
  CHECK(grads.tower_bias[static_cast<int>(Task::kHard)][0][0] ==
        doctest::Approx(p - 1.0).epsilon(1e-12));
}

TEST_CASE("zero upstream gradient produces all-zero parameter gradients") {
  ModelConfig cfg = tiny_config(11);
  MtlNetwork net = MtlNetwork::init(cfg);
  ClickEvent e = event_with_features({1, 2});
  ForwardTrace trace(cfg);
  forward_event(net, e, trace);
  NetGrads grads = NetGrads::zeros_like(net);
  backward_event(net, trace, Task::kSoft, 0.0, grads);
  NetGrads gcopy = NetGrads::zeros_like(net);
  auto refs = enumerate_params(net, grads);
  auto zero_refs = enumerate_params(net, gcopy);
  for (std::size_t i = 0; i < refs.size(); ++i)
    for (std::size_t k = 0; k < refs[i].grad.size(); ++k)
      CHECK(refs[i].grad[k] == zero_refs[i].grad[k]);
}

TEST_CASE("backward without a recorded forward pass is a state error") {
  ModelConfig cfg = tiny_config(12);
  MtlNetwork net = MtlNetwork::init(cfg);
  ForwardTrace trace(cfg);
  NetGrads grads = NetGrads::zeros_like(net);
  CHECK_THROWS_AS(backward_event(net, trace, Task::kHard, 1.0, grads),
                  std::logic_error);
}

TEST_CASE("analytic gradients match central finite differences") {
  // every layer type exercised: embeddings, cross, shared dense, both towers
  Rng meta(2024);
  int configs_checked = 0;
  for (int trial = 0; trial < 110; ++trial) {
    ModelConfig cfg = tiny_config(1000 + trial, meta.uniform_int(3),
                                  meta.uniform_int(3));
    MtlNetwork net = MtlNetwork::init(cfg);
    {
      // randomize biases so no ReLU pre-activation sits exactly on the kink,
      // where central differences are invalid
      NetGrads scratch = NetGrads::zeros_like(net);
      for (auto& ref : enumerate_params(net, scratch))
        if (ref.name.find("/bias") != std::string::npos)
          for (double& b : ref.param) b = meta.uniform(-0.3, 0.3);
    }
    const Task task = meta.bernoulli(0.5) ? Task::kHard : Task::kSoft;
    const double c = meta.bernoulli(0.5) ? 1.0 : 0.0;
    ClickEvent e = event_with_features(
        {static_cast<std::uint32_t>(meta.uniform_int(5)),
         static_cast<std::uint32_t>(meta.uniform_int(4))},
        c > 0.5);

    ForwardTrace trace(cfg);
    forward_event(net, e, trace);
    NetGrads grads = NetGrads::zeros_like(net);
    backward_event(net, trace, task,
                   trace.p[static_cast<int>(task)] - c, grads);

    auto refs = enumerate_params(net, grads);
    const double h = 1e-5;
    bool all_ok = true;
    for (auto& ref : refs) {
      // probe a handful of coordinates per tensor to keep the suite fast
      const std::size_t stride = std::max<std::size_t>(1, ref.param.size() / 4);
      for (std::size_t i = 0; i < ref.param.size(); i += stride) {
        const double saved = ref.param[i];
        ref.param[i] = saved + h;
        const double up = net_loss(net, e, task, c, 1.0);
        ref.param[i] = saved - h;
        const double down = net_loss(net, e, task, c, 1.0);
        ref.param[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double rel = std::abs(ref.grad[i] - fd) /
                           std::max(1.0, std::abs(ref.grad[i]));
        if (rel >= 1e-4) {
          all_ok = false;
          MESSAGE("gradient mismatch in " << ref.name << "[" << i
                                          << "]: analytic " << ref.grad[i]
                                          << " fd " << fd);
        }
      }
    }
    CHECK(all_ok);
    ++configs_checked;
  }
  CHECK(configs_checked >= 100);
}

TEST_CASE("forward and backward stay finite on finite inputs") {
  Rng rng(9);
  ModelConfig cfg = tiny_config(99, 2, 2);
  MtlNetwork net = MtlNetwork::init(cfg);
  NetGrads grads = NetGrads::zeros_like(net);
  ForwardTrace trace(cfg);
  for (int trial = 0; trial < 50; ++trial) {
    ClickEvent e = event_with_features(
        {static_cast<std::uint32_t>(rng.uniform_int(5)),
         static_cast<std::uint32_t>(rng.uniform_int(4))});
    forward_event(net, e, trace);
    CHECK(std::isfinite(trace.p[0]));
    CHECK(std::isfinite(trace.p[1]));
    backward_event(net, trace, Task::kHard, trace.p[0] - 1.0, grads);
  }
  auto refs = enumerate_params(net, grads);
  for (auto& ref : refs)
    CHECK(all_finite(ref.grad));
}

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
  std::vector<double> params = {1.0, -2.0, 3.0};
  std::vector<double> grads = {0.0, 0.0, 0.0};
  AdamState adam(AdamConfig{});
  std::vector<ParamGradRef> refs = {{"p", params, grads}};
  adam.step(refs);
  adam.step(refs);
  CHECK(params == std::vector<double>{1.0, -2.0, 3.0});
  CHECK(adam.step_count() == 2);
}

TEST_CASE("adam first step with unit gradient moves by about -lr") {
  std::vector<double> params = {0.0};
  std::vector<double> grads = {1.0};
  const double lr = 1e-3;
  AdamState adam(AdamConfig{lr, 0.9, 0.999, 1e-8});
  std::vector<ParamGradRef> refs = {{"p", params, grads}};
  adam.step(refs);
  // bias-corrected mhat = 1, vhat = 1 -> delta = -lr / (1 + eps)
  CHECK(params[0] == doctest::Approx(-lr).epsilon(1e-6));
}

TEST_CASE("adam treats identical parameters identically") {
  std::vector<double> pa = {0.7}, pb = {0.7};
  std::vector<double> g = {0.3};
  AdamState adam(AdamConfig{});
  std::vector<ParamGradRef> refs = {{"a", pa, g}, {"b", pb, g}};
  for (int i = 0; i < 10; ++i) adam.step(refs);
  CHECK(pa[0] == pb[0]);
}

TEST_CASE("adam rejects non-finite gradients naming the tensor") {
  std::vector<double> params = {0.0};
  std::vector<double> grads = {std::nan("")};
  AdamState adam(AdamConfig{});
  std::vector<ParamGradRef> refs = {{"tower_hard.dense0/weight", params, grads}};
  CHECK_THROWS_WITH_AS(adam.step(refs),
                       doctest::Contains("tower_hard.dense0/weight"),
                       std::runtime_error);
}

TEST_CASE("identical seed and op sequence give bit-identical networks") {
  ModelConfig cfg = tiny_config(42, 2, 2);
  MtlNetwork a = MtlNetwork::init(cfg);
  MtlNetwork b = MtlNetwork::init(cfg);
  NetGrads ga = NetGrads::zeros_like(a), gb = NetGrads::zeros_like(b);
  auto ra = enumerate_params(a, ga), rb = enumerate_params(b, gb);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    REQUIRE(ra[i].param.size() == rb[i].param.size());
    for (std::size_t k = 0; k < ra[i].param.size(); ++k)
      CHECK(ra[i].param[k] == rb[i].param[k]);
  }
}
