#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtlcvr/matrix.hpp"
#include "mtlcvr/rng.hpp"

namespace mtlcvr {

enum class Activation { kReLU, kIdentity, kSigmoid };

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

// out = activation(W x + b)
struct DenseLayer {
  Matrix weight;             // [out x in]
  std::vector<double> bias;  // [out]
  Activation act = Activation::kReLU;

  DenseLayer() = default;
  DenseLayer(std::size_t out, std::size_t in, Activation a)
      : weight(out, in), bias(out, 0.0), act(a) {}

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }
};

// Deep & Cross v1 layer: out = x0 * (w . xl) + b + xl
struct CrossLayer {
  std::vector<double> weight;
  std::vector<double> bias;

  CrossLayer() = default;
  explicit CrossLayer(std::size_t d) : weight(d, 0.0), bias(d, 0.0) {}

  std::size_t dim() const { return weight.size(); }
};

struct EmbeddingTable {
  std::string feature_name;
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  Matrix table;  // [vocab x dim]

  EmbeddingTable() = default;
  EmbeddingTable(std::string name, std::size_t vocab, std::size_t d)
      : feature_name(std::move(name)), vocab_size(vocab), dim(d),
        table(vocab, d) {}
};

inline double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::kReLU: return z > 0.0 ? z : 0.0;
    case Activation::kIdentity: return z;
    case Activation::kSigmoid: return sigmoid(z);
  }
  return z;
}

// derivative w.r.t. pre-activation, given z and act(z)
inline double activation_grad(Activation a, double z, double out) {
  switch (a) {
    case Activation::kReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity: return 1.0;
    case Activation::kSigmoid: return out * (1.0 - out);
  }
  return 1.0;
}

// pre = W x + b; out = act(pre). pre and out may alias distinct buffers only.
inline void dense_forward(const DenseLayer& layer, std::span<const double> x,
                          std::span<double> pre, std::span<double> out) {
  check_shape(x.size() == layer.in_dim(), "dense_forward input");
  check_shape(pre.size() == layer.out_dim() && out.size() == layer.out_dim(),
              "dense_forward output");
  matvec(layer.weight, x, pre);
  for (std::size_t i = 0; i < pre.size(); ++i) {
    pre[i] += layer.bias[i];
    out[i] = apply_activation(layer.act, pre[i]);
  }
}

inline std::vector<double> dense_forward(const DenseLayer& layer,
                                         std::span<const double> x) {
  std::vector<double> pre(layer.out_dim()), out(layer.out_dim());
  dense_forward(layer, x, pre, out);
  return out;
}

// Backward through a dense layer. d_out is dL/d(out); fills dL/dW, dL/db
// (accumulated) and dL/dx (overwritten).
inline void dense_backward(const DenseLayer& layer, std::span<const double> x,
                           std::span<const double> pre,
                           std::span<const double> out,
                           std::span<const double> d_out, Matrix& d_weight,
                           std::span<double> d_bias, std::span<double> d_x) {
  const std::size_t n_out = layer.out_dim();
  const std::size_t n_in = layer.in_dim();
  check_shape(d_weight.rows == n_out && d_weight.cols == n_in,
              "dense_backward d_weight");
  for (std::size_t j = 0; j < n_in; ++j) d_x[j] = 0.0;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double dz = d_out[i] * activation_grad(layer.act, pre[i], out[i]);
    d_bias[i] += dz;
    double* dwrow = d_weight.data.data() + i * n_in;
    const double* wrow = layer.weight.data.data() + i * n_in;
    for (std::size_t j = 0; j < n_in; ++j) {
      dwrow[j] += dz * x[j];
      d_x[j] += dz * wrow[j];
    }
  }
}

inline void cross_forward(const CrossLayer& layer, std::span<const double> x0,
                          std::span<const double> xl, std::span<double> out) {
  const std::size_t d = layer.dim();
  check_shape(x0.size() == d && xl.size() == d && out.size() == d,
              "cross_forward");
  const double s = dot(std::span<const double>(layer.weight), xl);
  for (std::size_t i = 0; i < d; ++i)
    out[i] = x0[i] * s + layer.bias[i] + xl[i];
}

inline std::vector<double> cross_forward(const CrossLayer& layer,
                                         std::span<const double> x0,
                                         std::span<const double> xl) {
  std::vector<double> out(layer.dim());
  cross_forward(layer, x0, xl, out);
  return out;
}

// Backward through a cross layer. Accumulates dL/dw, dL/db and dL/dx0;
// overwrites dL/dxl.
inline void cross_backward(const CrossLayer& layer, std::span<const double> x0,
                           std::span<const double> xl,
                           std::span<const double> d_out,
                           std::span<double> d_weight, std::span<double> d_bias,
                           std::span<double> d_x0, std::span<double> d_xl) {
  const std::size_t d = layer.dim();
  const double s = dot(std::span<const double>(layer.weight), xl);
  const double g_dot_x0 = dot(d_out, x0);
  for (std::size_t i = 0; i < d; ++i) {
    d_weight[i] += g_dot_x0 * xl[i];
    d_bias[i] += d_out[i];
    d_x0[i] += d_out[i] * s;
    d_xl[i] = d_out[i] + g_dot_x0 * layer.weight[i];
  }
}

// Concatenation of one embedding row per table.
inline void embed_concat(std::span<const EmbeddingTable> tables,
                         std::span<const std::size_t> indices,
                         std::span<double> out) {
  check_shape(tables.size() == indices.size(), "embed_concat arity");
  std::size_t off = 0;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const EmbeddingTable& tab = tables[t];
    if (indices[t] >= tab.vocab_size)
      throw std::out_of_range("embedding index " + std::to_string(indices[t]) +
                              " out of vocabulary for feature '" +
                              tab.feature_name + "' (vocab " +
                              std::to_string(tab.vocab_size) + ")");
    const auto row = tab.table.row(indices[t]);
    for (std::size_t i = 0; i < tab.dim; ++i) out[off + i] = row[i];
    off += tab.dim;
  }
  check_shape(off == out.size(), "embed_concat width");
}

inline std::vector<double> embed_concat(
    std::span<const EmbeddingTable> tables,
    std::span<const std::size_t> indices) {
  std::size_t width = 0;
  for (const auto& t : tables) width += t.dim;
  std::vector<double> out(width);
  embed_concat(tables, indices, out);
  return out;
}

// He-uniform for dense weights, biases zero.
inline void init_dense(DenseLayer& layer, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(layer.in_dim()));
  for (double& w : layer.weight.data) w = rng.uniform(-limit, limit);
  for (double& b : layer.bias) b = 0.0;
}

inline void init_cross(CrossLayer& layer, Rng& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(layer.dim()));
  for (double& w : layer.weight) w = rng.uniform(-limit, limit);
  for (double& b : layer.bias) b = 0.0;
}

inline void init_embedding(EmbeddingTable& table, Rng& rng) {
  for (double& v : table.table.data) v = rng.uniform(-0.05, 0.05);
}

}  // namespace mtlcvr
