#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtlcvr {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One named parameter tensor paired with its gradient, both flattened.
struct ParamGradRef {
  std::string name;
  std::span<double> param;
  std::span<const double> grad;
};

// Bias-corrected Adam over a fixed enumeration of tensors. Moment buffers are
// allocated on the first step and must see the same shapes ever after.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

  void step(std::span<const ParamGradRef> tensors) {
    if (m_.empty()) {
      m_.resize(tensors.size());
      v_.resize(tensors.size());
      for (std::size_t i = 0; i < tensors.size(); ++i) {
        m_[i].assign(tensors[i].param.size(), 0.0);
        v_[i].assign(tensors[i].param.size(), 0.0);
      }
    }
    if (m_.size() != tensors.size())
      throw std::invalid_argument("adam: tensor count changed");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      auto& ref = tensors[t];
      if (ref.param.size() != m_[t].size())
        throw std::invalid_argument("adam: shape changed for " + ref.name);
      for (std::size_t i = 0; i < ref.param.size(); ++i) {
        const double g = ref.grad[i];
        if (!std::isfinite(g))
          throw std::runtime_error("adam: non-finite gradient in " + ref.name);
        m_[t][i] = cfg_.beta1 * m_[t][i] + (1.0 - cfg_.beta1) * g;
        v_[t][i] = cfg_.beta2 * v_[t][i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[t][i] / bc1;
        const double vhat = v_[t][i] / bc2;
        ref.param[i] -= cfg_.learning_rate * mhat /
                        (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
  }

  std::int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace mtlcvr
