#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "feats/graph.hpp"
#include "feats/tensor.hpp"

namespace feats {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled penalties, applied only to parameters flagged `scaling`.
  double l1 = 0.0;
  double l2 = 0.0;
};

/// Adaptive first-order optimizer with bias-corrected moments.
///
/// Moments are bound to parameters by position: every step must pass the same
/// parameter list in the same order.
class Adam {
 public:
  explicit Adam(AdamConfig config = {});

  // Applies one update from each parameter's accumulated `grad`. Throws
  // TrainingError naming the parameter when a gradient is not finite.
  void step(std::span<Parameter* const> params);

  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace feats
