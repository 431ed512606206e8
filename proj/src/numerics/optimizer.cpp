#include "feats/optimizer.hpp"

#include <cmath>
#include <string>

#include "feats/errors.hpp"

namespace feats {

Adam::Adam(AdamConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 || config_.beta2 >= 1.0)
    throw ConfigError("moment decay rates must lie in [0, 1)");
  if (config_.l1 < 0.0 || config_.l2 < 0.0) throw ConfigError("penalties must be non-negative");
}

void Adam::step(std::span<Parameter* const> params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.shape(), 0.0);
      v_.emplace_back(p->value.shape(), 0.0);
    }
  }
  if (m_.size() != params.size())
    throw ConfigError("optimizer was bound to " + std::to_string(m_.size()) + " parameters, got " +
                      std::to_string(params.size()));

  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (p.grad.shape() != p.value.shape() || m_[i].shape() != p.value.shape())
      throw DimensionError("gradient of '" + p.name + "' has shape " + to_string(p.grad.shape()) + ", parameter is " +
                           to_string(p.value.shape()));
    if (!p.grad.all_finite()) throw TrainingError("non-finite gradient in parameter '" + p.name + "'");
  }

  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const double lr = config_.learning_rate;

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    double* w = p.value.raw();
    const double* g = p.grad.raw();
    double* m = m_[i].raw();
    double* v = v_[i].raw();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon);
    }
    if (p.scaling && (config_.l1 > 0.0 || config_.l2 > 0.0)) {
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double sign = static_cast<double>((w[j] > 0.0) - (w[j] < 0.0));
        w[j] -= lr * (config_.l1 * sign + config_.l2 * w[j]);
      }
    }
  }
}

}  // namespace feats
