#pragma once

// Attention building blocks: ReLU subnets, softmax attention over positions,
// convolutional attention over sliding windows, the stacked feature head with
// its additive attribution weights, the sigmoid feature-attention layer and
// the one-input ridge subnets used for static covariates.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "feats/graph.hpp"
#include "feats/rng.hpp"
#include "feats/tensor.hpp"

namespace feats::nn {

/// Feed-forward ReLU network producing pre-activation scores.
///
/// `widths` lists every layer size including input and output, e.g. {14, 10, 10, 14}.
/// Hidden layers use ReLU, the output layer is linear. Weights are drawn
/// uniformly from +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
class Subnet {
 public:
  Subnet() = default;
  Subnet(std::string name, std::vector<std::size_t> widths, CounterRng& rng);

  Var forward(Graph& graph, Var x);
  // Eager evaluation on a [rows x input] tensor.
  Tensor evaluate(const Tensor& x) const;

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t input_size() const { return widths_.front(); }
  std::size_t output_size() const { return widths_.back(); }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<Parameter>& weights() { return weights_; }
  std::vector<Parameter>& biases() { return biases_; }

 private:
  std::vector<std::size_t> widths_;
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
};

// Trainable signed multipliers, one per gated position; flagged for L1/L2.
Parameter make_scaling(std::string name, std::size_t length, double init = 1.0);

struct AttentionTrace {
  Var feature;    // [B x 1]
  Var attention;  // softmax weights A, [B x L]
  Var weights;    // A * s, [B x L]
};

/// Single-series attention layer: feature = sum_k softmax(subnet(x))_k * s_k * x_k.
class AttentionLayer {
 public:
  AttentionLayer() = default;
  AttentionLayer(std::string name, std::size_t length, std::vector<std::size_t> hidden, CounterRng& rng);

  AttentionTrace forward(Graph& graph, Var x);

  std::size_t length() const { return subnet_.input_size(); }
  Subnet& subnet() { return subnet_; }
  const Subnet& subnet() const { return subnet_; }
  Parameter& scaling() { return scaling_; }
  const Parameter& scaling() const { return scaling_; }
  std::vector<Parameter*> parameters();

 private:
  Subnet subnet_;
  Parameter scaling_;
};

struct ConvTrace {
  Var features;   // intermediate features xi, [B x L]
  Var patches;    // zero-padded windows, [(B*L) x (m*(2tau+1))]
  Var attention;  // kernel softmax A1 over each window, same shape as patches
  Var weights;    // A1 * s1, same shape as patches
};

/// Convolutional attention layer: a shared kernel subnet scores each zero-padded
/// window of half-width tau jointly over all m*(2tau+1) cells, and
/// xi_k = sum_{j,l} A1_{j,l}(window_k) * s1_{j,l} * x_{j,k+l}.
class ConvAttention {
 public:
  ConvAttention() = default;
  ConvAttention(std::string name, std::size_t series, std::size_t length, std::size_t tau,
                std::vector<std::size_t> hidden, CounterRng& rng);

  ConvTrace forward(Graph& graph, Var x);

  std::size_t series() const { return series_; }
  std::size_t length() const { return length_; }
  std::size_t tau() const { return tau_; }
  std::size_t window_width() const { return 2 * tau_ + 1; }
  Subnet& kernel() { return kernel_; }
  const Subnet& kernel() const { return kernel_; }
  Parameter& scaling() { return scaling_; }
  const Parameter& scaling() const { return scaling_; }
  std::vector<Parameter*> parameters();

 private:
  std::size_t series_ = 0;
  std::size_t length_ = 0;
  std::size_t tau_ = 0;
  Subnet kernel_;
  Parameter scaling_;
};

struct HeadConfig {
  std::size_t tau = 0;
  std::vector<std::size_t> kernel_hidden{10, 10};
  std::vector<std::size_t> time_hidden{10, 10};
  // 0-based series indices; empty attends every series.
  std::vector<std::size_t> series_subset;
  // Inclusive [first, last] time indices; empty attends the whole series.
  std::optional<std::pair<std::size_t, std::size_t>> time_window;

  friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

struct HeadTrace {
  Var feature;  // [B x 1]
  ConvTrace conv;
  AttentionTrace time;
};

/// Feature-engineering head: convolutional attention followed by time attention
/// over the intermediate features. The head sees only its configured series
/// subset and time window of the full m x (T+1) panel.
class FeatureHead {
 public:
  FeatureHead() = default;
  FeatureHead(std::string name, std::size_t series, std::size_t time_points, HeadConfig config, CounterRng& rng);

  // x: [B x (series * time_points)] full panel rows.
  HeadTrace forward(Graph& graph, Var x);

  // Flattened weights W[j, k] for sample `row` of a forward trace, laid out as
  // [series x time_points] of the full panel (zeros outside the head's view), so
  // that feature = sum_{j,k} W[j,k] * x[j,k].
  Tensor attribution(const HeadTrace& trace, std::size_t row) const;

  const HeadConfig& config() const { return config_; }
  std::size_t series() const { return series_; }
  std::size_t time_points() const { return time_points_; }
  std::size_t local_series() const { return conv_.series(); }
  std::size_t local_length() const { return conv_.length(); }
  ConvAttention& conv() { return conv_; }
  const ConvAttention& conv() const { return conv_; }
  AttentionLayer& time() { return time_; }
  const AttentionLayer& time() const { return time_; }
  std::vector<Parameter*> parameters();

 private:
  std::vector<std::size_t> subset() const;
  std::pair<std::size_t, std::size_t> window() const;

  HeadConfig config_;
  std::size_t series_ = 0;
  std::size_t time_points_ = 0;
  ConvAttention conv_;
  AttentionLayer time_;
  std::vector<std::ptrdiff_t> view_columns_;  // empty when the head sees the full panel
};

struct FeatureAttentionTrace {
  Var output;  // [B x 1]
  Var gates;   // sigmoid gates, [B x n]
};

/// Sigmoid-gated feature combination: y = sum_j sigmoid(e_j(O)) * s_j * O_j + bias.
/// Gates are independent and do not sum to one.
class FeatureAttention {
 public:
  FeatureAttention() = default;
  FeatureAttention(std::string name, std::size_t inputs, std::vector<std::size_t> hidden, CounterRng& rng);

  FeatureAttentionTrace forward(Graph& graph, Var o);

  std::size_t inputs() const { return subnet_.input_size(); }
  Subnet& subnet() { return subnet_; }
  const Subnet& subnet() const { return subnet_; }
  Parameter& scaling() { return scaling_; }
  const Parameter& scaling() const { return scaling_; }
  Parameter& bias() { return bias_; }
  const Parameter& bias() const { return bias_; }
  std::vector<Parameter*> parameters();

 private:
  Subnet subnet_;
  Parameter scaling_;
  Parameter bias_;
};

/// GAM-net ridge function g(z): a one-input, one-output ReLU subnet.
class RidgeNet {
 public:
  RidgeNet() = default;
  RidgeNet(std::string name, std::vector<std::size_t> hidden, CounterRng& rng);

  // z: [B x 1]
  Var forward(Graph& graph, Var z);
  std::vector<double> evaluate(std::span<const double> grid) const;

  Subnet& subnet() { return subnet_; }
  const Subnet& subnet() const { return subnet_; }
  std::vector<Parameter*> parameters() { return subnet_.parameters(); }

 private:
  Subnet subnet_;
};

}  // namespace feats::nn
