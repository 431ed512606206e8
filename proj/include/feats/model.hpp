#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feats/dataset.hpp"
#include "feats/graph.hpp"
#include "feats/layers.hpp"
#include "feats/tensor.hpp"

namespace feats {

enum class Task { Regression, Binary, Multiclass };
enum class DownstreamKind { Linear, Logistic, Softmax, FeatureAttention };

const char* to_string(Task task);
const char* to_string(DownstreamKind kind);
Task task_from_string(const std::string& s);
DownstreamKind downstream_from_string(const std::string& s);
Task task_for(TargetKind kind);

// L1/L2 coefficients on the attention scaling coefficients.
struct Penalty {
  double l1 = 0.0;
  double l2 = 0.0;
  friend bool operator==(const Penalty&, const Penalty&) = default;
};

/// Per-variable affine standardisation fitted on training data: one mean/scale
/// per series (pooled over samples and times) and per static covariate.
struct Standardizer {
  std::vector<double> series_mean;
  std::vector<double> series_scale;
  std::vector<double> covariate_mean;
  std::vector<double> covariate_scale;

  static Standardizer identity(std::size_t series, std::size_t covariates);
  static Standardizer fit(const PanelDataset& data);

  double transform_series(std::size_t j, double v) const { return (v - series_mean[j]) / series_scale[j]; }
  double transform_covariate(std::size_t c, double v) const { return (v - covariate_mean[c]) / covariate_scale[c]; }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Model-ready slice of a dataset.
struct Batch {
  Tensor x;        // [B x (m * (T+1))], standardised
  Tensor z;        // [B x p], standardised; empty when p = 0
  Tensor targets;  // [B]
  std::vector<std::int64_t> labels;
  Tensor weights;  // [B]

  std::size_t rows() const { return x.rows(); }
};

Batch make_batch(const PanelDataset& data, std::span<const std::size_t> rows, const Standardizer& standardizer);

/// Anything the training loop can fit.
class Network {
 public:
  virtual ~Network() = default;

  // Raw outputs: [B x 1] (value or logit) or [B x K] class logits.
  virtual Var forward(Graph& graph, const Batch& batch) = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual Task task() const = 0;
  virtual std::size_t num_outputs() const = 0;
  virtual Penalty penalty() const { return {}; }

  // Fits the standardiser on the training split and sets data-dependent output biases.
  virtual void prepare(const PanelDataset& train);

  const Standardizer& standardizer() const { return standardizer_; }
  void set_standardizer(Standardizer s) { standardizer_ = std::move(s); }
  bool standardize() const { return standardize_; }
  bool prepared() const { return prepared_; }
  void mark_prepared() { prepared_ = true; }
  std::size_t parameter_count();

 protected:
  // Bias of the output layer, initialised from the training targets by prepare().
  virtual Parameter* output_bias() { return nullptr; }

  Standardizer standardizer_;
  bool standardize_ = true;
  bool prepared_ = false;
};

// Weighted data loss for the task: MSE, binary cross-entropy on logits, or
// categorical cross-entropy on logits.
Var data_loss(Var outputs, const Batch& batch, Task task);
// l1 * sum|s| + l2 * sum s^2 over parameters flagged `scaling`.
Var penalty_term(Graph& graph, std::span<Parameter* const> params, Penalty penalty);
Var total_loss(Network& net, Graph& graph, Var outputs, const Batch& batch);

// Maps raw outputs to predictions: values, P(y = 1), or class probabilities [B x K].
Tensor outputs_to_predictions(const Tensor& outputs, Task task);
Tensor predict(Network& net, const PanelDataset& data, std::size_t batch_size = 1024);

struct FeatsConfig {
  std::size_t series = 0;
  std::size_t time_points = 0;
  std::size_t covariates = 0;
  Task task = Task::Regression;
  std::size_t num_classes = 2;
  std::vector<nn::HeadConfig> heads;
  DownstreamKind downstream = DownstreamKind::Linear;
  std::vector<std::size_t> ridge_hidden{10, 10};
  std::vector<std::size_t> feature_attention_hidden{10, 10};
  Penalty penalty;
  bool standardize = true;
  std::uint64_t seed = 0;

  // Throws ConfigError on any inconsistency (downstream vs task, empty heads, bad tau...).
  void validate() const;
  std::size_t downstream_inputs() const { return heads.size() + covariates; }
};

struct ForwardResult {
  Tensor prediction;  // [B] or [B x K]
  Tensor features;    // head features f_i(X), [B x heads]
  Tensor ridges;      // g_j(z_j), [B x p]; empty when p = 0
  Tensor gates;       // feature-attention gates [B x (p + heads)]; empty otherwise
};

/// The multi-head feature engineering machine: heads over the time-series
/// panel, one ridge subnet per static covariate, and a downstream model over
/// O = (g_1(z_1), ..., g_p(z_p), f_1(X), ..., f_h(X)).
class FeatsModel : public Network {
 public:
  struct Trace {
    Var output;
    Var downstream_inputs;  // O, [B x (p + heads)]
    std::vector<nn::HeadTrace> heads;
    std::vector<Var> ridges;
    std::optional<nn::FeatureAttentionTrace> attention;
  };

  explicit FeatsModel(FeatsConfig config);

  Var forward(Graph& graph, const Batch& batch) override { return trace(graph, batch).output; }
  Trace trace(Graph& graph, const Batch& batch);
  ForwardResult evaluate(const Batch& batch);

  std::vector<Parameter*> parameters() override;
  Task task() const override { return config_.task; }
  std::size_t num_outputs() const override;
  Penalty penalty() const override { return config_.penalty; }

  const FeatsConfig& config() const { return config_; }
  std::vector<nn::FeatureHead>& heads() { return heads_; }
  const std::vector<nn::FeatureHead>& heads() const { return heads_; }
  std::vector<nn::RidgeNet>& ridges() { return ridges_; }
  const std::vector<nn::RidgeNet>& ridges() const { return ridges_; }
  // Linear/logistic/softmax downstream: weight [inputs x outputs] and bias [outputs].
  Parameter& linear_weight() { return linear_weight_; }
  Parameter& linear_bias() { return linear_bias_; }
  const Parameter& linear_weight() const { return linear_weight_; }
  const Parameter& linear_bias() const { return linear_bias_; }
  nn::FeatureAttention& feature_attention() { return feature_attention_; }
  const nn::FeatureAttention& feature_attention() const { return feature_attention_; }

  // Ridge g_j evaluated on raw (unstandardised) covariate values.
  std::vector<double> ridge_curve(std::size_t covariate, std::span<const double> raw_grid) const;


 protected:
  Parameter* output_bias() override;

 private:
  FeatsConfig config_;
  std::vector<nn::FeatureHead> heads_;
  std::vector<nn::RidgeNet> ridges_;
  Parameter linear_weight_;
  Parameter linear_bias_;
  nn::FeatureAttention feature_attention_;
};

struct FfnnConfig {
  std::size_t series = 0;
  std::size_t time_points = 0;
  std::size_t covariates = 0;
  Task task = Task::Regression;
  std::size_t num_classes = 2;
  std::vector<std::size_t> hidden{40, 40};
  bool standardize = true;
  std::uint64_t seed = 0;
};

/// Plain ReLU MLP on the flattened panel plus covariates; the comparison baseline.
class FfnnModel : public Network {
 public:
  explicit FfnnModel(FfnnConfig config);

  Var forward(Graph& graph, const Batch& batch) override;
  std::vector<Parameter*> parameters() override { return net_.parameters(); }
  Task task() const override { return config_.task; }
  std::size_t num_outputs() const override;
  const FfnnConfig& config() const { return config_; }
  nn::Subnet& net() { return net_; }
  const nn::Subnet& net() const { return net_; }

 protected:
  Parameter* output_bias() override { return &net_.biases().back(); }

 private:
  FfnnConfig config_;
  nn::Subnet net_;
};

}  // namespace feats
