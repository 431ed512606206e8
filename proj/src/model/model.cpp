#include "feats/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feats/errors.hpp"
#include "feats/ops.hpp"
#include "feats/rng.hpp"

namespace feats {

const char* to_string(Task task) {
  switch (task) {
    case Task::Regression: return "regression";
    case Task::Binary: return "binary";
    case Task::Multiclass: return "multiclass";
  }
  return "?";
}

const char* to_string(DownstreamKind kind) {
  switch (kind) {
    case DownstreamKind::Linear: return "linear";
    case DownstreamKind::Logistic: return "logistic";
    case DownstreamKind::Softmax: return "softmax";
    case DownstreamKind::FeatureAttention: return "feature_attention";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "regression" || s == "continuous") return Task::Regression;
  if (s == "binary") return Task::Binary;
  if (s == "multiclass") return Task::Multiclass;
  throw ConfigError("unknown task '" + s + "'");
}

DownstreamKind downstream_from_string(const std::string& s) {
  if (s == "linear") return DownstreamKind::Linear;
  if (s == "logistic") return DownstreamKind::Logistic;
  if (s == "softmax") return DownstreamKind::Softmax;
  if (s == "feature_attention") return DownstreamKind::FeatureAttention;
  throw ConfigError("unknown downstream model '" + s + "'");
}

Task task_for(TargetKind kind) {
  switch (kind) {
    case TargetKind::Continuous: return Task::Regression;
    case TargetKind::Binary: return Task::Binary;
    case TargetKind::Multiclass: return Task::Multiclass;
  }
  return Task::Regression;
}

Standardizer Standardizer::identity(std::size_t series, std::size_t covariates) {
  Standardizer s;
  s.series_mean.assign(series, 0.0);
  s.series_scale.assign(series, 1.0);
  s.covariate_mean.assign(covariates, 0.0);
  s.covariate_scale.assign(covariates, 1.0);
  return s;
}

namespace {
// Two-pass mean / population sd; a degenerate column keeps scale 1.
std::pair<double, double> mean_scale(std::span<const double> values) {
  if (values.empty()) return {0.0, 1.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size()));
  return {mean, sd > 1e-12 ? sd : 1.0};
}
}  // namespace

Standardizer Standardizer::fit(const PanelDataset& data) {
  Standardizer s;
  std::vector<double> column;
  for (std::size_t j = 0; j < data.series; ++j) {
    column.clear();
    for (std::size_t i = 0; i < data.n; ++i)
      for (std::size_t k = 0; k < data.time_points; ++k) column.push_back(data.x_at(i, j, k));
    auto [m, sd] = mean_scale(column);
    s.series_mean.push_back(m);
    s.series_scale.push_back(sd);
  }
  for (std::size_t c = 0; c < data.covariates; ++c) {
    column.clear();
    for (std::size_t i = 0; i < data.n; ++i) column.push_back(data.z[i * data.covariates + c]);
    auto [m, sd] = mean_scale(column);
    s.covariate_mean.push_back(m);
    s.covariate_scale.push_back(sd);
  }
  return s;
}

Batch make_batch(const PanelDataset& data, std::span<const std::size_t> rows, const Standardizer& standardizer) {
  if (rows.empty()) throw DataError("empty batch");
  if (standardizer.series_mean.size() != data.series || standardizer.covariate_mean.size() != data.covariates)
    throw DimensionError("standardiser fitted for " + std::to_string(standardizer.series_mean.size()) + " series / " +
                         std::to_string(standardizer.covariate_mean.size()) + " covariates, data has " +
                         std::to_string(data.series) + " / " + std::to_string(data.covariates));
  const std::size_t b = rows.size(), width = data.series * data.time_points;
  Batch batch;
  batch.x = Tensor({b, width});
  if (data.covariates) batch.z = Tensor({b, data.covariates});
  batch.targets = Tensor({b});
  batch.weights = Tensor({b});
  batch.labels.resize(b);
  for (std::size_t r = 0; r < b; ++r) {
    const std::size_t i = rows[r];
    if (i >= data.n) throw DataError("batch row " + std::to_string(i) + " outside dataset");
    double* dst = batch.x.raw() + r * width;
    for (std::size_t j = 0; j < data.series; ++j)
      for (std::size_t k = 0; k < data.time_points; ++k)
        dst[j * data.time_points + k] = standardizer.transform_series(j, data.x_at(i, j, k));
    for (std::size_t c = 0; c < data.covariates; ++c)
      batch.z[r * data.covariates + c] = standardizer.transform_covariate(c, data.z[i * data.covariates + c]);
    batch.targets[r] = data.y[i];
    batch.weights[r] = data.weights.empty() ? 1.0 : data.weights[i];
    batch.labels[r] = data.target_kind == TargetKind::Multiclass ? static_cast<std::int64_t>(data.y[i]) : 0;
  }
  return batch;
}

void Network::prepare(const PanelDataset& train) {
  train.validate();
  standardizer_ = standardize_ ? Standardizer::fit(train) : Standardizer::identity(train.series, train.covariates);

  Parameter* bias = output_bias();
  if (bias) {
    double wsum = 0.0;
    for (std::size_t i = 0; i < train.n; ++i) wsum += train.weights[i];
    if (task() == Task::Regression || task() == Task::Binary) {
      double mean = 0.0;
      for (std::size_t i = 0; i < train.n; ++i) mean += train.weights[i] * train.y[i];
      mean /= wsum;
      if (task() == Task::Binary) {
        const double p = std::clamp(mean, 1e-6, 1.0 - 1e-6);
        mean = std::log(p / (1.0 - p));
      }
      bias->value.fill(mean);
    } else {
      const std::size_t k = bias->value.size();
      std::vector<double> freq(k, 0.0);
      for (std::size_t i = 0; i < train.n; ++i) freq[static_cast<std::size_t>(train.y[i])] += train.weights[i];
      double mean_log = 0.0;
      for (auto& f : freq) {
        f = std::log(std::max(f / wsum, 1e-6));
        mean_log += f / static_cast<double>(k);
      }
      for (std::size_t c = 0; c < k; ++c) bias->value[c] = freq[c] - mean_log;
    }
  }
  prepared_ = true;
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

Var data_loss(Var outputs, const Batch& batch, Task task) {
  switch (task) {
    case Task::Regression: return mse_loss(outputs, batch.targets, batch.weights);
    case Task::Binary: return bce_with_logits_loss(outputs, batch.targets, batch.weights);
    case Task::Multiclass: return softmax_cross_entropy_loss(outputs, batch.labels, batch.weights);
  }
  throw ConfigError("unknown task");
}

Var penalty_term(Graph& graph, std::span<Parameter* const> params, Penalty penalty) {
  Var total = graph.constant(Tensor::scalar(0.0));
  if (penalty.l1 == 0.0 && penalty.l2 == 0.0) return total;
  for (Parameter* p : params) {
    if (!p->scaling) continue;
    Var v = graph.parameter(*p);
    if (penalty.l1 != 0.0) total = add(total, scale(abs_sum(v), penalty.l1));
    if (penalty.l2 != 0.0) total = add(total, scale(square_sum(v), penalty.l2));
  }
  return total;
}

Var total_loss(Network& net, Graph& graph, Var outputs, const Batch& batch) {
  Var loss = data_loss(outputs, batch, net.task());
  const Penalty pen = net.penalty();
  if (pen.l1 == 0.0 && pen.l2 == 0.0) return loss;
  auto params = net.parameters();
  return add(loss, penalty_term(graph, params, pen));
}

Tensor outputs_to_predictions(const Tensor& outputs, Task task) {
  switch (task) {
    case Task::Regression: return outputs.reshaped({outputs.size()});
    case Task::Binary: return sigmoid(outputs.reshaped({outputs.size()}));
    case Task::Multiclass: {
      Tensor out(outputs.shape());
      const std::size_t r = outputs.rows(), c = outputs.cols();
      for (std::size_t i = 0; i < r; ++i) {
        Tensor row = softmax_stable(Tensor({c}, std::vector<double>(outputs.raw() + i * c, outputs.raw() + (i + 1) * c)));
        std::copy_n(row.raw(), c, out.raw() + i * c);
      }
      return out;
    }
  }
  throw ConfigError("unknown task");
}

Tensor predict(Network& net, const PanelDataset& data, std::size_t batch_size) {
  if (!net.prepared()) throw StateError("model has not been fitted or loaded");
  const std::size_t k = net.num_outputs();
  std::vector<double> out;
  out.reserve(data.n * k);
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.n; start += batch_size) {
    rows.clear();
    for (std::size_t i = start; i < std::min(data.n, start + batch_size); ++i) rows.push_back(i);
    Batch batch = make_batch(data, rows, net.standardizer());
    Graph graph(Graph::Mode::Inference);
    Tensor preds = outputs_to_predictions(net.forward(graph, batch).value(), net.task());
    out.insert(out.end(), preds.data().begin(), preds.data().end());
  }
  if (net.task() == Task::Multiclass) return Tensor({data.n, k}, std::move(out));
  return Tensor({data.n}, std::move(out));
}

void FeatsConfig::validate() const {
  if (series == 0 || time_points == 0) throw ConfigError("model needs a panel with at least one series and time point");
  if (heads.empty()) throw ConfigError("model needs at least one head");
  for (const auto& h : heads) {
    if (h.tau + 1 > time_points)
      throw ConfigError("tau " + std::to_string(h.tau) + " exceeds T = " + std::to_string(time_points - 1));
  }
  switch (downstream) {
    case DownstreamKind::Linear:
      if (task != Task::Regression) throw ConfigError("linear downstream is for continuous targets");
      break;
    case DownstreamKind::Logistic:
      if (task != Task::Binary) throw ConfigError("logistic downstream is for binary targets");
      break;
    case DownstreamKind::Softmax:
      if (task != Task::Multiclass) throw ConfigError("softmax downstream is for multiclass targets");
      if (num_classes < 2) throw ConfigError("softmax downstream needs >= 2 classes");
      break;
    case DownstreamKind::FeatureAttention:
      if (task == Task::Multiclass) throw ConfigError("feature attention downstream produces a single output");
      break;
  }
  if (penalty.l1 < 0.0 || penalty.l2 < 0.0) throw ConfigError("penalties must be non-negative");
}

FeatsModel::FeatsModel(FeatsConfig config) : config_(std::move(config)) {
  config_.validate();
  standardize_ = config_.standardize;
  standardizer_ = Standardizer::identity(config_.series, config_.covariates);
  CounterRng rng(config_.seed, /*stream=*/0x1A17);
  for (std::size_t h = 0; h < config_.heads.size(); ++h)
    heads_.emplace_back("head" + std::to_string(h), config_.series, config_.time_points, config_.heads[h], rng);
  for (std::size_t c = 0; c < config_.covariates; ++c)
    ridges_.emplace_back("ridge" + std::to_string(c), config_.ridge_hidden, rng);

  const std::size_t inputs = config_.downstream_inputs();
  if (config_.downstream == DownstreamKind::FeatureAttention) {
    feature_attention_ = nn::FeatureAttention("downstream", inputs, config_.feature_attention_hidden, rng);
  } else {
    const std::size_t outputs = num_outputs();
    const double limit = std::sqrt(6.0 / static_cast<double>(inputs + outputs));
    Tensor w({inputs, outputs});
    for (auto& v : w.data()) v = (2.0 * rng.uniform() - 1.0) * limit;
    linear_weight_ = Parameter("downstream.w", std::move(w));
    linear_bias_ = Parameter("downstream.b", Tensor({outputs}, 0.0));
  }
}

std::size_t FeatsModel::num_outputs() const { return config_.task == Task::Multiclass ? config_.num_classes : 1; }

Parameter* FeatsModel::output_bias() {
  return config_.downstream == DownstreamKind::FeatureAttention ? &feature_attention_.bias() : &linear_bias_;
}

FeatsModel::Trace FeatsModel::trace(Graph& graph, const Batch& batch) {
  const std::size_t width = config_.series * config_.time_points;
  if (batch.x.cols() != width)
    throw DimensionError("model expects panel rows of " + std::to_string(config_.series) + "x" +
                         std::to_string(config_.time_points) + ", got " + to_string(batch.x.shape()));
  if (config_.covariates && (batch.z.empty() || batch.z.cols() != config_.covariates || batch.z.rows() != batch.rows()))
    throw DimensionError("model expects " + std::to_string(config_.covariates) + " static covariates, got " +
                         to_string(batch.z.shape()));

  Trace t;
  Var x = graph.constant(batch.x);
  std::vector<Var> inputs;
  if (config_.covariates) {
    Var z = graph.constant(batch.z);
    for (std::size_t c = 0; c < config_.covariates; ++c) {
      Var zc = select_columns(z, {static_cast<std::ptrdiff_t>(c)});
      t.ridges.push_back(ridges_[c].forward(graph, zc));
      inputs.push_back(t.ridges.back());
    }
  }
  for (auto& head : heads_) {
    t.heads.push_back(head.forward(graph, x));
    inputs.push_back(t.heads.back().feature);
  }
  t.downstream_inputs = inputs.size() == 1 ? inputs[0] : concat_columns(inputs);

  if (config_.downstream == DownstreamKind::FeatureAttention) {
    t.attention = feature_attention_.forward(graph, t.downstream_inputs);
    t.output = t.attention->output;
  } else {
    t.output = add_bias(matmul(t.downstream_inputs, graph.parameter(linear_weight_)), graph.parameter(linear_bias_));
  }
  return t;
}

ForwardResult FeatsModel::evaluate(const Batch& batch) {
  Graph graph(Graph::Mode::Inference);
  Trace t = trace(graph, batch);
  ForwardResult r;
  r.prediction = outputs_to_predictions(t.output.value(), config_.task);
  const std::size_t b = batch.rows(), h = heads_.size(), p = config_.covariates;
  r.features = Tensor({b, h});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t row = 0; row < b; ++row) r.features[row * h + i] = t.heads[i].feature.value()[row];
  if (p) {
    r.ridges = Tensor({b, p});
    for (std::size_t c = 0; c < p; ++c)
      for (std::size_t row = 0; row < b; ++row) r.ridges[row * p + c] = t.ridges[c].value()[row];
  }
  if (t.attention) r.gates = t.attention->gates.value();
  return r;
}

std::vector<Parameter*> FeatsModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& h : heads_) {
    auto p = h.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  for (auto& r : ridges_) {
    auto p = r.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  if (config_.downstream == DownstreamKind::FeatureAttention) {
    auto p = feature_attention_.parameters();
    out.insert(out.end(), p.begin(), p.end());
  } else {
    out.push_back(&linear_weight_);
    out.push_back(&linear_bias_);
  }
  return out;
}

std::vector<double> FeatsModel::ridge_curve(std::size_t covariate, std::span<const double> raw_grid) const {
  if (covariate >= ridges_.size())
    throw ArgumentError("no ridge for covariate " + std::to_string(covariate));
  std::vector<double> z(raw_grid.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = standardizer_.transform_covariate(covariate, raw_grid[i]);
  return ridges_[covariate].evaluate(z);
}

FfnnModel::FfnnModel(FfnnConfig config) : config_(std::move(config)) {
  if (config_.series == 0 || config_.time_points == 0) throw ConfigError("FFNN needs a non-empty panel");
  standardize_ = config_.standardize;
  standardizer_ = Standardizer::identity(config_.series, config_.covariates);
  std::vector<std::size_t> widths{config_.series * config_.time_points + config_.covariates};
  widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
  widths.push_back(num_outputs());
  CounterRng rng(config_.seed, /*stream=*/0xFF22);
  net_ = nn::Subnet("ffnn", widths, rng);
}

std::size_t FfnnModel::num_outputs() const { return config_.task == Task::Multiclass ? config_.num_classes : 1; }

Var FfnnModel::forward(Graph& graph, const Batch& batch) {
  Var x = graph.constant(batch.x);
  if (config_.covariates) {
    std::vector<Var> parts{x, graph.constant(batch.z)};
    x = concat_columns(parts);
  }
  return net_.forward(graph, x);
}

}  // namespace feats
