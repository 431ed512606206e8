#include "feats/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feats/errors.hpp"
#include "feats/ops.hpp"

namespace feats::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::span<const double> weights) {
  if (a != b) throw DimensionError(std::to_string(a) + " predictions for " + std::to_string(b) + " targets");
  if (!weights.empty() && weights.size() != a)
    throw DimensionError(std::to_string(weights.size()) + " weights for " + std::to_string(a) + " samples");
  if (a == 0) throw ArgumentError("metrics need at least one sample");
}

double weight_at(std::span<const double> weights, std::size_t i) { return weights.empty() ? 1.0 : weights[i]; }

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

}  // namespace

double mse(std::span<const double> predictions, std::span<const double> targets, std::span<const double> weights) {
  check_lengths(predictions.size(), targets.size(), weights);
  double sse = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double w = weight_at(weights, i), d = predictions[i] - targets[i];
    sse += w * d * d;
    wsum += w;
  }
  return sse / wsum;
}

double r2(std::span<const double> predictions, std::span<const double> targets, std::span<const double> weights) {
  check_lengths(predictions.size(), targets.size(), weights);
  double wsum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    wsum += weight_at(weights, i);
    mean += weight_at(weights, i) * targets[i];
  }
  mean /= wsum;
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double w = weight_at(weights, i);
    sse += w * (predictions[i] - targets[i]) * (predictions[i] - targets[i]);
    sst += w * (targets[i] - mean) * (targets[i] - mean);
  }
  if (sst == 0.0) return sse == 0.0 ? 1.0 : 0.0;
  return 1.0 - sse / sst;
}

std::optional<double> auc(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size())
    throw DimensionError(std::to_string(scores.size()) + " scores for " + std::to_string(positive.size()) + " labels");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of midranks (1-based) over positives.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (positive[order[t]]) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double binary_accuracy(std::span<const double> probabilities, std::span<const double> targets,
                       std::span<const double> weights) {
  check_lengths(probabilities.size(), targets.size(), weights);
  double hit = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double w = weight_at(weights, i);
    const double label = probabilities[i] > 0.5 ? 1.0 : 0.0;
    hit += label == targets[i] ? w : 0.0;
    wsum += w;
  }
  return hit / wsum;
}

double binary_cross_entropy(std::span<const double> probabilities, std::span<const double> targets,
                            std::span<const double> weights) {
  check_lengths(probabilities.size(), targets.size(), weights);
  double total = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double w = weight_at(weights, i), p = clamp_probability(probabilities[i]);
    total -= w * (targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p));
    wsum += w;
  }
  return total / wsum;
}

std::vector<std::size_t> argmax_rows(const Tensor& probabilities) {
  const std::size_t n = probabilities.rows(), k = probabilities.cols();
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (probabilities[i * k + c] > probabilities[i * k + best]) best = c;
    out[i] = best;
  }
  return out;
}

double multiclass_accuracy(const Tensor& probabilities, std::span<const double> labels,
                           std::span<const double> weights) {
  check_lengths(probabilities.rows(), labels.size(), weights);
  const auto predicted = argmax_rows(probabilities);
  double hit = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double w = weight_at(weights, i);
    hit += static_cast<double>(predicted[i]) == labels[i] ? w : 0.0;
    wsum += w;
  }
  return hit / wsum;
}

double multiclass_cross_entropy(const Tensor& probabilities, std::span<const double> labels,
                                std::span<const double> weights) {
  check_lengths(probabilities.rows(), labels.size(), weights);
  const std::size_t k = probabilities.cols();
  double total = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    if (c >= k) throw DataError("class index " + std::to_string(c) + " outside [0, " + std::to_string(k) + ")");
    const double w = weight_at(weights, i);
    total -= w * std::log(clamp_probability(probabilities[i * k + c]));
    wsum += w;
  }
  return total / wsum;
}

std::vector<std::optional<double>> one_vs_rest_auc(const Tensor& probabilities, std::span<const double> labels) {
  const std::size_t n = probabilities.rows(), k = probabilities.cols();
  if (labels.size() != n) throw DimensionError(std::to_string(n) + " predictions for " + std::to_string(labels.size()) + " labels");
  std::vector<std::optional<double>> out;
  std::vector<double> scores(n);
  std::vector<int> positive(n);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = probabilities[i * k + c];
      positive[i] = static_cast<std::size_t>(labels[i]) == c ? 1 : 0;
    }
    out.push_back(auc(scores, positive));
  }
  return out;
}

Report evaluate(const Tensor& predictions, const PanelDataset& data, Task task) {
  Report r;
  r.task = task;
  r.n = data.n;
  std::span<const double> w = data.weights;
  switch (task) {
    case Task::Regression:
      r.mse = mse(predictions.data(), data.y, w);
      r.r2 = r2(predictions.data(), data.y, w);
      break;
    case Task::Binary: {
      r.accuracy = binary_accuracy(predictions.data(), data.y, w);
      r.cross_entropy = binary_cross_entropy(predictions.data(), data.y, w);
      std::vector<int> positive(data.n);
      for (std::size_t i = 0; i < data.n; ++i) positive[i] = data.y[i] == 1.0 ? 1 : 0;
      r.auc.push_back(auc(predictions.data(), positive));
      break;
    }
    case Task::Multiclass:
      r.accuracy = multiclass_accuracy(predictions, data.y, w);
      r.cross_entropy = multiclass_cross_entropy(predictions, data.y, w);
      r.auc = one_vs_rest_auc(predictions, data.y);
      break;
  }
  return r;
}

}  // namespace feats::metrics
