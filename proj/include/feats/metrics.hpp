#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "feats/dataset.hpp"
#include "feats/model.hpp"
#include "feats/tensor.hpp"

namespace feats::metrics {

// All weighted metrics take an empty weight span to mean unit weights.
double mse(std::span<const double> predictions, std::span<const double> targets, std::span<const double> weights = {});
// 1 - SSE/SST with weighted sums; SST uses the weighted target mean.
double r2(std::span<const double> predictions, std::span<const double> targets, std::span<const double> weights = {});

// Mann-Whitney rank statistic with midranks for tied scores. Returns nullopt
// when only one class is present.
std::optional<double> auc(std::span<const double> scores, std::span<const int> positive);

// Binary: P(y = 1) thresholded at 0.5, ties to class 0.
double binary_accuracy(std::span<const double> probabilities, std::span<const double> targets,
                       std::span<const double> weights = {});
double binary_cross_entropy(std::span<const double> probabilities, std::span<const double> targets,
                            std::span<const double> weights = {});

// Multiclass on row-major [n x K] probabilities; argmax ties go to the lowest index.
std::vector<std::size_t> argmax_rows(const Tensor& probabilities);
double multiclass_accuracy(const Tensor& probabilities, std::span<const double> labels,
                           std::span<const double> weights = {});
double multiclass_cross_entropy(const Tensor& probabilities, std::span<const double> labels,
                                std::span<const double> weights = {});
// One-vs-rest AUC per class.
std::vector<std::optional<double>> one_vs_rest_auc(const Tensor& probabilities, std::span<const double> labels);

struct Report {
  Task task = Task::Regression;
  std::size_t n = 0;
  std::optional<double> mse;
  std::optional<double> r2;
  std::optional<double> accuracy;
  std::optional<double> cross_entropy;
  // Binary: one entry. Multiclass: one per class.
  std::vector<std::optional<double>> auc;
};

// `predictions` as returned by feats::predict for the task.
Report evaluate(const Tensor& predictions, const PanelDataset& data, Task task);

}  // namespace feats::metrics
