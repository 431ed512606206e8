#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "feats/dataset.hpp"
#include "feats/model.hpp"

namespace feats {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  // Mandatory; training refuses to start without one.
  std::optional<std::uint64_t> seed;
  double validation_fraction = 0.1;
  // Optional wall-clock cap in seconds. Hitting it ends training early and is
  // flagged in the result; runs that hit it are not bitwise reproducible.
  std::optional<double> time_budget;
  // Learning rate is multiplied by lr_factor after lr_patience epochs without a
  // new best validation loss (0 disables), never dropping below min_learning_rate.
  std::size_t lr_patience = 0;
  double lr_factor = 0.5;
  double min_learning_rate = 1e-5;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;       // mean total loss over the epoch's batches
  double validation_loss = 0.0;  // data loss on the validation split
  double learning_rate = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  bool early_stopped = false;
  bool budget_exhausted = false;
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Deterministic shuffled split into (train, validation).
std::pair<PanelDataset, PanelDataset> split_validation(const PanelDataset& data, double fraction, std::uint64_t seed);

// Weighted mean data loss (no penalty) of `net` on `data`.
double evaluate_loss(Network& net, const PanelDataset& data, std::size_t batch_size = 1024);

// Prepares `net` on `train` (standardiser, output bias), then runs mini-batch
// Adam with early stopping on validation loss and restores the best epoch.
// Throws TrainingError if the loss or any gradient becomes non-finite.
TrainResult train(Network& net, const PanelDataset& train, const PanelDataset& validation, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Splits `validation_fraction` of `data` off for early stopping, then trains.
TrainResult train(Network& net, const PanelDataset& data, const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace feats
