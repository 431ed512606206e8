#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "feats/dataset.hpp"
#include "feats/model.hpp"
#include "feats/train.hpp"

namespace feats {

struct HeadSearchConfig {
  // 0 starts at the number of series.
  std::size_t initial_heads = 0;
  std::size_t step = 2;
  // 0 means initial_heads + 5 * step.
  std::size_t max_heads = 0;
  // Minimum relative drop in validation loss that justifies more heads.
  double threshold = 0.01;
};

struct SearchStep {
  std::size_t heads = 0;
  std::size_t tau = 0;
  std::uint64_t seed = 0;
  double validation_loss = 0.0;
};

struct HeadSearchResult {
  std::size_t chosen_heads = 0;
  std::vector<SearchStep> trace;
};

// Trains models with initial, initial + step, ... heads and stops once the
// validation loss improves by less than `threshold` relative to the current
// choice. New heads copy the first head of `base` (or the default head when
// `base` has none). Member k trains with model and split seed base seed + k.
HeadSearchResult head_count_search(const PanelDataset& data, const FeatsConfig& base, const TrainConfig& train_config,
                                   const HeadSearchConfig& search = {});

struct TauSearchResult {
  std::size_t best_tau = 0;
  std::vector<SearchStep> trace;
};

// Taus 0 .. floor(0.2 T) for a series of `time_points` = T + 1 values.
std::vector<std::size_t> default_tau_grid(std::size_t time_points);

// Trains one model per tau (applied to every head) and returns the tau with
// the lowest validation loss. A smaller tau whose loss is within
// `tie_tolerance` (relative) of the best wins. Throws ConfigError on an empty grid.
TauSearchResult tau_grid_search(const PanelDataset& data, const FeatsConfig& base, const TrainConfig& train_config,
                                std::vector<std::size_t> grid, double tie_tolerance = 0.01);

}  // namespace feats
