#include "feats/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "feats/errors.hpp"

namespace feats {

namespace {

SearchStep fit_member(const PanelDataset& data, FeatsConfig config, TrainConfig train_config, std::size_t index) {
  const std::uint64_t seed = *train_config.seed + index;
  config.seed = seed;
  train_config.seed = seed;
  FeatsModel model(config);
  const TrainResult result = train(model, data, train_config);
  return {config.heads.size(), config.heads.front().tau, seed, result.best_validation_loss};
}

}  // namespace

HeadSearchResult head_count_search(const PanelDataset& data, const FeatsConfig& base, const TrainConfig& train_config,
                                   const HeadSearchConfig& search) {
  train_config.validate();
  if (search.step == 0) throw ConfigError("head search step must be positive");
  if (!(search.threshold >= 0.0)) throw ConfigError("head search threshold must be non-negative");
  const nn::HeadConfig head = base.heads.empty() ? nn::HeadConfig{} : base.heads.front();
  const std::size_t initial = search.initial_heads ? search.initial_heads : std::max<std::size_t>(base.series, 1);
  const std::size_t max_heads = search.max_heads ? search.max_heads : initial + 5 * search.step;

  auto with_heads = [&](std::size_t count) {
    FeatsConfig c = base;
    c.heads.assign(count, head);
    return c;
  };

  HeadSearchResult result;
  result.trace.push_back(fit_member(data, with_heads(initial), train_config, 0));
  result.chosen_heads = initial;
  double current = result.trace.back().validation_loss;
  for (std::size_t count = initial + search.step; count <= max_heads; count += search.step) {
    result.trace.push_back(fit_member(data, with_heads(count), train_config, result.trace.size()));
    const double candidate = result.trace.back().validation_loss;
    const double improvement = (current - candidate) / std::max(std::abs(current), 1e-300);
    if (improvement < search.threshold) break;
    result.chosen_heads = count;
    current = candidate;
  }
  return result;
}

std::vector<std::size_t> default_tau_grid(std::size_t time_points) {
  if (time_points == 0) throw ConfigError("series must have at least one time point");
  const std::size_t t = time_points - 1;
  std::vector<std::size_t> grid;
  for (std::size_t tau = 0; tau <= t / 5; ++tau) grid.push_back(tau);
  return grid;
}

TauSearchResult tau_grid_search(const PanelDataset& data, const FeatsConfig& base, const TrainConfig& train_config,
                                std::vector<std::size_t> grid, double tie_tolerance) {
  if (grid.empty()) throw ConfigError("tau grid is empty");
  if (base.heads.empty()) throw ConfigError("tau search needs at least one head");
  train_config.validate();
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  TauSearchResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    FeatsConfig c = base;
    for (auto& h : c.heads) h.tau = grid[i];
    result.trace.push_back(fit_member(data, c, train_config, i));
    best = std::min(best, result.trace.back().validation_loss);
  }
  for (const auto& step : result.trace) {
    if (step.validation_loss <= best + tie_tolerance * std::abs(best)) {
      result.best_tau = step.tau;
      break;
    }
  }
  return result;
}

}  // namespace feats
