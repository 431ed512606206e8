#include "feats/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "feats/errors.hpp"
#include "feats/optimizer.hpp"
#include "feats/rng.hpp"

namespace feats {

void TrainConfig::validate() const {
  if (!seed) throw ConfigError("training requires an explicit seed");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (max_epochs == 0) throw ConfigError("max epochs must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation fraction must lie in (0, 1)");
  if (time_budget && !(*time_budget > 0.0)) throw ConfigError("time budget must be positive");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ConfigError("learning-rate factor must lie in (0, 1)");
  if (!(min_learning_rate > 0.0)) throw ConfigError("minimum learning rate must be positive");
}

std::pair<PanelDataset, PanelDataset> split_validation(const PanelDataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
  if (data.n < 2) throw DataError("need at least 2 samples to split off a validation set");
  std::vector<std::size_t> order(data.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(seed, /*stream=*/0x5E1);
  rng.shuffle(std::span<std::size_t>(order));
  auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data.n)));
  n_val = std::clamp<std::size_t>(n_val, 1, data.n - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  auto train_set = data.subset(tr);
  auto val_set = data.subset(val);
  train_set.split = Split::Train;
  val_set.split = Split::Validation;
  return {std::move(train_set), std::move(val_set)};
}

double evaluate_loss(Network& net, const PanelDataset& data, std::size_t batch_size) {
  double total = 0.0, weight = 0.0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.n; start += batch_size) {
    rows.clear();
    for (std::size_t i = start; i < std::min(data.n, start + batch_size); ++i) rows.push_back(i);
    Batch batch = make_batch(data, rows, net.standardizer());
    Graph graph(Graph::Mode::Inference);
    const double loss = data_loss(net.forward(graph, batch), batch, net.task()).value()[0];
    double w = 0.0;
    for (double v : batch.weights.data()) w += v;
    total += loss * w;
    weight += w;
  }
  return total / weight;
}

namespace {

std::vector<Tensor> snapshot(std::span<Parameter* const> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(std::span<Parameter* const> params, const std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

TrainResult train(Network& net, const PanelDataset& train_set, const PanelDataset& validation,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  train_set.validate();
  validation.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  net.prepare(train_set);
  auto params = net.parameters();
  Adam adam(AdamConfig{.learning_rate = config.learning_rate});
  CounterRng rng(*config.seed, /*stream=*/0x0BA7C4);

  TrainResult result;
  result.best_validation_loss = evaluate_loss(net, validation);
  if (!std::isfinite(result.best_validation_loss))
    throw TrainingError("validation loss is not finite before training");
  auto best = snapshot(params);
  std::size_t since_best = 0, since_decay = 0;

  std::vector<std::size_t> order(train_set.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      Batch batch = make_batch(train_set, std::span<const std::size_t>(order).subspan(b, e - b), net.standardizer());
      for (Parameter* p : params) p->zero_grad();
      Graph graph;
      Var loss = total_loss(net, graph, net.forward(graph, batch), batch);
      const double value = loss.value()[0];
      if (!std::isfinite(value))
        throw TrainingError("training loss became non-finite in epoch " + std::to_string(epoch) +
                            "; last finite epoch " + std::to_string(epoch - 1));
      graph.backward(loss);
      try {
        adam.step(params);
      } catch (const TrainingError& err) {
        throw TrainingError(std::string(err.what()) + " in epoch " + std::to_string(epoch) + "; last finite epoch " +
                            std::to_string(epoch - 1));
      }
      loss_sum += value * static_cast<double>(e - b);
      seen += e - b;
    }

    EpochRecord record{epoch, loss_sum / static_cast<double>(seen), evaluate_loss(net, validation),
                       adam.config().learning_rate};
    if (!std::isfinite(record.validation_loss))
      throw TrainingError("validation loss became non-finite in epoch " + std::to_string(epoch) +
                          "; last finite epoch " + std::to_string(epoch - 1));
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    if (record.validation_loss < result.best_validation_loss) {
      result.best_validation_loss = record.validation_loss;
      result.best_epoch = epoch;
      best = snapshot(params);
      since_best = 0;
      since_decay = 0;
    } else if (++since_best >= config.patience) {
      result.early_stopped = true;
      break;
    } else if (config.lr_patience && ++since_decay >= config.lr_patience) {
      adam.set_learning_rate(std::max(config.min_learning_rate, adam.config().learning_rate * config.lr_factor));
      since_decay = 0;
    }
    if (config.time_budget && elapsed() > *config.time_budget) {
      result.budget_exhausted = true;
      break;
    }
  }
  restore(params, best);
  result.seconds = elapsed();
  return result;
}

TrainResult train(Network& net, const PanelDataset& data, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  auto [tr, val] = split_validation(data, config.validation_fraction, *config.seed);
  return train(net, tr, val, config, on_epoch);
}

}  // namespace feats
