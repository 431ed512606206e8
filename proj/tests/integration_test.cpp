#include <gtest/gtest.h>

#include <cstdio>
#include <vector>

#include "feats/datagen.hpp"
#include "feats/interpret.hpp"
#include "feats/metrics.hpp"
#include "feats/model.hpp"
#include "feats/search.hpp"
#include "feats/train.hpp"

namespace feats {
namespace {

datagen::GeneratedDataset sim31(std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  datagen::GeneratorSpec spec;
  spec.experiment = datagen::Experiment::Sim31;
  spec.n_train = n_train;
  spec.n_test = n_test;
  spec.seed = seed;
  return datagen::generate(spec);
}

FeatsConfig sim31_model(std::size_t heads, std::uint64_t seed) {
  FeatsConfig c;
  c.series = 2;
  c.time_points = 50;
  c.seed = seed;
  c.heads.assign(heads, nn::HeadConfig{.tau = 3});
  return c;
}

TrainConfig sim31_training(std::uint64_t seed) {
  TrainConfig t;
  t.seed = seed;
  t.learning_rate = 3e-3;
  t.batch_size = 64;
  t.max_epochs = 60;
  t.patience = 10;
  t.lr_patience = 5;
  return t;
}

double test_mse(std::size_t heads, const datagen::GeneratedDataset& g, std::uint64_t seed) {
  FeatsModel model(sim31_model(heads, seed));
  train(model, g.train.data, sim31_training(seed));
  const Tensor p = predict(model, g.test.data);
  return metrics::mse(p.data(), g.test.data.y);
}

// Surplus heads cost little: five heads on a three-component target stay
// within 20% of the three-head test error.
TEST(Integration, RedundantHeadsAreTolerated) {
  const auto g = sim31(5000, 2000, 31);
  for (std::uint64_t seed : {1, 2, 3}) {
    const double three = test_mse(3, g, seed);
    const double five = test_mse(5, g, seed);
    std::printf("seed %llu: 3 heads %.5f, 5 heads %.5f\n", static_cast<unsigned long long>(seed), three, five);
    EXPECT_LT(five, 1.2 * three) << "seed " << seed;
  }
}

TEST(Integration, HeadSearchFindsAtLeastThreeHeads) {
  const auto g = sim31(5000, 0, 32);
  const auto r = head_count_search(g.train.data, sim31_model(2, 5), sim31_training(5),
                                   {.initial_heads = 2, .step = 2, .max_heads = 6});
  for (const auto& s : r.trace) std::printf("heads %zu: validation %.5f\n", s.heads, s.validation_loss);
  EXPECT_GE(r.chosen_heads, 3u);
}

// Extraction, variance tables and alignment agree on a trained model. At this
// sample size only the two high-variance components are reliably recovered;
// the small linear one needs the full-size run of the acceptance suite.
TEST(Integration, TrainedHeadsAlignWithDominantComponents) {
  const auto g = sim31(5000, 2000, 33);
  FeatsModel model(sim31_model(3, 7));
  train(model, g.train.data, sim31_training(7));
  const auto report = interpret::extract_weights(model, g.test.data);
  std::vector<std::vector<double>> comps;
  for (std::size_t c = 0; c < 3; ++c) comps.push_back(g.test.component(c, 3));
  const auto table = interpret::align_heads(report.features, comps);
  ASSERT_EQ(table.assignment.size(), 3u);
  std::vector<bool> used(3, false);
  for (auto [h, c] : table.assignment) {
    std::printf("head %zu -> %s |r| %.4f\n", h, g.component_names[c].c_str(), table.abs_correlation[h][c]);
    used[c] = true;
    if (c != 0) EXPECT_GT(table.abs_correlation[h][c], 0.9) << g.component_names[c];
  }
  EXPECT_EQ(used, std::vector<bool>(3, true));
  for (std::size_t h = 0; h < 3; ++h) {
    const auto v = interpret::variance_decomposition(report, h);
    EXPECT_GE(v.feature, 0.0);
    for (double s : v.by_series) EXPECT_GE(s, 0.0);
  }
}

}  // namespace
}  // namespace feats
