#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "feats/datagen.hpp"
#include "feats/errors.hpp"

namespace feats::datagen {
namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / v.size();
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Lag-1 autocorrelation of an ARMA(2,2) process from its MA(infinity) weights.
double arma_lag1_acf(const ArmaParams& p) {
  std::vector<double> psi{1.0, p.ar[0] + p.ma[0]};
  psi.push_back(p.ar[0] * psi[1] + p.ar[1] + p.ma[1]);
  for (std::size_t j = 3; j < 400; ++j) psi.push_back(p.ar[0] * psi[j - 1] + p.ar[1] * psi[j - 2]);
  double g0 = 0.0, g1 = 0.0;
  for (std::size_t j = 0; j + 1 < psi.size(); ++j) {
    g0 += psi[j] * psi[j];
    g1 += psi[j] * psi[j + 1];
  }
  return g1 / g0;
}

GeneratorSpec spec(Experiment e, std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  GeneratorSpec s;
  s.experiment = e;
  s.n_train = n_train;
  s.n_test = n_test;
  s.seed = seed;
  return s;
}

TEST(Arch, ZeroAlphaIsGaussianWithVarianceOmega) {
  CounterRng rng(1);
  const auto x = arch1_series(100000, {.omega = 2.5, .alpha = 0.0}, rng);
  ASSERT_EQ(x.size(), 100000u);
  EXPECT_LT(std::abs(variance(x) / 2.5 - 1.0), 0.03);
}

TEST(Arch, UnconditionalVarianceIsOmegaOverOneMinusAlpha) {
  CounterRng rng(2);
  const auto x = arch1_series(100000, {.omega = 1.0, .alpha = 0.5}, rng);
  EXPECT_LT(std::abs(variance(x) / 2.0 - 1.0), 0.05);
  EXPECT_LT(std::abs(mean(x)), 0.03);
}

TEST(Arch, VolatilityClustersThroughSquaredLags) {
  CounterRng rng(3);
  const auto x = arch1_series(100000, {.omega = 1.0, .alpha = 0.5}, rng);
  std::vector<double> a, b, sa, sb;
  for (std::size_t t = 1; t < x.size(); ++t) {
    a.push_back(x[t - 1]);
    b.push_back(x[t]);
    sa.push_back(x[t - 1] * x[t - 1]);
    sb.push_back(x[t] * x[t]);
  }
  EXPECT_LT(std::abs(correlation(a, b)), 0.02);
  EXPECT_GT(correlation(sa, sb), 0.2);
}

TEST(Arch, RejectsInvalidParameters) {
  CounterRng rng(4);
  EXPECT_THROW(arch1_series(5, {.omega = 0.0, .alpha = 0.5}, rng), ConfigError);
  EXPECT_THROW(arch1_series(5, {.omega = 1.0, .alpha = 1.0}, rng), ConfigError);
  EXPECT_THROW(arch1_series(5, {.omega = 1.0, .alpha = -0.1}, rng), ConfigError);
}

TEST(Arima, IncrementsFollowTheArmaAutocorrelation) {
  const ArmaParams p;
  CounterRng rng(5);
  const auto x = arima_series(100000, p, rng);
  std::vector<double> d(x.size() - 1);
  for (std::size_t t = 1; t < x.size(); ++t) d[t - 1] = x[t] - x[t - 1];
  std::vector<double> a(d.begin(), d.end() - 1), b(d.begin() + 1, d.end());
  EXPECT_NEAR(correlation(a, b), arma_lag1_acf(p), 0.05);
}

TEST(Arima, WhiteNoiseIncrementsGiveRandomWalk) {
  const ArmaParams p{.ar = {0.0, 0.0}, .ma = {0.0, 0.0}};
  CounterRng rng(6), ref(6);
  const auto x = arima_series(20, p, rng);
  for (std::size_t t = 0; t < kBurnIn; ++t) ref.normal();
  double level = 0.0;
  for (std::size_t t = 0; t < 20; ++t) {
    level += ref.normal();
    EXPECT_DOUBLE_EQ(x[t], level);
  }
}

TEST(Arima, RejectsNonStationaryOrNonInvertible) {
  CounterRng rng(7);
  EXPECT_THROW(arima_series(5, {.ar = {0.7, 0.4}, .ma = {0.4, 0.2}}, rng), ConfigError);
  EXPECT_THROW(arima_series(5, {.ar = {0.5, -0.3}, .ma = {0.0, 1.2}}, rng), ConfigError);
}

TEST(Generate, ReproducibleAndIndependentOfSampleCount) {
  const auto a = generate(spec(Experiment::Sim31, 20, 5, 9));
  const auto b = generate(spec(Experiment::Sim31, 20, 5, 9));
  EXPECT_EQ(a.train.data.x, b.train.data.x);
  EXPECT_EQ(a.train.data.y, b.train.data.y);
  EXPECT_EQ(a.test.data.y, b.test.data.y);
  const auto c = generate(spec(Experiment::Sim31, 10, 0, 9));
  EXPECT_TRUE(std::equal(c.train.data.x.begin(), c.train.data.x.end(), a.train.data.x.begin()));
  const auto d = generate(spec(Experiment::Sim31, 20, 5, 10));
  EXPECT_NE(a.train.data.y, d.train.data.y);
  EXPECT_EQ(a.test.data.sample_ids.front(), 20);
}

TEST(Generate, ResponseIsComponentsPlusNoiseBitwise) {
  for (auto e : {Experiment::Sim31, Experiment::Sim332, Experiment::Toy25}) {
    const auto g = generate(spec(e, 200, 50, 11));
    const std::size_t nc = g.num_components();
    for (const auto* s : {&g.train, &g.test})
      for (std::size_t i = 0; i < s->data.n; ++i) {
        double total = 0.0;
        for (std::size_t c = 0; c < nc; ++c) total += s->components[i * nc + c];
        ASSERT_EQ(s->data.y[i], total + s->noise[i]) << to_string(e) << " sample " << i;
      }
  }
}

TEST(Generate, NoiseScaleDefaults) {
  const auto g = generate(spec(Experiment::Sim31, 20000, 0, 12));
  EXPECT_DOUBLE_EQ(g.noise_variance, 0.01);
  EXPECT_NEAR(variance(g.train.noise), 0.01, 0.0005);
  const auto s = generate(spec(Experiment::Sim332, 50, 0, 12));
  for (double e : s.train.noise) EXPECT_EQ(e, 0.0);
}

TEST(Generate, ContinuousComponentsMatchTheirDefinitions) {
  const auto g = generate(spec(Experiment::Sim31, 100, 0, 13));
  static const double kernel[10] = {1, 3, 5, 3, 1, -1, -3, -5, -3, -1};
  for (std::size_t i = 0; i < g.train.data.n; ++i) {
    const double* x1 = g.train.data.x.data() + i * 100;
    const double* x2 = x1 + 50;
    double lin = 0.0, mx = -1e300, avg = 0.0;
    for (int k = 0; k < 10; ++k) lin += 0.005 * kernel[k] * x1[10 + k];
    for (int k = 30; k < 35; ++k) mx = std::max(mx, x1[k]);
    for (int k = 42; k < 47; ++k) avg += std::min(x1[k], x2[k]) / 5.0;
    EXPECT_NEAR(g.train.components[i * 3], lin, 1e-12);
    EXPECT_NEAR(g.train.components[i * 3 + 1], 0.5 * mx, 1e-12);
    EXPECT_NEAR(g.train.components[i * 3 + 2], avg, 1e-12);
  }
}

TEST(Generate, SeriesAreMutuallyIndependent) {
  const auto g = generate(spec(Experiment::Sim31, 100000, 0, 14));
  for (auto [t1, t2] : {std::pair{10, 10}, std::pair{32, 33}, std::pair{44, 44}}) {
    std::vector<double> a(g.train.data.n), b(g.train.data.n);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = g.train.data.x[i * 100 + t1];
      b[i] = g.train.data.x[i * 100 + 50 + t2];
    }
    EXPECT_LT(std::abs(correlation(a, b)), 0.02) << t1 << "," << t2;
  }
  std::vector<double> all(g.train.data.x.begin(), g.train.data.x.end());
  EXPECT_LT(std::abs(variance(all) / 2.0 - 1.0), 0.05);
}

TEST(Generate, VanishingMultiplierBalancesClasses) {
  auto s = spec(Experiment::Sim32, 40000, 0, 15);
  s.multiplier = 1e-9;
  const auto g = generate(s);
  EXPECT_EQ(g.train.data.target_kind, TargetKind::Binary);
  EXPECT_NEAR(mean(g.train.data.y), 0.5, 0.01);
}

TEST(Generate, LogOddsScaleWithMultiplier) {
  auto s = spec(Experiment::Sim32, 50, 0, 16);
  s.multiplier = 50;
  const auto g = generate(s);
  for (std::size_t i = 0; i < 50; ++i) {
    const double* c = g.train.components.data() + i * 3;
    EXPECT_DOUBLE_EQ(g.train.log_odds[i], 50 * (c[0] + c[1] + c[2]));
    EXPECT_TRUE(g.train.data.y[i] == 0.0 || g.train.data.y[i] == 1.0);
  }
}

TEST(Generate, ToyComponents) {
  const auto g = generate(spec(Experiment::Toy25, 100, 0, 17));
  EXPECT_EQ(g.train.data.series, 3u);
  EXPECT_EQ(g.train.data.time_points, 10u);
  for (std::size_t i = 0; i < 100; ++i) {
    const double* x = g.train.data.x.data() + i * 30;
    double f1 = 0.0;
    for (int k = 6; k <= 8; ++k) f1 += std::max(x[k], x[10 + k]) / 3.0;
    const double f2 = (x[21] + x[22] + x[23]) / 3.0;
    EXPECT_NEAR(g.train.components[i * 2], f1, 1e-12);
    EXPECT_NEAR(g.train.components[i * 2 + 1], f2, 1e-12);
  }
}

TEST(Generate, StaticCovariateComponents) {
  const auto g = generate(spec(Experiment::Sim332, 400, 0, 18));
  std::size_t ones = 0;
  for (std::size_t i = 0; i < 400; ++i) {
    const double* x1 = g.train.data.x.data() + i * 100;
    const double* x2 = x1 + 50;
    const double z1 = g.train.data.z[i * 2], z2 = g.train.data.z[i * 2 + 1];
    ASSERT_TRUE(z1 == 0.0 || z1 == 1.0);
    ones += z1 == 1.0;
    double avg = 0.0, avg_max = 0.0;
    for (int k = 0; k <= 10; ++k) avg += x1[k] / 11.0;
    for (int k = 30; k <= 35; ++k) avg_max += std::max(x1[k], x2[k]) / 6.0;
    EXPECT_NEAR(g.train.components[i * 3], avg, 1e-10);
    EXPECT_NEAR(g.train.components[i * 3 + 1], z1 * std::abs(z2) * avg_max, 1e-10);
    EXPECT_EQ(g.train.components[i * 3 + 2], z1);
  }
  EXPECT_GT(ones, 150u);
  EXPECT_LT(ones, 250u);
}

TEST(Generate, InvalidSpecsAreRejected) {
  auto s = spec(Experiment::Sim31, 0, 0, 1);
  EXPECT_THROW(generate(s), ConfigError);
  s.n_train = 5;
  s.arch.alpha = 1.5;
  EXPECT_THROW(generate(s), ConfigError);
  auto a = spec(Experiment::Sim332, 5, 0, 1);
  a.arma.ar = {1.2, 0.0};
  EXPECT_THROW(generate(a), ConfigError);
  EXPECT_THROW(experiment_from_string("sim99"), ConfigError);
  EXPECT_EQ(experiment_from_string(to_string(Experiment::Sim332)), Experiment::Sim332);
}

TEST(Oracle, ExtremesAndSingleClass) {
  const std::vector<double> lo{-3, -1, 2, 5}, y{0, 0, 1, 1};
  const auto s = oracle_binary(lo, y);
  EXPECT_EQ(s.accuracy, 1.0);
  EXPECT_EQ(s.auc, 1.0);
  const std::vector<double> flipped{1, 1, 0, 0};
  const auto f = oracle_binary(lo, flipped);
  EXPECT_EQ(f.accuracy, 0.0);
  EXPECT_EQ(f.auc, 0.0);
  EXPECT_TRUE(std::isnan(oracle_binary(lo, std::vector<double>{1, 1, 1, 1}).auc));
  EXPECT_THROW(oracle_binary(lo, std::vector<double>{1, 0}), DimensionError);
}

}  // namespace
}  // namespace feats::datagen
