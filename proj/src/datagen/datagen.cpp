#include "feats/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "feats/errors.hpp"
#include "feats/metrics.hpp"

namespace feats::datagen {

std::vector<double> arch1_series(std::size_t length, const ArchParams& params, CounterRng& rng) {
  if (!(params.omega > 0.0) || !(params.alpha >= 0.0 && params.alpha < 1.0))
    throw ConfigError("ARCH(1) needs omega > 0 and 0 <= alpha < 1, got omega = " + std::to_string(params.omega) +
                      ", alpha = " + std::to_string(params.alpha));
  std::vector<double> out;
  out.reserve(length);
  double prev = 0.0;
  for (std::size_t t = 0; t < kBurnIn + length; ++t) {
    const double sigma = std::sqrt(params.omega + params.alpha * prev * prev);
    prev = sigma * rng.normal();
    if (t >= kBurnIn) out.push_back(prev);
  }
  return out;
}

std::vector<double> arima_series(std::size_t length, const ArmaParams& params, CounterRng& rng) {
  const auto [p1, p2] = params.ar;
  const auto [q1, q2] = params.ma;
  if (!(std::abs(p2) < 1.0 && p1 + p2 < 1.0 && p2 - p1 < 1.0))
    throw ConfigError("AR part (" + std::to_string(p1) + ", " + std::to_string(p2) + ") is not stationary");
  if (!(std::abs(q2) < 1.0 && q1 + q2 > -1.0 && q2 - q1 > -1.0))
    throw ConfigError("MA part (" + std::to_string(q1) + ", " + std::to_string(q2) + ") is not invertible");
  std::vector<double> out;
  out.reserve(length);
  double w1 = 0.0, w2 = 0.0, e1 = 0.0, e2 = 0.0, level = 0.0;
  for (std::size_t t = 0; t < kBurnIn + length; ++t) {
    const double e = rng.normal();
    const double w = p1 * w1 + p2 * w2 + e + q1 * e1 + q2 * e2;
    w2 = w1;
    w1 = w;
    e2 = e1;
    e1 = e;
    if (t >= kBurnIn) {
      level += w;
      out.push_back(level);
    }
  }
  return out;
}

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::Toy25: return "toy25";
    case Experiment::Sim31: return "sim31";
    case Experiment::Sim32: return "sim32";
    case Experiment::Sim332: return "sim332";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& s) {
  if (s == "toy25") return Experiment::Toy25;
  if (s == "sim31") return Experiment::Sim31;
  if (s == "sim32") return Experiment::Sim32;
  if (s == "sim332") return Experiment::Sim332;
  throw ConfigError("unknown experiment '" + s + "' (expected toy25, sim31, sim32 or sim332)");
}

double GeneratorSpec::effective_noise_scale() const {
  if (noise_scale >= 0.0) return noise_scale;
  return experiment == Experiment::Sim31 ? 0.1 : 0.0;
}

void GeneratorSpec::validate() const {
  if (n_train == 0) throw ConfigError("generator needs n_train > 0");
  if (!std::isfinite(multiplier)) throw ConfigError("log-odds multiplier must be finite");
  if (!std::isfinite(noise_scale)) throw ConfigError("noise scale must be finite");
  // Surface invalid process parameters before generating anything.
  CounterRng probe(seed);
  if (experiment == Experiment::Sim31 || experiment == Experiment::Sim32) arch1_series(1, arch, probe);
  if (experiment == Experiment::Sim332) arima_series(1, arma, probe);
}

std::vector<double> GeneratedSplit::component(std::size_t c, std::size_t count) const {
  std::vector<double> out(data.n);
  for (std::size_t i = 0; i < data.n; ++i) out[i] = components[i * count + c];
  return out;
}

namespace {

struct Shape {
  std::size_t series, time_points, covariates;
  std::vector<std::string> components;
};

Shape shape_of(Experiment e) {
  switch (e) {
    case Experiment::Toy25: return {3, 10, 0, {"max_x1_x2_t6_8", "mean_x3_t1_3"}};
    case Experiment::Sim31:
    case Experiment::Sim32: return {2, 50, 0, {"linear_x1_t10_19", "max_x1_t30_34", "avg_min_x1_x2_t42_46"}};
    case Experiment::Sim332: return {2, 50, 2, {"avg_x1_t0_10", "z1_abs_z2_avg_max_t30_35", "z1"}};
  }
  throw ConfigError("unknown experiment");
}

// Components of the continuous and binary studies on one sample (x1, x2 of length 50).
void sim3_components(const double* x1, const double* x2, double* out) {
  static constexpr double kLinear[10] = {1, 3, 5, 3, 1, -1, -3, -5, -3, -1};
  double lin = 0.0;
  for (int k = 0; k < 10; ++k) lin += kLinear[k] * x1[10 + k];
  out[0] = 0.005 * lin;
  out[1] = 0.5 * *std::max_element(x1 + 30, x1 + 35);
  double avg = 0.0;
  for (int k = 42; k <= 46; ++k) avg += std::min(x1[k], x2[k]);
  out[2] = avg / 5.0;
}

}  // namespace

GeneratedDataset generate(const GeneratorSpec& spec) {
  spec.validate();
  const Shape shape = shape_of(spec.experiment);
  const std::size_t nc = shape.components.size();
  const double noise_scale = spec.effective_noise_scale();

  GeneratedDataset out;
  out.spec = spec;
  out.component_names = shape.components;
  out.noise_variance = spec.experiment == Experiment::Sim32 ? 0.0 : noise_scale * noise_scale;

  auto fill = [&](GeneratedSplit& split, std::size_t n, std::size_t offset, Split tag) {
    PanelDataset& d = split.data;
    d.n = n;
    d.series = shape.series;
    d.time_points = shape.time_points;
    d.covariates = shape.covariates;
    d.split = tag;
    d.target_kind = spec.experiment == Experiment::Sim32 ? TargetKind::Binary : TargetKind::Continuous;
    d.x.resize(n * shape.series * shape.time_points);
    d.z.resize(n * shape.covariates);
    d.y.resize(n);
    d.weights.assign(n, 1.0);
    d.sample_ids.resize(n);
    split.components.resize(n * nc);
    if (spec.experiment != Experiment::Sim32) split.noise.resize(n);
    if (spec.experiment == Experiment::Sim32) split.log_odds.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t global = offset + i;
      d.sample_ids[i] = static_cast<std::int64_t>(global);
      CounterRng rng(spec.seed, global);
      double* x = d.x.data() + i * shape.series * shape.time_points;
      double* comp = split.components.data() + i * nc;
      switch (spec.experiment) {
        case Experiment::Toy25: {
          for (std::size_t c = 0; c < 30; ++c) x[c] = rng.normal();
          const double* x1 = x;
          const double* x2 = x + 10;
          const double* x3 = x + 20;
          comp[0] = (std::max(x1[6], x2[6]) + std::max(x1[7], x2[7]) + std::max(x1[8], x2[8])) / 3.0;
          comp[1] = (x3[1] + x3[2] + x3[3]) / 3.0;
          const double e = noise_scale > 0.0 ? noise_scale * rng.normal() : 0.0;
          split.noise[i] = e;
          d.y[i] = comp[0] + comp[1] + e;
          break;
        }
        case Experiment::Sim31:
        case Experiment::Sim32: {
          for (std::size_t j = 0; j < 2; ++j) {
            auto s = arch1_series(50, spec.arch, rng);
            std::copy(s.begin(), s.end(), x + j * 50);
          }
          sim3_components(x, x + 50, comp);
          const double signal = comp[0] + comp[1] + comp[2];
          if (spec.experiment == Experiment::Sim31) {
            const double e = noise_scale * rng.normal();
            split.noise[i] = e;
            d.y[i] = signal + e;
          } else {
            const double lo = spec.multiplier * signal;
            split.log_odds[i] = lo;
            d.y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-lo)) ? 1.0 : 0.0;
          }
          break;
        }
        case Experiment::Sim332: {
          for (std::size_t j = 0; j < 2; ++j) {
            auto s = arima_series(50, spec.arma, rng);
            std::copy(s.begin(), s.end(), x + j * 50);
          }
          const double z1 = rng.bernoulli(0.5) ? 1.0 : 0.0;
          const double z2 = rng.normal();
          d.z[i * 2] = z1;
          d.z[i * 2 + 1] = z2;
          const double* x1 = x;
          const double* x2 = x + 50;
          double avg1 = 0.0;
          for (int k = 0; k <= 10; ++k) avg1 += x1[k];
          double avg_max = 0.0;
          for (int k = 30; k <= 35; ++k) avg_max += std::max(x1[k], x2[k]);
          comp[0] = avg1 / 11.0;
          comp[1] = z1 * std::abs(z2) * avg_max / 6.0;
          comp[2] = z1;
          const double e = noise_scale > 0.0 ? noise_scale * rng.normal() : 0.0;
          split.noise[i] = e;
          d.y[i] = comp[0] + comp[1] + comp[2] + e;
          break;
        }
      }
    }
  };

  fill(out.train, spec.n_train, 0, Split::Train);
  fill(out.test, spec.n_test, spec.n_train, Split::Test);
  return out;
}

OracleScores oracle_binary(std::span<const double> log_odds, std::span<const double> labels) {
  if (log_odds.size() != labels.size() || log_odds.empty())
    throw DimensionError("oracle needs matching, non-empty log-odds and labels");
  OracleScores s;
  std::vector<int> positive(labels.size());
  double hit = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    positive[i] = labels[i] == 1.0 ? 1 : 0;
    const double predicted = log_odds[i] > 0.0 ? 1.0 : 0.0;
    hit += predicted == labels[i] ? 1.0 : 0.0;
  }
  s.accuracy = hit / static_cast<double>(labels.size());
  s.auc = metrics::auc(log_odds, positive).value_or(std::numeric_limits<double>::quiet_NaN());
  return s;
}

}  // namespace feats::datagen
