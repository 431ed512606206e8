#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "feats/dataset.hpp"
#include "feats/rng.hpp"

namespace feats::datagen {

// Steps simulated and discarded before a series is recorded.
inline constexpr std::size_t kBurnIn = 50;

struct ArchParams {
  double omega = 1.0;
  double alpha = 0.5;
};

// ARMA(2,2) core of the once-integrated series, unit-variance innovations.
struct ArmaParams {
  std::array<double, 2> ar{0.5, -0.3};
  std::array<double, 2> ma{0.4, 0.2};
};

// x_t = sigma_t e_t with sigma_t^2 = omega + alpha x_{t-1}^2.
// Throws ConfigError unless omega > 0 and 0 <= alpha < 1.
std::vector<double> arch1_series(std::size_t length, const ArchParams& params, CounterRng& rng);

// ARMA(2,2) increments, cumulatively summed from 0 after the burn-in.
// Throws ConfigError for a non-stationary AR part or a non-invertible MA part.
std::vector<double> arima_series(std::size_t length, const ArmaParams& params, CounterRng& rng);

enum class Experiment { Toy25, Sim31, Sim32, Sim332 };
const char* to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

struct GeneratorSpec {
  Experiment experiment = Experiment::Sim31;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
  // Log-odds multiplier of the binary study.
  double multiplier = 5.0;
  ArchParams arch;
  ArmaParams arma;
  // Standard deviation of the additive N(0, 1) noise: 0.1 in the continuous
  // study, 0 in the static-covariate study (whose response has no noise term).
  double noise_scale = -1.0;  // negative selects the experiment's default

  double effective_noise_scale() const;
  void validate() const;
};

struct GeneratedSplit {
  PanelDataset data;
  // Ground-truth components, row-major [n x component_names.size()].
  std::vector<double> components;
  // Additive noise actually drawn (continuous experiments).
  std::vector<double> noise;
  // True log-odds (binary experiment).
  std::vector<double> log_odds;

  std::vector<double> component(std::size_t c, std::size_t count) const;
};

struct GeneratedDataset {
  GeneratorSpec spec;
  std::vector<std::string> component_names;
  double noise_variance = 0.0;
  GeneratedSplit train;
  GeneratedSplit test;

  std::size_t num_components() const { return component_names.size(); }
};

// Sample i of the combined (train then test) index space draws from stream
// (seed, i), so every sample is reproducible independently of the others.
GeneratedDataset generate(const GeneratorSpec& spec);

struct OracleScores {
  double accuracy = 0.0;
  double auc = 0.0;
};

// Thresholds the true probability at 0.5 and ranks by the true log-odds. The
// AUC is NaN when the labels hold a single class.
OracleScores oracle_binary(std::span<const double> log_odds, std::span<const double> labels);

}  // namespace feats::datagen
