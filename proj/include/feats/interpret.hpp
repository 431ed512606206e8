#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "feats/dataset.hpp"
#include "feats/model.hpp"
#include "feats/tensor.hpp"

namespace feats::interpret {

// Identity tolerance between a head feature and sum W * x.
inline constexpr double kAdditivityTolerance = 1e-9;

/// Per-sample flattened attention weights of every head.
///
/// Weights act on the panel values the model actually sees, i.e. after the
/// model's standardiser; `inputs` holds those values.
struct AttributionReport {
  std::size_t n = 0;
  std::size_t series = 0;
  std::size_t time_points = 0;
  std::vector<std::int64_t> sample_ids;
  Tensor inputs;  // [n x series * time_points]
  // weights[h]: [n x series * time_points]; features[h]: n head features.
  std::vector<Tensor> weights;
  std::vector<std::vector<double>> features;

  std::size_t heads() const { return weights.size(); }
  double weight(std::size_t head, std::size_t sample, std::size_t j, std::size_t k) const {
    return weights[head][(sample * series + j) * time_points + k];
  }
};

// Throws StateError for an unprepared model and ContractError if any head
// feature differs from sum W * x by more than kAdditivityTolerance.
AttributionReport extract_weights(FeatsModel& model, const PanelDataset& data, std::size_t batch_size = 512);

// Per-sample internal components of one head: by series sum_k W x, by time sum_j W x.
struct Components {
  std::vector<double> feature;
  std::vector<std::vector<double>> by_series;  // [series][n]
  std::vector<std::vector<double>> by_time;    // [time][n]
};
Components head_components(const AttributionReport& report, std::size_t head);

// Unbiased sample variance; exactly 0 when all values are equal. Throws
// StatisticsError for fewer than 2 values.
double sample_variance(const std::vector<double>& values);

struct VarianceTable {
  std::size_t head = 0;
  double feature = 0.0;
  std::vector<double> by_series;
  std::vector<double> by_time;
};
VarianceTable variance_decomposition(const AttributionReport& report, std::size_t head);

struct BoxStats {
  std::string component;  // "feature", "series_<j>" or "time_<k>"
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};
// Linear-interpolation quartiles, whiskers at min/max. Needs at least 5 samples.
std::vector<BoxStats> component_distributions(const AttributionReport& report, std::size_t head);
BoxStats box_stats(std::string component, std::vector<double> values);

struct AlignmentTable {
  std::vector<std::vector<double>> correlation;      // signed Pearson r [heads][components]
  std::vector<std::vector<double>> abs_correlation;  // |r|
  // (head, component) pairs maximising total |r|; one per min(heads, components).
  std::vector<std::pair<std::size_t, std::size_t>> assignment;
  double score = 0.0;
  bool exhaustive = true;
  std::vector<std::string> warnings;
};

// Pearson r; 0 when either side has zero variance.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Exhaustive assignment when both sides have at most 8 entries, greedy otherwise.
AlignmentTable align_heads(const std::vector<std::vector<double>>& head_features,
                           const std::vector<std::vector<double>>& components);

// CSV exports (header row, LF newlines).
void write_weights_csv(const AttributionReport& report, const std::filesystem::path& path);
void write_variance_csv(const std::vector<VarianceTable>& tables, const std::filesystem::path& path);
void write_boxstats_csv(const std::vector<std::vector<BoxStats>>& per_head, const std::filesystem::path& path);
void write_alignment_csv(const AlignmentTable& table, const std::vector<std::string>& component_names,
                         const std::filesystem::path& path);

}  // namespace feats::interpret
