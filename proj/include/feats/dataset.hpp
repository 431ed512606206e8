#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace feats {

enum class TargetKind { Continuous, Binary, Multiclass };
enum class Split { Train, Validation, Test };

const char* to_string(TargetKind kind);
const char* to_string(Split split);
TargetKind target_kind_from_string(const std::string& s);

/// n samples of an m x (T+1) panel, optional static covariates, targets and weights.
///
/// `x` is sample-major, then series, then time: x[(i * series + j) * time_points + k].
/// Multiclass targets hold class indices in [0, num_classes) stored as doubles.
struct PanelDataset {
  std::size_t n = 0;
  std::size_t series = 0;
  std::size_t time_points = 0;
  std::size_t covariates = 0;
  std::vector<double> x;
  std::vector<double> z;
  std::vector<double> y;
  std::vector<double> weights;
  std::vector<std::int64_t> sample_ids;
  TargetKind target_kind = TargetKind::Continuous;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;
  Split split = Split::Train;

  double x_at(std::size_t i, std::size_t j, std::size_t k) const { return x[(i * series + j) * time_points + k]; }
  std::span<const double> sample(std::size_t i) const {
    return std::span<const double>(x).subspan(i * series * time_points, series * time_points);
  }
  std::span<const double> covariate_row(std::size_t i) const {
    return std::span<const double>(z).subspan(i * covariates, covariates);
  }

  // Fills missing weights and ids with defaults, then checks every invariant:
  // buffer sizes, finite values, positive weights, class indices in range.
  // Throws DataError describing the first violation.
  void validate();
  void validate() const;

  PanelDataset subset(std::span<const std::size_t> rows) const;
};

}  // namespace feats
