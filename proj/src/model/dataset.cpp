#include "feats/dataset.hpp"

#include <cmath>

#include "feats/errors.hpp"

namespace feats {

const char* to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::Continuous: return "continuous";
    case TargetKind::Binary: return "binary";
    case TargetKind::Multiclass: return "multiclass";
  }
  return "?";
}

const char* to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

TargetKind target_kind_from_string(const std::string& s) {
  if (s == "continuous" || s == "regression") return TargetKind::Continuous;
  if (s == "binary") return TargetKind::Binary;
  if (s == "multiclass") return TargetKind::Multiclass;
  throw ConfigError("unknown target kind '" + s + "'");
}

void PanelDataset::validate() {
  if (weights.empty()) weights.assign(n, 1.0);
  if (sample_ids.empty()) {
    sample_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) sample_ids[i] = static_cast<std::int64_t>(i);
  }
  static_cast<const PanelDataset&>(*this).validate();
}

void PanelDataset::validate() const {
  if (n == 0) throw DataError("dataset has no samples");
  if (series == 0 || time_points == 0) throw DataError("dataset panel has no series or no time points");
  if (x.size() != n * series * time_points)
    throw DataError("panel buffer holds " + std::to_string(x.size()) + " values, expected " +
                    std::to_string(n * series * time_points));
  if (z.size() != n * covariates)
    throw DataError("covariate buffer holds " + std::to_string(z.size()) + " values, expected " +
                    std::to_string(n * covariates));
  if (y.size() != n) throw DataError("expected " + std::to_string(n) + " targets, got " + std::to_string(y.size()));
  if (weights.size() != n) throw DataError("expected " + std::to_string(n) + " weights, got " + std::to_string(weights.size()));
  if (sample_ids.size() != n) throw DataError("expected " + std::to_string(n) + " sample ids");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw DataError("non-finite panel value at flat index " + std::to_string(i));
  for (std::size_t i = 0; i < z.size(); ++i)
    if (!std::isfinite(z[i])) throw DataError("non-finite covariate at flat index " + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y[i])) throw DataError("non-finite target for sample " + std::to_string(sample_ids[i]));
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
      throw DataError("weight of sample " + std::to_string(sample_ids[i]) + " must be positive");
    if (target_kind == TargetKind::Binary && y[i] != 0.0 && y[i] != 1.0)
      throw DataError("binary target of sample " + std::to_string(sample_ids[i]) + " is not 0 or 1");
    if (target_kind == TargetKind::Multiclass) {
      if (y[i] < 0.0 || y[i] >= static_cast<double>(num_classes) || y[i] != std::floor(y[i]))
        throw DataError("class index of sample " + std::to_string(sample_ids[i]) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
  }
  if (target_kind == TargetKind::Multiclass && num_classes < 2) throw DataError("multiclass data needs >= 2 classes");
}

PanelDataset PanelDataset::subset(std::span<const std::size_t> rows) const {
  PanelDataset out;
  out.n = rows.size();
  out.series = series;
  out.time_points = time_points;
  out.covariates = covariates;
  out.target_kind = target_kind;
  out.num_classes = num_classes;
  out.class_names = class_names;
  out.split = split;
  const std::size_t stride = series * time_points;
  out.x.reserve(rows.size() * stride);
  out.z.reserve(rows.size() * covariates);
  for (auto r : rows) {
    if (r >= n) throw DataError("subset row " + std::to_string(r) + " outside dataset of " + std::to_string(n));
    out.x.insert(out.x.end(), x.begin() + static_cast<std::ptrdiff_t>(r * stride),
                 x.begin() + static_cast<std::ptrdiff_t>((r + 1) * stride));
    out.z.insert(out.z.end(), z.begin() + static_cast<std::ptrdiff_t>(r * covariates),
                 z.begin() + static_cast<std::ptrdiff_t>((r + 1) * covariates));
    out.y.push_back(y[r]);
    out.weights.push_back(weights.empty() ? 1.0 : weights[r]);
    out.sample_ids.push_back(sample_ids.empty() ? static_cast<std::int64_t>(r) : sample_ids[r]);
  }
  return out;
}

}  // namespace feats
