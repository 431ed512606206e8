#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "feats/dataset.hpp"

namespace feats::bench {

struct PanelFiles {
  std::filesystem::path x;                 // sample_id,series_id,time,value
  std::optional<std::filesystem::path> z;  // sample_id,covariate_id,value
  std::filesystem::path y;                 // sample_id,target[,weight]

  // <dir>/<prefix>_X.csv, <dir>/<prefix>_y.csv and, when present, <dir>/<prefix>_Z.csv.
  static PanelFiles in_directory(const std::filesystem::path& dir, const std::string& prefix);
};

// Loads and validates a dense panel. Samples are ordered by ascending sample id;
// series, time and covariate indices must be contiguous from 0. Multiclass
// targets are class indices; `num_classes` 0 infers max index + 1.
// Errors name the file and line: ParseError for malformed text, DataError for
// missing or duplicate cells.
PanelDataset load_panel_csv(const PanelFiles& files, TargetKind kind, std::size_t num_classes = 0);

// Writes the three files (Z only when the panel has covariates), shortest round-trip decimals.
void write_panel_csv(const PanelDataset& data, const PanelFiles& files);

// Equal-length, no-missing-value `.ts` files. Classes are indexed in the order
// of the @classLabel declaration. Throws UnsupportedFeatureError for
// variable-length, timestamped or missing-value files and DataError for labels
// not declared in the header.
PanelDataset load_uea_ts(const std::filesystem::path& path);

}  // namespace feats::bench
