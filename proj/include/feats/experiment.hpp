#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "feats/metrics.hpp"
#include "feats/model.hpp"
#include "feats/train.hpp"

namespace feats::bench {

inline constexpr int kManifestVersion = 1;

// Fills every default into an experiment config so the manifest echoes exactly
// what ran. Throws ConfigError for unknown sources, model types or missing seed.
//
//   {"seed", "output_dir",
//    "data":  {"source": "generate" | "uea" | "csv", ...},
//    "model": {"type": "feats" | "ffnn", ...},
//    "train": {...}, "baseline": null | {"hidden": [...]},
//    "explain": {"samples", "ridge_grid": {"min", "max", "points"}}}
nlohmann::json resolve_config(const nlohmann::json& config);

TrainConfig train_config_from_json(const nlohmann::json& train, std::uint64_t seed);
FeatsConfig feats_config_from_json(const nlohmann::json& model, const PanelDataset& data, std::uint64_t seed);
FfnnConfig ffnn_config_from_json(const nlohmann::json& model, const PanelDataset& data, std::uint64_t seed);

nlohmann::json report_json(const metrics::Report& report);

std::string sha256_file(const std::filesystem::path& path);

struct ExperimentOutcome {
  std::filesystem::path dir;
  nlohmann::json metrics;
  nlohmann::json manifest;
};

// Runs data loading or generation, training, evaluation and attribution
// exports, writing model.json, metrics.json, history.csv, the interpret CSVs
// and manifest.json into the output directory. `doc` is either a config or a
// manifest from an earlier run (whose echoed config is reused). On failure the
// manifest is still written, flagged as partial, and the error is rethrown.
ExperimentOutcome run_experiment(const nlohmann::json& doc,
                                 const std::optional<std::filesystem::path>& output_dir = std::nullopt);

}  // namespace feats::bench
