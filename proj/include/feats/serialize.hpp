#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "feats/model.hpp"

namespace feats {

inline constexpr int kModelFormatVersion = 1;

// Model file: JSON holding the format version, seed provenance, panel shape,
// head configurations, ridge nets, downstream model, penalties, standardiser
// and every parameter. Doubles are written in shortest round-trip form, so a
// reload is bitwise identical.
nlohmann::json model_to_json(const Network& model);
// Throws UnsupportedVersionError for another format version and ParseError for
// anything malformed; no partially initialised model escapes.
std::unique_ptr<Network> model_from_json(const nlohmann::json& doc);

void save_model(const Network& model, const std::filesystem::path& path);
std::unique_ptr<Network> load_model(const std::filesystem::path& path);

}  // namespace feats
