#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace feats::io {

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partial file.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

// Throws DataError when the file cannot be opened.
std::string read_text(const std::filesystem::path& path);

}  // namespace feats::io

namespace feats::io {

// Shortest decimal text that parses back to the same double ("nan"/"inf" for non-finite).
std::string format_double(double v);

}  // namespace feats::io
