#pragma once

namespace feats {
inline constexpr const char* kVersion = "0.1.0";
}
