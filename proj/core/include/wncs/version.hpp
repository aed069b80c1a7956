#pragma once

namespace wncs {

inline constexpr const char* kVersion = "0.1.0";

// Version of the JSON/CSV file formats produced and consumed by this library.
inline constexpr int kSchemaVersion = 1;

}  // namespace wncs
