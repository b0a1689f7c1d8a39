#pragma once

namespace detdiff {

inline constexpr const char* kVersion = "0.1.0";

} // namespace detdiff
