#pragma once

namespace typoesl {

inline constexpr const char* kVersion = "0.1.0";
/// Bumped whenever a report layout changes.
inline constexpr int kReportFormat = 1;

}  // namespace typoesl
