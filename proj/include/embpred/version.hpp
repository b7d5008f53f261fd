#pragma once

namespace embpred {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;

}  // namespace embpred
