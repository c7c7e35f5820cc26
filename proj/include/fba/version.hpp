#pragma once

namespace fba {

inline constexpr const char* kVersion = "1.0.0";

// Noise generator identity, emitted in output headers so runs can be
// reproduced by any implementation that follows the same algorithms.
inline constexpr const char* kPrngName = "mt19937_64/box-muller";

} // namespace fba
