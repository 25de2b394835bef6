#pragma once

#include <cstdint>

namespace lordba {

/// IEEE 754 binary16 encoding with round-to-nearest-even. Values beyond the
/// binary16 range map to +-inf; NaN maps to a quiet NaN.
std::uint16_t to_half_bits(double value) noexcept;
double from_half_bits(std::uint16_t bits) noexcept;

/// Narrow to binary16 and widen back.
inline double round_to_half(double value) noexcept { return from_half_bits(to_half_bits(value)); }

inline constexpr double kHalfMax = 65504.0;

}  // namespace lordba
