#include "lordba/half.hpp"

#include <cmath>

namespace lordba {

std::uint16_t to_half_bits(double value) noexcept {
  const std::uint16_t sign = std::signbit(value) ? 0x8000 : 0x0000;
  if (std::isnan(value)) return 0x7E00;
  const double a = std::abs(value);
  if (a >= 65520.0) return sign | 0x7C00;  // rounds past the largest finite half
  if (a < 0x1p-14) {
    // subnormal: units of 2^-24, a carry into 1024 yields the smallest normal
    const auto units = static_cast<std::uint16_t>(std::nearbyint(a * 0x1p24));
    return sign | units;
  }
  int exp2 = 0;
  const double frac = std::frexp(a, &exp2);  // a = frac * 2^exp2, frac in [0.5, 1)
  int exponent = exp2 - 1;
  auto mantissa = static_cast<std::uint32_t>(std::nearbyint((frac * 2.0 - 1.0) * 1024.0));
  if (mantissa == 1024) {
    mantissa = 0;
    ++exponent;
  }
  if (exponent > 15) return sign | 0x7C00;
  return static_cast<std::uint16_t>(sign | ((exponent + 15) << 10) | mantissa);
}

double from_half_bits(std::uint16_t bits) noexcept {
  const double sign = (bits & 0x8000) ? -1.0 : 1.0;
  const int exponent = (bits >> 10) & 0x1F;
  const int mantissa = bits & 0x3FF;
  if (exponent == 0) return sign * std::ldexp(static_cast<double>(mantissa), -24);
  if (exponent == 31) return mantissa == 0 ? sign * INFINITY : NAN;
  return sign * std::ldexp(1.0 + mantissa / 1024.0, exponent - 15);
}

}  // namespace lordba
