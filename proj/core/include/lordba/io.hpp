#pragma once

// On-disk containers. All integers are little-endian.
//
// LBA1 (adapter):
//   offset 0   "LBA1"
//          4   u16 version (1), u16 flags (0)
//          8   u32 N, M, R, l, r0
//         28   B1 column-major: R columns of ceil(N/64) u64 words each
//              B2 row-major:    R rows    of ceil(M/64) u64 words each
//              per envelope: alpha[N], beta[R], gamma[M] as binary16
//        end   u32 CRC-32 of every preceding byte
//
// LRF1 (LoRA factors):
//   "LRF1", u16 version (1), u16 flags (0), u32 N, M, r0,
//   A (N x r0) then B (M x r0), row-major binary32, u32 CRC-32.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lordba/adapter.hpp"

namespace lordba {

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kAdapterHeaderBytes = 28;
inline constexpr std::size_t kFactorHeaderBytes = 20;
inline constexpr std::size_t kCrcBytes = 4;

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

/// Exact LBA1 file size for the given shape.
std::size_t adapter_file_bytes(std::size_t n, std::size_t m, std::size_t r, std::size_t ell);
/// Bits in an LBA1 file that carry carrier signs or scale values; equals storage_bits.
std::uint64_t adapter_payload_bits(std::size_t n, std::size_t m, std::size_t r, std::size_t ell);

/// Throws Errc::io_unrepresentable when a scale overflows binary16.
std::vector<std::uint8_t> encode_adapter(const LoRDBAAdapter& adapter);
/// Throws io_truncated, io_bad_magic, io_bad_version, io_crc_mismatch or io_shape.
LoRDBAAdapter decode_adapter(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_factors(const LoRAFactors& factors);
LoRAFactors decode_factors(std::span<const std::uint8_t> bytes);

void save_adapter(const std::filesystem::path& path, const LoRDBAAdapter& adapter);
LoRDBAAdapter load_adapter(const std::filesystem::path& path);
void save_factors(const std::filesystem::path& path, const LoRAFactors& factors);
LoRAFactors load_factors(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace lordba
