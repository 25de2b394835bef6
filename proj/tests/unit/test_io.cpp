#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "lordba/half.hpp"
#include "lordba/io.hpp"
#include "oracles.hpp"

using namespace lordba;

namespace {

LoRDBAAdapter sample_adapter(std::size_t n, std::size_t r, std::size_t m, std::size_t ell,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  LoRDBAAdapter a;
  a.B1 = oracle::random_signs(n, r, rng);
  a.B2 = oracle::random_signs(r, m, rng);
  for (std::size_t e = 0; e < ell; ++e) {
    ScaleEnvelope env = ScaleEnvelope::zeros(n, r, m);
    for (double& v : env.alpha) v = u(rng);
    for (double& v : env.beta) v = u(rng);
    for (double& v : env.gamma) v = u(rng);
    a.envelopes.push_back(env);
  }
  a.r0_ref = r + 1;
  return a;
}

Errc decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    (void)decode_adapter(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode succeeded");
  return Errc::invalid_argument;
}

void patch_crc(std::vector<std::uint8_t>& bytes) {
  const std::uint32_t c =
      crc32(std::span<const std::uint8_t>(bytes.data(), bytes.size() - kCrcBytes));
  for (int b = 0; b < 4; ++b) bytes[bytes.size() - 4 + b] = static_cast<std::uint8_t>(c >> (8 * b));
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 | static_cast<std::uint32_t>(b[off + 3]) << 24;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("crc32 check value") {
    const char* text = "123456789";
    const auto* p = reinterpret_cast<const std::uint8_t*>(text);
    CHECK(crc32(std::span<const std::uint8_t>(p, 9)) == 0xCBF43926u);
  }

  TEST_CASE("adapter layout") {
    const LoRDBAAdapter a = sample_adapter(8, 4, 8, 1, 1);
    const auto bytes = encode_adapter(a);
    CHECK(bytes.size() == adapter_file_bytes(8, 8, 4, 1));
    // header 28, B1 4 columns x 1 word, B2 4 rows x 1 word, 20 halves, CRC
    CHECK(bytes.size() == 28 + 32 + 32 + 40 + 4);
    CHECK(adapter_payload_bits(8, 8, 4, 1) == 384);
    CHECK(std::memcmp(bytes.data(), "LBA1", 4) == 0);
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    CHECK(read_u32(bytes, 8) == 8);
    CHECK(read_u32(bytes, 12) == 8);
    CHECK(read_u32(bytes, 16) == 4);
    CHECK(read_u32(bytes, 20) == 1);
    CHECK(read_u32(bytes, 24) == 5);
    // first B1 word holds column 0, least significant bit first
    std::uint64_t col0 = 0;
    for (int b = 0; b < 8; ++b) col0 |= static_cast<std::uint64_t>(bytes[28 + b]) << (8 * b);
    for (std::size_t i = 0; i < 8; ++i) CHECK(((col0 >> i) & 1U) == (a.B1.positive(i, 0) ? 1U : 0U));
    CHECK(read_u32(bytes, bytes.size() - 4) ==
          crc32(std::span<const std::uint8_t>(bytes.data(), bytes.size() - 4)));
  }

  TEST_CASE("payload bits equal the storage formula") {
    for (std::size_t n : {1, 63, 64, 65, 200})
      for (std::size_t r : {1, 3, 16})
        for (std::size_t ell : {1, 2}) {
          const std::size_t m = n + 7;
          CHECK(adapter_payload_bits(n, m, r, ell) == storage_bits(n, m, r, ell));
          const std::size_t words = r * ((n + 63) / 64) + r * ((m + 63) / 64);
          CHECK(adapter_file_bytes(n, m, r, ell) == 28 + 8 * words + 2 * ell * (n + r + m) + 4);
        }
  }

  TEST_CASE("round trips") {
    const LoRDBAAdapter a = sample_adapter(70, 5, 130, 2, 2);
    const auto bytes = encode_adapter(a);
    const LoRDBAAdapter back = decode_adapter(bytes);
    CHECK(back.B1 == a.B1);
    CHECK(back.B2 == a.B2);
    CHECK(back.r0_ref == a.r0_ref);
    for (std::size_t e = 0; e < 2; ++e)
      for (std::size_t i = 0; i < 70; ++i)
        CHECK(back.envelopes[e].alpha[i] == round_to_half(a.envelopes[e].alpha[i]));
    CHECK(encode_adapter(back) == bytes);

    const auto dir = std::filesystem::temp_directory_path() / "lordba_io_test";
    std::filesystem::create_directories(dir);
    save_adapter(dir / "a.lba1", a);
    const LoRDBAAdapter loaded = load_adapter(dir / "a.lba1");
    save_adapter(dir / "b.lba1", loaded);
    CHECK(read_file(dir / "a.lba1") == read_file(dir / "b.lba1"));

    std::mt19937_64 rng(3);
    LoRAFactors f{oracle::random_matrix(9, 3, rng), oracle::random_matrix(7, 3, rng)};
    save_factors(dir / "f.lrf1", f);
    const LoRAFactors g = load_factors(dir / "f.lrf1");
    for (std::size_t v = 0; v < f.A.size(); ++v)
      CHECK(g.A.data()[v] == static_cast<double>(static_cast<float>(f.A.data()[v])));
    CHECK(encode_factors(g) == encode_factors(f));
    CHECK(encode_factors(f).size() == kFactorHeaderBytes + 4 * (27 + 21) + kCrcBytes);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("corruption is detected with distinct codes") {
    const auto good = encode_adapter(sample_adapter(8, 4, 8, 1, 4));

    auto flipped = good;
    flipped[40] ^= 0x10;
    CHECK(decode_error(flipped) == Errc::io_crc_mismatch);

    auto magic = good;
    magic[0] = 'X';
    CHECK(decode_error(magic) == Errc::io_bad_magic);

    auto version = good;
    version[4] = 2;
    patch_crc(version);
    CHECK(decode_error(version) == Errc::io_bad_version);

    auto shortened = good;
    shortened.resize(good.size() - 9);
    CHECK(decode_error(shortened) == Errc::io_truncated);
    CHECK(decode_error(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)) ==
          Errc::io_truncated);

    auto longer = good;
    longer.insert(longer.end() - 4, 0);
    patch_crc(longer);
    CHECK(decode_error(longer) == Errc::io_shape);

    auto dims = good;
    dims[16] = 0;  // R = 0
    patch_crc(dims);
    CHECK(decode_error(dims) == Errc::io_shape);

    auto padding = good;
    padding[28 + 7] |= 0x80;  // bit 63 of column 0, beyond N = 8
    patch_crc(padding);
    CHECK(decode_error(padding) == Errc::io_shape);

    auto fbytes = encode_factors(LoRAFactors{DenseMatrix(2, 1, 1.0), DenseMatrix(3, 1, 2.0)});
    fbytes[kFactorHeaderBytes] ^= 1;
    CHECK_THROWS_AS(decode_factors(fbytes), Error);

    CHECK_THROWS_AS(load_adapter("/nonexistent/dir/x.lba1"), Error);
  }

  TEST_CASE("scales beyond binary16 are rejected") {
    LoRDBAAdapter a = sample_adapter(4, 2, 4, 1, 5);
    a.envelopes[0].beta[1] = 1e6;
    try {
      (void)encode_adapter(a);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::io_unrepresentable);
    }
  }
}
