#include "lordba/io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "lordba/half.hpp"

namespace lordba {
namespace {

constexpr char kAdapterMagic[4] = {'L', 'B', 'A', '1'};
constexpr char kFactorMagic[4] = {'L', 'R', 'F', '1'};
constexpr std::uint32_t kMaxDim = 1U << 24;

std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void finish() { uint(crc32(out_)); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  template <typename U>
  U uint() {
    if (pos_ + sizeof(U) > in_.size()) throw Error(Errc::io_truncated, "unexpected end of data");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  bool magic(const char (&expected)[4]) {
    if (in_.size() < 4) throw Error(Errc::io_truncated, "shorter than the magic number");
    pos_ = 4;
    return std::memcmp(in_.data(), expected, 4) == 0;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

// Common prologue: size floor, magic, version, flags.
void check_prologue(Reader& reader, std::span<const std::uint8_t> bytes, const char (&magic)[4],
                    std::size_t header_bytes, const char* what) {
  if (bytes.size() < header_bytes + kCrcBytes) {
    throw Error(Errc::io_truncated, std::string(what) + ": file has only " +
                                        std::to_string(bytes.size()) + " bytes");
  }
  if (!reader.magic(magic)) throw Error(Errc::io_bad_magic, std::string(what) + ": wrong magic");
  const auto version = reader.uint<std::uint16_t>();
  const auto flags = reader.uint<std::uint16_t>();
  if (version != kFormatVersion || flags != 0) {
    throw Error(Errc::io_bad_version, std::string(what) + ": version " + std::to_string(version) +
                                          " flags " + std::to_string(flags));
  }
}

void check_size_and_crc(std::span<const std::uint8_t> bytes, std::size_t expected,
                        const char* what) {
  if (bytes.size() < expected) {
    throw Error(Errc::io_truncated, std::string(what) + ": expected " + std::to_string(expected) +
                                        " bytes, got " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw Error(Errc::io_shape, std::string(what) + ": " +
                                    std::to_string(bytes.size() - expected) + " trailing bytes");
  }
  const std::size_t body = expected - kCrcBytes;
  Reader tail(bytes.subspan(body));
  if (tail.uint<std::uint32_t>() != crc32(bytes.first(body))) {
    throw Error(Errc::io_crc_mismatch, std::string(what) + ": checksum mismatch");
  }
}

void check_dim(std::uint32_t v, const char* name) {
  if (v == 0 || v > kMaxDim) {
    throw Error(Errc::io_shape, std::string("dimension ") + name + " = " + std::to_string(v));
  }
}

void write_half(Writer& w, double v, const char* name) {
  const std::uint16_t bits = to_half_bits(v);
  if (!std::isfinite(from_half_bits(bits))) {
    throw Error(Errc::io_unrepresentable,
                std::string("scale ") + name + " = " + std::to_string(v) + " overflows binary16");
  }
  w.uint(bits);
}

Vector read_halves(Reader& r, std::size_t n) {
  Vector out(n);
  for (double& v : out) {
    v = from_half_bits(r.uint<std::uint16_t>());
    if (!std::isfinite(v)) throw Error(Errc::io_shape, "non-finite binary16 scale");
  }
  return out;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - done, std::numeric_limits<uInt>::max());
    crc = ::crc32(crc, bytes.data() + done, static_cast<uInt>(chunk));
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::size_t adapter_file_bytes(std::size_t n, std::size_t m, std::size_t r, std::size_t ell) {
  const std::size_t carrier_words = r * words_for(n) + r * words_for(m);
  return kAdapterHeaderBytes + 8 * carrier_words + 2 * ell * (n + r + m) + kCrcBytes;
}

std::uint64_t adapter_payload_bits(std::size_t n, std::size_t m, std::size_t r, std::size_t ell) {
  const std::uint64_t carriers = std::uint64_t{r} * n + std::uint64_t{r} * m;
  return carriers + 16 * std::uint64_t{ell} * (n + r + m);
}

std::vector<std::uint8_t> encode_adapter(const LoRDBAAdapter& adapter) {
  adapter.validate();
  const std::size_t n = adapter.in_features();
  const std::size_t r = adapter.carrier_rank();
  const std::size_t m = adapter.out_features();
  Writer w;
  w.bytes(kAdapterMagic, 4);
  w.uint(kFormatVersion);
  w.uint(std::uint16_t{0});
  for (const std::size_t v : {n, m, r, adapter.envelope_rank(), adapter.r0_ref}) {
    w.uint(static_cast<std::uint32_t>(v));
  }
  // B1 columns are the reduction axis of the first product.
  const SignMatrix b1_columns = adapter.B1.transposed();
  for (const std::uint64_t word : b1_columns.words()) w.uint(word);
  for (const std::uint64_t word : adapter.B2.words()) w.uint(word);
  for (const ScaleEnvelope& env : adapter.envelopes) {
    for (const double v : env.alpha) write_half(w, v, "alpha");
    for (const double v : env.beta) write_half(w, v, "beta");
    for (const double v : env.gamma) write_half(w, v, "gamma");
  }
  w.finish();
  return std::move(w.data());
}

LoRDBAAdapter decode_adapter(std::span<const std::uint8_t> bytes) {
  Reader reader(bytes);
  check_prologue(reader, bytes, kAdapterMagic, kAdapterHeaderBytes, "LBA1");
  const auto n = reader.uint<std::uint32_t>();
  const auto m = reader.uint<std::uint32_t>();
  const auto r = reader.uint<std::uint32_t>();
  const auto ell = reader.uint<std::uint32_t>();
  const auto r0 = reader.uint<std::uint32_t>();
  check_dim(n, "N");
  check_dim(m, "M");
  check_dim(r, "R");
  check_dim(ell, "l");
  check_dim(r0, "r0");
  check_size_and_crc(bytes, adapter_file_bytes(n, m, r, ell), "LBA1");

  auto read_words = [&](std::size_t count) {
    std::vector<std::uint64_t> words(count);
    for (auto& word : words) word = reader.uint<std::uint64_t>();
    return words;
  };
  LoRDBAAdapter out;
  try {
    out.B1 = SignMatrix::from_words(r, n, read_words(r * words_for(n))).transposed();
    out.B2 = SignMatrix::from_words(r, m, read_words(r * words_for(m)));
  } catch (const Error& e) {
    throw Error(Errc::io_shape, std::string("LBA1 carriers: ") + e.what());
  }
  for (std::uint32_t e = 0; e < ell; ++e) {
    ScaleEnvelope env;
    env.alpha = read_halves(reader, n);
    env.beta = read_halves(reader, r);
    env.gamma = read_halves(reader, m);
    out.envelopes.push_back(std::move(env));
  }
  out.r0_ref = r0;
  return out;
}

std::vector<std::uint8_t> encode_factors(const LoRAFactors& factors) {
  factors.validate();
  Writer w;
  w.bytes(kFactorMagic, 4);
  w.uint(kFormatVersion);
  w.uint(std::uint16_t{0});
  w.uint(static_cast<std::uint32_t>(factors.in_features()));
  w.uint(static_cast<std::uint32_t>(factors.out_features()));
  w.uint(static_cast<std::uint32_t>(factors.rank()));
  for (const DenseMatrix* f : {&factors.A, &factors.B}) {
    for (const double v : f->data()) {
      const auto narrow = static_cast<float>(v);
      if (!std::isfinite(narrow)) {
        throw Error(Errc::io_unrepresentable, "factor entry overflows binary32");
      }
      w.f32(narrow);
    }
  }
  w.finish();
  return std::move(w.data());
}

LoRAFactors decode_factors(std::span<const std::uint8_t> bytes) {
  Reader reader(bytes);
  check_prologue(reader, bytes, kFactorMagic, kFactorHeaderBytes, "LRF1");
  const auto n = reader.uint<std::uint32_t>();
  const auto m = reader.uint<std::uint32_t>();
  const auto r0 = reader.uint<std::uint32_t>();
  check_dim(n, "N");
  check_dim(m, "M");
  check_dim(r0, "r0");
  const std::size_t expected =
      kFactorHeaderBytes + 4 * (std::size_t{n} * r0 + std::size_t{m} * r0) + kCrcBytes;
  check_size_and_crc(bytes, expected, "LRF1");

  LoRAFactors out{DenseMatrix(n, r0), DenseMatrix(m, r0)};
  for (DenseMatrix* f : {&out.A, &out.B}) {
    for (double& v : f->data()) {
      v = reader.f32();
      if (!std::isfinite(v)) throw Error(Errc::io_shape, "LRF1: non-finite factor entry");
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_open_failed, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_open_failed, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_open_failed, "write failed for " + path.string());
}

void save_adapter(const std::filesystem::path& path, const LoRDBAAdapter& adapter) {
  write_file(path, encode_adapter(adapter));
}

LoRDBAAdapter load_adapter(const std::filesystem::path& path) {
  return decode_adapter(read_file(path));
}

void save_factors(const std::filesystem::path& path, const LoRAFactors& factors) {
  write_file(path, encode_factors(factors));
}

LoRAFactors load_factors(const std::filesystem::path& path) {
  return decode_factors(read_file(path));
}

}  // namespace lordba
