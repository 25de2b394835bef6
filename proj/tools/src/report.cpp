#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lordba/io.hpp"

namespace lordba::cli {

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::io_open_failed:
      return kUsage;
    case Errc::non_convergence:
    case Errc::not_positive_definite:
    case Errc::divergence:
      return kRuntime;
    default:
      return kValidation;
  }
}

std::string version() { return LORDBA_VERSION_STRING; }

std::string crc_hex(std::uint32_t crc) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", crc);
  return buf;
}

Json file_entry(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  // LBA1/LRF1 end in their own CRC, and the CRC of such a file including
  // its trailer is a constant residue. Hash the content before the trailer.
  std::span<const std::uint8_t> content(bytes);
  const bool trailed = bytes.size() > 4 && (std::memcmp(bytes.data(), "LBA1", 4) == 0 ||
                                            std::memcmp(bytes.data(), "LRF1", 4) == 0);
  if (trailed) content = content.first(bytes.size() - kCrcBytes);
  return Json{{"path", path.string()}, {"crc32", crc_hex(crc32(content))}, {"bytes", bytes.size()}};
}

Json report_header(const std::string& command, Json config, Json inputs) {
  Json j;
  j["tool"] = "lordba";
  j["version"] = version();
  j["command"] = command;
  j["config"] = std::move(config);
  j["inputs"] = std::move(inputs);
  return j;
}

void emit_json(const Json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_open_failed, "cannot write " + path);
  out << text;
  if (!out) throw Error(Errc::io_open_failed, "write failed for " + path);
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m, const std::string& format) {
  std::ostringstream body;
  if (format == "csv") {
    char buf[32];
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        body << (j ? "," : "") << buf;
      }
      body << '\n';
    }
  } else if (format == "npy") {
    std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                       std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + "), }";
    // magic(6) + version(2) + length(2) + dict + padding + '\n' is a multiple of 64
    const std::size_t unpadded = 10 + dict.size() + 1;
    dict.append((64 - unpadded % 64) % 64, ' ');
    dict.push_back('\n');
    body.write("\x93NUMPY\x01\x00", 8);
    const auto len = static_cast<std::uint16_t>(dict.size());
    body.put(static_cast<char>(len & 0xFF));
    body.put(static_cast<char>(len >> 8));
    body << dict;
    for (const double v : m.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 8; ++b) body.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  } else {
    throw Error(Errc::invalid_argument, "unknown matrix format '" + format + "'");
  }
  const std::string text = body.str();
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                 text.size()));
}

Json series_stats(const std::vector<double>& v) {
  if (v.empty()) return Json{{"count", 0}};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return Json{{"count", v.size()}, {"first", v.front()}, {"last", v.back()}, {"min", *lo}, {"max", *hi}};
}

}  // namespace lordba::cli
