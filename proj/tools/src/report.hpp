#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lordba/error.hpp"
#include "lordba/tensor.hpp"

namespace lordba::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,       // bad flags, unreadable or unwritable paths
  kValidation = 3,  // malformed files, inconsistent shapes, rejected parameters
  kRuntime = 4,     // numerical failure during a run
};

int exit_code_for(Errc code) noexcept;

std::string version();
std::string crc_hex(std::uint32_t crc);

/// {"path": ..., "crc32": ..., "bytes": ...} for a file on disk.
Json file_entry(const std::filesystem::path& path);

/// Common envelope: tool name, version, command, resolved config, inputs.
Json report_header(const std::string& command, Json config, Json inputs);

/// Writes JSON to path, or to stdout when path is empty or "-".
void emit_json(const Json& report, const std::string& path);

/// Row-major float64 matrix as .npy (format 1.0) or CSV.
void write_matrix(const std::filesystem::path& path, const DenseMatrix& m, const std::string& format);

/// Summary of a per-iteration series without dumping huge arrays twice.
Json series_stats(const std::vector<double>& v);

}  // namespace lordba::cli
