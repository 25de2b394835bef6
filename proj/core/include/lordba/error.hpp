#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lordba {

enum class Errc {
  shape_mismatch,
  invalid_argument,
  non_convergence,
  not_positive_definite,
  non_finite,
  degenerate_input,
  divergence,
  // container formats
  io_open_failed,
  io_bad_magic,
  io_bad_version,
  io_truncated,
  io_crc_mismatch,
  io_shape,
  io_unrepresentable,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace lordba
