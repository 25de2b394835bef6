#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lordba/tensor.hpp"

namespace lordba {

/// sign(0) = +1.
inline double sign_of(double x) noexcept { return x >= 0.0 ? 1.0 : -1.0; }

/// Bit-packed +-1 matrix. Bit (i, j) set means +1, clear means -1. Rows are
/// padded to whole 64-bit words and padding bits are always zero.
class SignMatrix {
 public:
  static constexpr std::size_t kWordBits = 64;

  SignMatrix() = default;
  /// All entries -1.
  SignMatrix(std::size_t rows, std::size_t cols);

  /// Entrywise sign with sign(0) = +1.
  static SignMatrix from_dense(const DenseMatrix& m);
  /// Takes ownership of packed words; rejects non-zero padding.
  static SignMatrix from_words(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> words);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t words_per_row() const noexcept { return words_per_row_; }

  bool positive(std::size_t i, std::size_t j) const noexcept {
    return (words_[i * words_per_row_ + j / kWordBits] >> (j % kWordBits)) & 1U;
  }
  double operator()(std::size_t i, std::size_t j) const noexcept { return positive(i, j) ? 1.0 : -1.0; }
  void set(std::size_t i, std::size_t j, bool is_positive) noexcept;

  std::span<const std::uint64_t> row_words(std::size_t i) const noexcept {
    return {words_.data() + i * words_per_row_, words_per_row_};
  }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  DenseMatrix to_dense() const;
  SignMatrix transposed() const;
  std::size_t positive_count() const noexcept;
  bool padding_clear() const noexcept;

  friend bool operator==(const SignMatrix&, const SignMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Number of positions where the two sign matrices differ.
std::size_t hamming_distance(const SignMatrix& a, const SignMatrix& b);

}  // namespace lordba
