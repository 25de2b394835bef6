#include "lordba/sign_matrix.hpp"

#include <bit>
#include <string>

namespace lordba {
namespace {

std::size_t words_for(std::size_t cols) {
  return (cols + SignMatrix::kWordBits - 1) / SignMatrix::kWordBits;
}

std::uint64_t padding_mask(std::size_t cols) {
  const std::size_t used = cols % SignMatrix::kWordBits;
  return used == 0 ? 0 : ~((std::uint64_t{1} << used) - 1);
}

}  // namespace

SignMatrix::SignMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), words_per_row_(words_for(cols)), words_(rows * words_for(cols), 0) {}

SignMatrix SignMatrix::from_dense(const DenseMatrix& m) {
  SignMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out.set(i, j, m(i, j) >= 0.0);
  return out;
}

SignMatrix SignMatrix::from_words(std::size_t rows, std::size_t cols,
                                  std::vector<std::uint64_t> words) {
  SignMatrix out(rows, cols);
  if (words.size() != out.words_.size()) {
    throw Error(Errc::shape_mismatch, "sign matrix: expected " +
                                          std::to_string(out.words_.size()) + " words, got " +
                                          std::to_string(words.size()));
  }
  out.words_ = std::move(words);
  if (!out.padding_clear()) throw Error(Errc::invalid_argument, "sign matrix: padding bits set");
  return out;
}

void SignMatrix::set(std::size_t i, std::size_t j, bool is_positive) noexcept {
  std::uint64_t& word = words_[i * words_per_row_ + j / kWordBits];
  const std::uint64_t bit = std::uint64_t{1} << (j % kWordBits);
  word = is_positive ? (word | bit) : (word & ~bit);
}

DenseMatrix SignMatrix::to_dense() const {
  DenseMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(i, j) = (*this)(i, j);
  return out;
}

SignMatrix SignMatrix::transposed() const {
  SignMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      if (positive(i, j)) out.set(j, i, true);
  return out;
}

std::size_t SignMatrix::positive_count() const noexcept {
  std::size_t n = 0;
  for (const std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool SignMatrix::padding_clear() const noexcept {
  const std::uint64_t mask = padding_mask(cols_);
  if (mask == 0 || words_per_row_ == 0) return true;
  for (std::size_t i = 0; i < rows_; ++i)
    if (words_[(i + 1) * words_per_row_ - 1] & mask) return false;
  return true;
}

std::size_t hamming_distance(const SignMatrix& a, const SignMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Errc::shape_mismatch, "hamming_distance: shapes differ");
  }
  std::size_t n = 0;
  const auto aw = a.words();
  const auto bw = b.words();
  for (std::size_t i = 0; i < aw.size(); ++i) n += static_cast<std::size_t>(std::popcount(aw[i] ^ bw[i]));
  return n;
}

}  // namespace lordba
