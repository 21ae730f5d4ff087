#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nodemixup {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Row-compressed storage for feature matrices that are mostly zeros
/// (bag-of-words citation features). Rows keep their columns in ascending order.
class SparseRows {
 public:
  SparseRows() = default;
  explicit SparseRows(const Matrix& dense);

  std::size_t rows() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_cols(std::size_t r) const {
    return {cols_idx_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  Matrix to_dense() const;

  /// Incremental construction: begin with `cols`, push rows in order.
  static SparseRows with_cols(std::size_t cols);
  void push_row(std::span<const std::size_t> cols, std::span<const double> values);
  void push_dense_row(std::span<const double> dense);

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> cols_idx_;
  std::vector<double> values_;
};

/// out = X * W where X is sparse (M x F) and W dense (F x H).
Matrix sparse_dense_product(const SparseRows& x, const Matrix& w);
/// out = X^T * G (F x H) for sparse X (M x F), dense G (M x H).
Matrix sparse_transpose_product(const SparseRows& x, const Matrix& g);
/// out = A * B for dense matrices.
Matrix matmul(const Matrix& a, const Matrix& b);
/// out = A^T * B.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
/// out = A * B^T.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);
/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);
/// Index of the largest entry; lowest index wins ties.
std::size_t argmax(std::span<const double> v);

}  // namespace nodemixup
