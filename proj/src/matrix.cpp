#include "nodemixup/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace nodemixup {

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

SparseRows::SparseRows(const Matrix& dense) : cols_(dense.cols()) {
  offsets_.reserve(dense.rows() + 1);
  for (std::size_t r = 0; r < dense.rows(); ++r) push_dense_row(dense.row(r));
}

SparseRows SparseRows::with_cols(std::size_t cols) {
  SparseRows s;
  s.cols_ = cols;
  return s;
}

void SparseRows::push_row(std::span<const std::size_t> cols, std::span<const double> values) {
  if (cols.size() != values.size()) throw Error("SparseRows::push_row: size mismatch");
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] >= cols_) throw Error("SparseRows::push_row: column out of range");
    if (values[k] == 0.0) continue;
    cols_idx_.push_back(cols[k]);
    values_.push_back(values[k]);
  }
  offsets_.push_back(values_.size());
}

void SparseRows::push_dense_row(std::span<const double> dense) {
  if (dense.size() != cols_) throw Error("SparseRows::push_dense_row: width mismatch");
  for (std::size_t c = 0; c < dense.size(); ++c) {
    if (dense[c] != 0.0) {
      cols_idx_.push_back(c);
      values_.push_back(dense[c]);
    }
  }
  offsets_.push_back(values_.size());
}

Matrix SparseRows::to_dense() const {
  Matrix out(rows(), cols_);
  for (std::size_t r = 0; r < rows(); ++r) {
    auto c = row_cols(r);
    auto v = row_values(r);
    for (std::size_t k = 0; k < c.size(); ++k) out(r, c[k]) = v[k];
  }
  return out;
}

Matrix sparse_dense_product(const SparseRows& x, const Matrix& w) {
  if (x.cols() != w.rows()) throw Error("sparse_dense_product: shape mismatch");
  Matrix out(x.rows(), w.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto cols = x.row_cols(r);
    auto vals = x.row_values(r);
    auto dst = out.row(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double a = vals[k];
      auto src = w.row(cols[k]);
      for (std::size_t h = 0; h < dst.size(); ++h) dst[h] += a * src[h];
    }
  }
  return out;
}

Matrix sparse_transpose_product(const SparseRows& x, const Matrix& g) {
  if (x.rows() != g.rows()) throw Error("sparse_transpose_product: shape mismatch");
  Matrix out(x.cols(), g.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto cols = x.row_cols(r);
    auto vals = x.row_values(r);
    auto src = g.row(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double a = vals[k];
      auto dst = out.row(cols[k]);
      for (std::size_t h = 0; h < dst.size(); ++h) dst[h] += a * src[h];
    }
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error("matmul: shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double v = a(i, k);
      if (v == 0.0) continue;
      auto src = b.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += v * src[j];
    }
  }
  return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error("matmul_at_b: shape mismatch");
  Matrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto src = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double v = a(r, i);
      if (v == 0.0) continue;
      auto dst = out.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += v * src[j];
    }
  }
  return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw Error("matmul_a_bt: shape mismatch");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto br = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < ar.size(); ++k) s += ar[k] * br[k];
      out(i, j) = s;
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto dst = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - mx);
      z += dst[c];
    }
    for (double& v : dst) v /= z;
  }
  return out;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace nodemixup
