#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "nodemixup/graphalg.hpp"
#include "nodemixup/graphio.hpp"
#include "nodemixup/matrix.hpp"

namespace testsupport {

using namespace nodemixup;

inline std::vector<Edge> random_edges(std::size_t n, double p, std::mt19937_64& gen) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (coin(gen)) e.emplace_back(i, j);
  return e;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& gen, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(r, c);
  for (double& v : m.data()) v = normal(gen);
  return m;
}

inline Matrix dense_identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a.data()[k] - b.data()[k]));
  return d;
}

/// All-pairs hop distances by Floyd-Warshall; infinity when unreachable.
inline std::vector<std::vector<double>> floyd_warshall(std::size_t n, const std::vector<Edge>& edges) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (auto [u, v] : edges) {
    if (u == v) continue;
    d[u][v] = d[v][u] = 1.0;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

/// Dense S for a selector: row t = lambda e_t + (1 - lambda) e_p, identity elsewhere.
inline Matrix dense_selector(std::size_t n, const MixSelector& sel) {
  Matrix s = dense_identity(n);
  for (const auto& p : sel) {
    s(p.target, p.target) = p.lambda;
    s(p.target, p.partner) += 1.0 - p.lambda;
  }
  return s;
}

/// Linear CKA through centered Gram matrices (HSIC form).
inline double cka_hsic(const Matrix& x, const Matrix& y) {
  const std::size_t n = x.rows();
  Matrix h(n, n, -1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) h(i, i) += 1.0;
  const Matrix kx = matmul(matmul(h, matmul_a_bt(x, x)), h);
  const Matrix ky = matmul(matmul(h, matmul_a_bt(y, y)), h);
  auto tr_prod = [](const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * b.data()[k];
    return s;
  };
  return tr_prod(kx, ky) / std::sqrt(tr_prod(kx, kx) * tr_prod(ky, ky));
}

/// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
inline Matrix random_orthogonal(std::size_t n, std::mt19937_64& gen) {
  Matrix q = random_matrix(n, n, gen);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += q(i, j) * q(i, k);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
  }
  return q;
}

}  // namespace testsupport
