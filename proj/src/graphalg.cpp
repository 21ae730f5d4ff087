#include "nodemixup/graphalg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace nodemixup {

CsrGraph CsrGraph::from_triplets(std::size_t n, std::vector<Triplet> t) {
  for (const auto& e : t)
    if (e.row >= n || e.col >= n) throw Error("CsrGraph: entry outside the node range");
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrGraph g;
  g.n_ = n;
  g.offsets_.assign(n + 1, 0);
  for (std::size_t k = 0; k < t.size();) {
    std::size_t j = k;
    double w = 0.0;
    while (j < t.size() && t[j].row == t[k].row && t[j].col == t[k].col) w += t[j++].weight;
    if (w > 0.0) {
      g.cols_.push_back(t[k].col);
      g.weights_.push_back(w);
      ++g.offsets_[t[k].row + 1];
    }
    k = j;
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  return g;
}

CsrGraph CsrGraph::from_edges(std::size_t n, std::span<const Edge> edges) {
  std::vector<Triplet> t;
  t.reserve(edges.size() * 2);
  std::set<Edge> seen;
  for (auto [u, v] : edges) {
    Edge key{std::min(u, v), std::max(u, v)};
    if (!seen.insert(key).second) continue;
    t.push_back({u, v, 1.0});
    if (u != v) t.push_back({v, u, 1.0});
  }
  return from_triplets(n, std::move(t));
}

double CsrGraph::weight(NodeId i, NodeId j) const {
  auto nb = neighbors(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) return 0.0;
  return weights(i)[static_cast<std::size_t>(it - nb.begin())];
}

bool CsrGraph::is_symmetric(double tol) const {
  for (NodeId i = 0; i < n_; ++i) {
    auto nb = neighbors(i);
    auto w = weights(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const double back = weight(nb[k], i);
      if (back == 0.0 || std::abs(back - w[k]) > tol) return false;
    }
  }
  return true;
}

Matrix CsrGraph::to_dense() const {
  Matrix m(n_, n_);
  for (NodeId i = 0; i < n_; ++i) {
    auto nb = neighbors(i);
    auto w = weights(i);
    for (std::size_t k = 0; k < nb.size(); ++k) m(i, nb[k]) = w[k];
  }
  return m;
}

CsrGraph add_self_loops(const CsrGraph& g) {
  std::vector<CsrGraph::Triplet> t;
  t.reserve(g.num_entries() + g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    auto nb = g.neighbors(i);
    auto w = g.weights(i);
    bool has_self = false;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      t.push_back({i, nb[k], w[k]});
      has_self = has_self || nb[k] == i;
    }
    if (!has_self) t.push_back({i, i, 1.0});
  }
  return CsrGraph::from_triplets(g.num_nodes(), std::move(t));
}

CsrGraph sym_normalize(const CsrGraph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt(n);
  for (NodeId i = 0; i < n; ++i) {
    double d = 0.0;
    for (double w : g.weights(i)) d += w;
    if (!(d > 0.0)) throw Error("sym_normalize: node " + std::to_string(i) + " has zero degree");
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  std::vector<CsrGraph::Triplet> t;
  t.reserve(g.num_entries());
  for (NodeId i = 0; i < n; ++i) {
    auto nb = g.neighbors(i);
    auto w = g.weights(i);
    for (std::size_t k = 0; k < nb.size(); ++k)
      t.push_back({i, nb[k], inv_sqrt[i] * w[k] * inv_sqrt[nb[k]]});
  }
  return CsrGraph::from_triplets(n, std::move(t));
}

CsrGraph identity_adjacency(std::size_t n) {
  if (n == 0) throw Error("identity_adjacency: n must be >= 1");
  std::vector<CsrGraph::Triplet> t;
  t.reserve(n);
  for (NodeId i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return CsrGraph::from_triplets(n, std::move(t));
}

std::vector<std::size_t> bfs_distances(const CsrGraph& g, std::span<const NodeId> sources) {
  if (sources.empty()) throw Error("bfs_distances: no sources");
  std::vector<std::size_t> dist(g.num_nodes(), kUnreachable);
  std::vector<NodeId> frontier;
  for (NodeId s : sources) {
    if (s >= g.num_nodes()) throw Error("bfs_distances: source out of range");
    if (dist[s] != 0) {
      dist[s] = 0;
      frontier.push_back(s);
    }
  }
  std::size_t head = 0;
  while (head < frontier.size()) {
    const NodeId u = frontier[head++];
    for (NodeId v : g.neighbors(u)) {
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        frontier.push_back(v);
      }
    }
  }
  return dist;
}

GraphShape diameter_and_components(const CsrGraph& g, std::size_t exact_limit) {
  const std::size_t n = g.num_nodes();
  GraphShape shape;
  shape.component.assign(n, kUnreachable);
  std::vector<std::vector<NodeId>> members;
  for (NodeId s = 0; s < n; ++s) {
    if (shape.component[s] != kUnreachable) continue;
    const NodeId src[] = {s};
    auto dist = bfs_distances(g, src);
    std::vector<NodeId> comp;
    for (NodeId v = 0; v < n; ++v)
      if (dist[v] != kUnreachable) {
        shape.component[v] = members.size();
        comp.push_back(v);
      }
    members.push_back(std::move(comp));
  }
  shape.num_components = members.size();

  auto eccentricity = [&](NodeId s, NodeId* farthest) {
    const NodeId src[] = {s};
    auto dist = bfs_distances(g, src);
    std::size_t ecc = 0;
    for (NodeId v = 0; v < n; ++v)
      if (dist[v] != kUnreachable && dist[v] > ecc) {
        ecc = dist[v];
        if (farthest) *farthest = v;
      }
    return ecc;
  };

  if (n <= exact_limit) {
    for (NodeId s = 0; s < n; ++s) shape.diameter = std::max(shape.diameter, eccentricity(s, nullptr));
  } else {
    shape.exact = false;
    for (const auto& comp : members) {
      NodeId far = comp.front();
      eccentricity(comp.front(), &far);
      shape.diameter = std::max(shape.diameter, eccentricity(far, nullptr));
    }
  }
  return shape;
}

void validate_selector(const MixSelector& sel, std::size_t n) {
  std::vector<char> is_target(n, 0);
  for (const auto& p : sel) {
    if (p.target >= n || p.partner >= n) throw Error("mix selector: node id out of range");
    if (!(p.lambda >= 0.0 && p.lambda <= 1.0)) throw Error("mix selector: lambda outside [0, 1]");
    if (is_target[p.target]) throw Error("mix selector: repeated target " + std::to_string(p.target));
    is_target[p.target] = 1;
  }
  for (const auto& p : sel)
    if (is_target[p.partner])
      throw Error("mix selector: partner " + std::to_string(p.partner) + " is also a target");
}

CsrGraph mix_adjacency(const CsrGraph& a, const MixSelector& sel) {
  const std::size_t n = a.num_nodes();
  validate_selector(sel, n);
  if (sel.empty()) return a;

  // S rows and S^T rows as (index, coefficient) lists; zero coefficients dropped
  struct Coef {
    NodeId idx;
    double c;
  };
  std::vector<std::vector<Coef>> s_rows(n), st_rows(n);
  std::vector<char> mixed(n, 0);
  for (const auto& p : sel) mixed[p.target] = 1;
  for (NodeId i = 0; i < n; ++i)
    if (!mixed[i]) s_rows[i].push_back({i, 1.0});
  for (const auto& p : sel) {
    auto& row = s_rows[p.target];
    if (p.lambda != 0.0) row.push_back({p.target, p.lambda});
    if (p.lambda != 1.0) row.push_back({p.partner, 1.0 - p.lambda});
  }
  for (NodeId r = 0; r < n; ++r)
    for (const auto& e : s_rows[r]) st_rows[e.idx].push_back({r, e.c});

  std::vector<double> b_acc(n, 0.0), c_acc(n, 0.0);
  std::vector<NodeId> b_touched, c_touched;
  std::vector<char> b_seen(n, 0), c_seen(n, 0);
  std::vector<CsrGraph::Triplet> out;
  out.reserve(a.num_entries() + 4 * sel.size());

  for (NodeId r = 0; r < n; ++r) {
    // row r of B = S A
    for (const auto& s : s_rows[r]) {
      auto nb = a.neighbors(s.idx);
      auto w = a.weights(s.idx);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        if (!b_seen[nb[k]]) {
          b_seen[nb[k]] = 1;
          b_touched.push_back(nb[k]);
        }
        b_acc[nb[k]] += s.c * w[k];
      }
    }
    std::sort(b_touched.begin(), b_touched.end());
    // row r of C = B S^T
    for (NodeId m : b_touched) {
      for (const auto& st : st_rows[m]) {
        if (!c_seen[st.idx]) {
          c_seen[st.idx] = 1;
          c_touched.push_back(st.idx);
        }
        c_acc[st.idx] += b_acc[m] * st.c;
      }
      b_acc[m] = 0.0;
      b_seen[m] = 0;
    }
    b_touched.clear();
    // keep the upper triangle and mirror it so the result is exactly symmetric
    for (NodeId c : c_touched) {
      if (c >= r && c_acc[c] > 0.0) {
        out.push_back({r, c, c_acc[c]});
        if (c != r) out.push_back({c, r, c_acc[c]});
      }
      c_acc[c] = 0.0;
      c_seen[c] = 0;
    }
    c_touched.clear();
  }
  return CsrGraph::from_triplets(n, std::move(out));
}

Matrix spmm(const CsrGraph& a, const Matrix& x) {
  if (a.num_nodes() != x.rows()) throw Error("spmm: shape mismatch");
  Matrix out(x.rows(), x.cols());
  for (NodeId i = 0; i < a.num_nodes(); ++i) {
    auto nb = a.neighbors(i);
    auto w = a.weights(i);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      auto src = x.row(nb[k]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w[k] * src[c];
    }
  }
  return out;
}

Matrix spmm_transposed(const CsrGraph& a, const Matrix& x) {
  if (a.num_nodes() != x.rows()) throw Error("spmm_transposed: shape mismatch");
  Matrix out(x.rows(), x.cols());
  for (NodeId i = 0; i < a.num_nodes(); ++i) {
    auto nb = a.neighbors(i);
    auto w = a.weights(i);
    auto src = x.row(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      auto dst = out.row(nb[k]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w[k] * src[c];
    }
  }
  return out;
}

}  // namespace nodemixup
