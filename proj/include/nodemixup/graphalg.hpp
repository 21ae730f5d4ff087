#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "nodemixup/graphio.hpp"
#include "nodemixup/matrix.hpp"

namespace nodemixup {

/// Weighted sparse matrix in compressed-row form. Columns are sorted within
/// each row and all stored weights are positive.
class CsrGraph {
 public:
  CsrGraph() = default;
  /// Builds from (row, col, weight) triplets; duplicates are summed and
  /// non-positive weights dropped.
  struct Triplet {
    NodeId row;
    NodeId col;
    double weight;
  };
  static CsrGraph from_triplets(std::size_t n, std::vector<Triplet> triplets);
  /// Unit-weight symmetric graph from an undirected edge list.
  static CsrGraph from_edges(std::size_t n, std::span<const Edge> edges);
  static CsrGraph from_dataset(const Dataset& d) { return from_edges(d.num_nodes(), d.edges()); }

  std::size_t num_nodes() const { return n_; }
  std::size_t num_entries() const { return cols_.size(); }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {cols_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> weights(NodeId i) const {
    return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  /// Stored weight of (i, j), 0 when absent.
  double weight(NodeId i, NodeId j) const;

  bool is_symmetric(double tol = 0.0) const;
  Matrix to_dense() const;

  bool operator==(const CsrGraph&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> cols_;
  std::vector<double> weights_;
};

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

/// Every node gets a self-edge of weight 1 (existing self-edges are kept as is).
CsrGraph add_self_loops(const CsrGraph& g);
/// D^{-1/2} A D^{-1/2} with weighted degrees. Throws on a zero-degree node.
CsrGraph sym_normalize(const CsrGraph& g);
/// n x n identity.
CsrGraph identity_adjacency(std::size_t n);

/// Multi-source hop distance to the nearest source; kUnreachable otherwise.
/// Self-loops never shorten a path.
std::vector<std::size_t> bfs_distances(const CsrGraph& g, std::span<const NodeId> sources);

struct GraphShape {
  std::size_t diameter = 0;
  std::vector<std::size_t> component;  // component id per node, numbered by smallest member
  std::size_t num_components = 0;
  bool exact = true;  // false when the double-sweep lower bound was used
};

/// Connected components and diameter (max eccentricity over components).
/// Exact all-sources BFS up to `exact_limit` nodes, double-sweep lower bound above.
GraphShape diameter_and_components(const CsrGraph& g, std::size_t exact_limit = 20000);

/// One row of the mixing operator S: row `target` of S is
/// lambda * e_target + (1 - lambda) * e_partner.
struct MixPair {
  NodeId target;
  NodeId partner;
  double lambda;
};
using MixSelector = std::vector<MixPair>;

/// Throws when targets repeat, a partner is also a target, an id is out of
/// range, or lambda leaves [0, 1].
void validate_selector(const MixSelector& sel, std::size_t n);

/// S A S^T computed from the original A in one shot (order independent).
CsrGraph mix_adjacency(const CsrGraph& a, const MixSelector& sel);

/// out = A * X for dense X, rows accumulated in stored column order.
Matrix spmm(const CsrGraph& a, const Matrix& x);
/// out = A^T * X.
Matrix spmm_transposed(const CsrGraph& a, const Matrix& x);

}  // namespace nodemixup
