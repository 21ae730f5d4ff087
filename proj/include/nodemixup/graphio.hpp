#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "nodemixup/matrix.hpp"

namespace nodemixup {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Raised by load_dataset; the message names the file and line.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Labeled / validation / test node ids. Every node outside `labeled` is
/// unlabeled, whether or not it appears in `valid` or `test`.
struct SplitSpec {
  std::vector<NodeId> labeled;
  std::vector<NodeId> valid;
  std::vector<NodeId> test;

  bool operator==(const SplitSpec&) const = default;
};

/// Immutable graph dataset. Edges are undirected, stored once with u < v,
/// sorted, and never include self-loops.
class Dataset {
 public:
  /// Validates and canonicalizes. Edge input may contain both orientations
  /// and duplicates; self-loops are dropped.
  static Dataset create(std::size_t num_classes, std::vector<Edge> edges, Matrix features,
                        std::vector<std::size_t> labels, SplitSpec split);

  std::size_t num_nodes() const { return labels_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_features() const { return features_.cols(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& features() const { return features_; }
  const std::vector<std::size_t>& labels() const { return labels_; }
  const SplitSpec& split() const { return split_; }

  /// Same graph with a different split (validated).
  Dataset with_split(SplitSpec split) const;
  /// Same graph with each feature row divided by its L1 norm (zero rows kept).
  /// Equals the row-sum normalization for non-negative features.
  Dataset with_row_normalized_features() const;

  /// Structural degree (self-loops excluded).
  std::vector<std::size_t> degrees() const;
  /// Membership mask of the labeled set.
  std::vector<bool> labeled_mask() const;

  bool operator==(const Dataset&) const = default;

 private:
  Dataset() = default;
  std::size_t num_classes_ = 0;
  std::vector<Edge> edges_;
  Matrix features_;
  std::vector<std::size_t> labels_;
  SplitSpec split_;
};

void validate_split(const SplitSpec& split, std::size_t num_nodes);

/// Reads edges.tsv, features.tsv, labels.tsv and split.json from `dir`.
Dataset load_dataset(const std::filesystem::path& dir);
/// Writes the four files; doubles use the shortest round-trip representation.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Content hash (hex FNV-1a 64) over the canonical serialization.
std::string dataset_fingerprint(const Dataset& dataset);

struct SbmParams {
  std::size_t num_classes = 4;
  std::size_t nodes_per_class = 100;
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t feature_dim = 16;
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
  // split attached to the generated dataset
  std::size_t labels_per_class = 20;
  std::size_t valid_per_class = 30;
};

/// Stochastic block model. Node ids are grouped by class (class c owns
/// ids [c*n, (c+1)*n)). Features are e_{c} plus N(0, noise^2) per entry.
Dataset generate_sbm(const SbmParams& params);

/// Uniformly samples `labels_per_class` labeled and `valid_per_class`
/// validation nodes per class; the remainder is test.
SplitSpec make_split(const Dataset& dataset, std::size_t labels_per_class,
                     std::size_t valid_per_class, std::uint64_t seed);

/// Converts the LINQS citation dump layout (`<name>.content`, `<name>.cites`)
/// into a Dataset with a sampled split. Best effort: paper ids are remapped
/// to 0..N-1 in file order, class names in order of first appearance.
Dataset convert_linqs(const std::filesystem::path& content, const std::filesystem::path& cites,
                      std::size_t labels_per_class, std::size_t valid_per_class,
                      std::uint64_t seed);

}  // namespace nodemixup
