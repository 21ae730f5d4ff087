#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "nodemixup/graphalg.hpp"
#include "nodemixup/graphio.hpp"
#include "nodemixup/matrix.hpp"
#include "nodemixup/nn.hpp"

namespace nodemixup {

/// Reaching coefficient of every unlabeled node:
/// RC_i = mean over labeled j of (1 - log d(i,j) / log D), d = D across components.
struct RCReport {
  std::vector<NodeId> nodes;  // unlabeled nodes, ascending
  std::vector<double> rc;
  std::vector<double> min_distance;
  std::vector<double> mean_distance;
  std::size_t diameter = 0;
  bool diameter_exact = true;
};

/// `g` is the structural graph (self-loops, if any, are ignored).
/// Throws when the labeled set is empty or the diameter is below 2.
RCReport reaching_coefficient(const CsrGraph& g, std::span<const NodeId> labeled_ids);

/// Five disjoint node sets by RC range: [0, m/5], (m/5, 2m/5], ..., (4m/5, m].
std::array<std::vector<NodeId>, 5> rc_buckets(const RCReport& rc);

enum class CkaVariant {
  Linear,   // ||Zu^T Zl||_F^2 / (||Zl^T Zl||_F ||Zu^T Zu||_F)
  Printed,  // ||Zu^T Zl||_F / (||Zl Zl^T||_F ||Zu Zu^T||_F), kept for comparison
};

/// CKA between row-paired samples after column centering.
double cka(const Matrix& zl, const Matrix& zu, CkaVariant variant = CkaVariant::Linear);

struct CKAReport {
  std::array<std::optional<double>, 5> value;  // absent for buckets that cannot be compared
  std::array<std::size_t, 5> sample_size{};
  std::array<std::size_t, 5> bucket_size{};
  std::uint64_t seed = 0;
};

/// Final-layer eval-mode logits of every node.
Matrix representations(const Dataset& d, const ModelParams& params);

/// Per bucket, samples min(|labeled|, |bucket|) nodes from each side without
/// replacement and computes CKA on their representations. Sampled rows are
/// paired in ascending id order.
CKAReport cka_by_bucket(const Matrix& reps, std::span<const NodeId> labeled_ids,
                        const std::array<std::vector<NodeId>, 5>& buckets, std::uint64_t seed,
                        CkaVariant variant = CkaVariant::Linear);

struct DegreeSPReport {
  std::map<std::size_t, double> mean_sp;     // degree -> mean over nodes of avg SP
  std::map<std::size_t, std::size_t> count;  // degree -> unlabeled nodes with that degree
  std::vector<NodeId> nodes;                 // unlabeled nodes
  std::vector<std::size_t> degree;           // structural degree per node
  std::vector<double> avg_sp;                // mean distance to all labeled nodes
  std::size_t diameter = 0;
};

DegreeSPReport avg_sp_by_degree(const CsrGraph& g, std::span<const NodeId> labeled_ids);

/// Pearson correlation; throws when either series has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

struct PearsonReport {
  double r = 0.0;
  std::vector<NodeId> nodes;
  std::vector<double> score;  // softmax probability of the true class
  std::vector<double> rc;
};

/// Correlation between true-class probability and RC over the unlabeled nodes in `rc`.
PearsonReport pearson_rc_vs_score(const Matrix& probs, std::span<const std::size_t> labels,
                                  const RCReport& rc);

}  // namespace nodemixup
