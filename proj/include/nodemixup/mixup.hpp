#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nodemixup/graphalg.hpp"
#include "nodemixup/graphio.hpp"
#include "nodemixup/matrix.hpp"
#include "nodemixup/nn.hpp"
#include "nodemixup/rng.hpp"

namespace nodemixup {

/// Hyperparameters of the labeled/pseudo-labeled mixup regularizer.
struct MixupConfig {
  double lambda_intra = 1.0;  // weight of the intra-class mixup loss
  double lambda_inter = 1.0;  // weight of the inter-class mixup loss
  double beta_s = 1.0;        // strength of neighbor-label similarity in the sampling weight
  double beta_d = 1.0;        // strength of the degree penalty in the sampling weight
  double gamma = 0.7;         // pseudo-label confidence threshold (inclusive)
  double tau = 0.5;           // sharpening temperature
  double alpha = 1.0;         // lambda ~ Beta(alpha, alpha)
  std::size_t warmup_epochs = 10;
  std::size_t refresh_every = 1;        // epochs between pseudo-label refreshes
  std::size_t pair_resample_every = 0;  // 0: resample pairs at each refresh only
  bool nld_include_self = true;         // a node's own label counts in its NLD
  bool soft_nld = false;                // use predicted distributions instead of one-hots

  /// Throws on out-of-range values.
  void validate() const;
  bool operator==(const MixupConfig&) const = default;
};

/// lambda * a + (1 - lambda) * b.
std::vector<double> mix(std::span<const double> a, std::span<const double> b, double lambda);

/// Confident unlabeled nodes, sorted by id.
struct PseudoLabelSet {
  std::vector<NodeId> nodes;
  std::vector<std::size_t> labels;
  std::vector<double> confidence;

  std::size_t size() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }
};

/// Unlabeled nodes whose max probability is >= gamma, labeled by argmax
/// (lowest class wins ties).
PseudoLabelSet build_pseudo_labels(const Matrix& probs, std::span<const NodeId> labeled_ids,
                                   double gamma);

struct NLDTable {
  Matrix q;     // neighborhood label distribution per node
  Matrix ybar;  // label matrix the distribution was averaged from
};

/// Label matrix with true one-hots for labeled nodes and predictions for the
/// rest (one-hot argmax, or the probability rows when `soft`).
Matrix label_matrix(const Matrix& probs, std::span<const NodeId> labeled_ids,
                    std::span<const std::size_t> labels, bool soft);

/// q_i = mean of ybar over the neighbors of i in `a` (self-loops of `a`
/// included unless `include_self` is false).
NLDTable compute_nld(const CsrGraph& a, const Matrix& ybar, bool include_self = true);

/// q^{1/tau} / sum q^{1/tau}.
std::vector<double> sharpen(std::span<const double> q, double tau);

/// Cosine similarity; throws on a zero vector.
double nld_similarity(std::span<const double> qa, std::span<const double> qb);

/// exp(+-beta_s * s) / (1 + beta_d * degree).
double sampling_weight(bool same_class, double s, std::size_t degree, double beta_s, double beta_d);

struct MixedPair {
  NodeId labeled;
  NodeId partner;
  std::size_t label;          // true label of `labeled`
  std::size_t partner_label;  // pseudo-label of `partner`
  double lambda;
};

struct PairAssignment {
  std::vector<MixedPair> intra;
  std::vector<MixedPair> inter;
};

/// For every labeled node draws one same-class and one different-class
/// partner from the pseudo-labeled set with probability proportional to the
/// sampling weight, then one lambda per selected pair.
PairAssignment sample_pairs(std::span<const NodeId> labeled_ids,
                            std::span<const std::size_t> labels, const PseudoLabelSet& dpl,
                            const NLDTable& nld, const MixupConfig& cfg,
                            std::span<const std::size_t> degrees, Rng& pair_rng,
                            Rng& lambda_rng);

struct IntraBatch {
  SparseRows features;            // all N rows; targets replaced by mixed rows
  std::vector<NodeId> rows;       // targets, in pair order
  Matrix soft_labels;             // one row per target
  std::vector<double> lambdas;
  CsrGraph mixed_adjacency;       // S A S^T before normalization
  CsrGraph normalized_adjacency;  // sym_normalize(mixed_adjacency)

  bool empty() const { return rows.empty(); }
};

struct InterBatch {
  SparseRows features;  // one row per pair
  Matrix soft_labels;
  std::vector<double> lambdas;

  bool empty() const { return lambdas.empty(); }
};

struct MixupBatches {
  IntraBatch intra;
  InterBatch inter;
  PairAssignment pairs;
};

/// Fixed inputs of the regularized objective.
struct MixupContext {
  SparseRows features;
  CsrGraph adjacency;             // with self-loops, unnormalized
  CsrGraph normalized_adjacency;  // sym_normalize(adjacency)
  std::vector<NodeId> labeled;
  Matrix labeled_targets;         // one-hot rows of the labeled nodes
  std::size_t num_classes = 0;

  static MixupContext from_dataset(const Dataset& d);
};

/// Mixed feature rows/labels and the mixed adjacency for a pair assignment.
/// Throws when an intra pair has different labels or an inter pair equal ones.
MixupBatches build_batches(const MixupContext& ctx, const PairAssignment& pairs);

/// Asserts the batch invariants: simplex label rows, class consistency,
/// partners outside the labeled set, symmetric mixed adjacency.
void check_batch_invariants(const MixupContext& ctx, const MixupBatches& b);

struct LossComponents {
  double total = 0.0;
  double gnn = 0.0;
  double intra = 0.0;
  double inter = 0.0;
};

struct LossAndGrad {
  LossComponents loss;
  ModelParams grad;
  std::vector<std::uint8_t> relu_pattern;  // of every forward involved, concatenated
};

/// L = L_gnn + lambda_intra * L_intra + lambda_inter * L_inter. A branch with
/// zero weight or an empty batch is skipped and contributes 0. With
/// `batches == nullptr` only L_gnn is computed.
LossAndGrad nodemixup_loss_and_grad(const ModelParams& params, const MixupContext& ctx,
                                    const MixupBatches* batches, const MixupConfig& cfg,
                                    const Dropout& dropout = {}, bool want_grad = true);

/// Eval-mode loss components.
LossComponents nodemixup_loss(const ModelParams& params, const MixupContext& ctx,
                              const MixupBatches* batches, const MixupConfig& cfg);

}  // namespace nodemixup
