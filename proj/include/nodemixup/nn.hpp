#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "nodemixup/graphalg.hpp"
#include "nodemixup/matrix.hpp"
#include "nodemixup/rng.hpp"

namespace nodemixup {

/// Raised when a forward pass or loss produces a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Weights of a two-layer GCN. Biases are stored as 1 x H and 1 x C rows.
struct ModelParams {
  Matrix w1;
  Matrix b1;
  Matrix w2;
  Matrix b2;

  static ModelParams zeros(std::size_t in, std::size_t hidden, std::size_t classes);
  /// Glorot-uniform weights, zero biases.
  static ModelParams glorot(std::size_t in, std::size_t hidden, std::size_t classes, Rng& rng);
  ModelParams zeros_like() const { return zeros(w1.rows(), w1.cols(), w2.cols()); }

  std::array<Matrix*, 4> tensors() { return {&w1, &b1, &w2, &b2}; }
  std::array<const Matrix*, 4> tensors() const { return {&w1, &b1, &w2, &b2}; }

  std::size_t in_features() const { return w1.rows(); }
  std::size_t hidden() const { return w1.cols(); }
  std::size_t classes() const { return w2.cols(); }
  std::size_t num_scalars() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
  bool all_finite() const;

  /// this += scale * other
  void axpy(double scale, const ModelParams& other);

  bool operator==(const ModelParams&) const = default;
};

struct Dropout {
  double rate = 0.0;
  bool train = false;
  Rng* rng = nullptr;  // required when train && rate > 0
};

/// Cached activations of one forward call. backward() consumes it once.
struct ForwardTrace {
  const CsrGraph* adjacency = nullptr;  // nullptr in MLP mode
  SparseRows input;                     // after input dropout
  Matrix pre_activation;                // layer-1 output before ReLU
  Matrix hidden;                        // after ReLU and dropout
  std::vector<double> hidden_scale;     // dropout multipliers for the hidden layer
  bool consumed = false;
};

struct ForwardResult {
  Matrix logits;
  ForwardTrace trace;
};

/// logits = A (drop(ReLU(A drop(X) W1 + b1))) W2 + b2 with inverted dropout
/// in train mode. `a_hat` must outlive the returned trace.
ForwardResult gcn_forward(const SparseRows& x, const CsrGraph& a_hat, const ModelParams& params,
                          const Dropout& dropout = {});
ForwardResult gcn_forward(const Matrix& x, const CsrGraph& a_hat, const ModelParams& params,
                          const Dropout& dropout = {});
/// Same network with propagation omitted (identity adjacency).
ForwardResult mlp_forward(const SparseRows& x, const ModelParams& params,
                          const Dropout& dropout = {});
ForwardResult mlp_forward(const Matrix& x, const ModelParams& params, const Dropout& dropout = {});

/// Reverse-mode gradients of the traced computation w.r.t. every parameter.
/// Throws when the trace was already consumed.
ModelParams backward(ForwardTrace& trace, const Matrix& grad_logits, const ModelParams& params);

struct LossGrad {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits
};

/// Weighted mean over rows of -sum_c target_c log softmax(logits)_c.
double soft_cross_entropy(const Matrix& logits, const Matrix& targets,
                          std::span<const double> weights);
LossGrad soft_cross_entropy_with_grad(const Matrix& logits, const Matrix& targets,
                                      std::span<const double> weights);

/// Selected rows of `m` in the given order.
Matrix gather_rows(const Matrix& m, std::span<const NodeId> rows);
/// Writes the rows of `src` into a zero matrix of `total_rows` rows.
Matrix scatter_rows(const Matrix& src, std::span<const NodeId> rows, std::size_t total_rows);
/// One-hot rows for `labels`.
Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;
  bool decoupled = false;        // AdamW-style decay instead of L2 added to the gradient
  bool decay_first_layer_only = true;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  AdamConfig config;
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;

  static AdamState for_params(const ModelParams& p, const AdamConfig& cfg);
};

/// One bias-corrected Adam update in place.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state);

/// Result of evaluating an objective for the gradient checker.
struct Evaluation {
  double loss = 0.0;
  std::vector<std::uint8_t> relu_pattern;  // sign pattern of every ReLU input
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

/// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-4;

/// Compares `analytic` against central differences of `objective` for every
/// scalar parameter. Coordinates whose +-eps perturbations change any ReLU
/// sign are skipped.
GradCheckResult gradient_check(const std::function<Evaluation(const ModelParams&)>& objective,
                               const ModelParams& params, const ModelParams& analytic,
                               double eps);

/// Checks eval-mode GCN cross-entropy on the labeled nodes of `dataset`.
GradCheckResult gradient_check(const Dataset& dataset, const ModelParams& params, double eps);

/// Trained weights plus the feature preprocessing they expect.
struct Checkpoint {
  ModelParams params;
  bool row_normalized_features = false;
};

/// JSON file with shapes and row-major data.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace nodemixup
