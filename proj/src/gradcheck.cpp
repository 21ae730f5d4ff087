#include "nodemixup/gradcheck.hpp"

#include <random>

#include "nodemixup/mixup.hpp"

namespace nodemixup {

Dataset tiny_dataset(const TinyProblem& p) {
  if (p.nodes < 4 || p.classes < 2) throw Error("tiny_dataset: need >= 4 nodes and >= 2 classes");
  Rng rng(p.seed, "tiny-graph");
  std::vector<Edge> edges;
  for (NodeId i = 0; i < p.nodes; ++i) edges.emplace_back(i, (i + 1) % p.nodes);
  for (NodeId i = 0; i < p.nodes; ++i)
    for (NodeId j = i + 2; j < p.nodes; ++j)
      if (rng.uniform() < 0.25) edges.emplace_back(i, j);
  Matrix x(p.nodes, p.features);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : x.data()) v = normal(rng.engine());
  std::vector<std::size_t> labels(p.nodes);
  for (NodeId i = 0; i < p.nodes; ++i) labels[i] = i % p.classes;
  SplitSpec split;
  for (NodeId i = 0; i < p.nodes; ++i) (i % 2 == 0 ? split.labeled : split.test).push_back(i);
  return Dataset::create(p.classes, std::move(edges), std::move(x), std::move(labels), split);
}

GradCheckResult gradcheck_tiny(const TinyProblem& p, double eps, bool mixup) {
  const Dataset d = tiny_dataset(p);
  Rng init(p.seed, "init");
  const ModelParams params = ModelParams::glorot(d.num_features(), p.hidden, d.num_classes(), init);
  if (!mixup) return gradient_check(d, params, eps);

  const MixupContext ctx = MixupContext::from_dataset(d);
  MixupConfig cfg;
  cfg.gamma = 0.0;
  cfg.lambda_intra = 0.7;
  cfg.lambda_inter = 1.3;
  const Matrix probs = softmax_rows(gcn_forward(ctx.features, ctx.normalized_adjacency, params).logits);
  const auto& labeled = d.split().labeled;
  const PseudoLabelSet dpl = build_pseudo_labels(probs, labeled, cfg.gamma);
  const NLDTable nld = compute_nld(ctx.adjacency, label_matrix(probs, labeled, d.labels(), false));
  Rng pair_rng(p.seed, "pairs");
  Rng lambda_rng(p.seed, "lambda");
  const PairAssignment pairs =
      sample_pairs(labeled, d.labels(), dpl, nld, cfg, d.degrees(), pair_rng, lambda_rng);
  const MixupBatches batches = build_batches(ctx, pairs);
  check_batch_invariants(ctx, batches);

  auto objective = [&](const ModelParams& q) {
    LossAndGrad lg = nodemixup_loss_and_grad(q, ctx, &batches, cfg, {}, false);
    return Evaluation{lg.loss.total, std::move(lg.relu_pattern)};
  };
  const LossAndGrad analytic = nodemixup_loss_and_grad(params, ctx, &batches, cfg);
  return gradient_check(objective, params, analytic.grad, eps);
}

}  // namespace nodemixup
