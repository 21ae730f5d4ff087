#include "nodemixup/mixup.hpp"

#include <algorithm>
#include <cmath>

namespace nodemixup {

void MixupConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw Error(std::string("mixup config: ") + msg);
  };
  require(lambda_intra >= 0.0 && std::isfinite(lambda_intra), "lambda_intra must be >= 0");
  require(lambda_inter >= 0.0 && std::isfinite(lambda_inter), "lambda_inter must be >= 0");
  require(beta_s > 0.0, "beta_s must be > 0");
  require(beta_d > 0.0, "beta_d must be > 0");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
  require(tau > 0.0 && tau <= 1.0, "tau must be in (0, 1]");
  require(alpha >= 0.0, "alpha must be >= 0");
  require(refresh_every >= 1, "refresh_every must be >= 1");
}

std::vector<double> mix(std::span<const double> a, std::span<const double> b, double lambda) {
  if (a.size() != b.size()) throw Error("mix: length mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("mix: lambda outside [0, 1]");
  std::vector<double> out(a.size());
  const double mu = 1.0 - lambda;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + mu * b[i];
  return out;
}

PseudoLabelSet build_pseudo_labels(const Matrix& probs, std::span<const NodeId> labeled_ids,
                                   double gamma) {
  std::vector<char> labeled(probs.rows(), 0);
  for (NodeId i : labeled_ids) labeled.at(i) = 1;
  PseudoLabelSet out;
  for (NodeId i = 0; i < probs.rows(); ++i) {
    if (labeled[i]) continue;
    auto row = probs.row(i);
    const std::size_t c = argmax(row);
    if (row[c] >= gamma) {
      out.nodes.push_back(i);
      out.labels.push_back(c);
      out.confidence.push_back(row[c]);
    }
  }
  return out;
}

Matrix label_matrix(const Matrix& probs, std::span<const NodeId> labeled_ids,
                    std::span<const std::size_t> labels, bool soft) {
  Matrix y(probs.rows(), probs.cols());
  for (NodeId i = 0; i < probs.rows(); ++i) {
    if (soft) {
      auto src = probs.row(i);
      std::copy(src.begin(), src.end(), y.row(i).begin());
    } else {
      y(i, argmax(probs.row(i))) = 1.0;
    }
  }
  for (NodeId i : labeled_ids) {
    auto row = y.row(i);
    std::fill(row.begin(), row.end(), 0.0);
    row[labels[i]] = 1.0;
  }
  return y;
}

NLDTable compute_nld(const CsrGraph& a, const Matrix& ybar, bool include_self) {
  if (a.num_nodes() != ybar.rows()) throw Error("compute_nld: size mismatch");
  NLDTable t{Matrix(ybar.rows(), ybar.cols()), ybar};
  for (NodeId i = 0; i < a.num_nodes(); ++i) {
    std::size_t count = 0;
    auto dst = t.q.row(i);
    for (NodeId v : a.neighbors(i)) {
      if (v == i && !include_self) continue;
      auto src = ybar.row(v);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
      ++count;
    }
    if (count > 0)
      for (double& v : dst) v /= static_cast<double>(count);
  }
  return t;
}

std::vector<double> sharpen(std::span<const double> q, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error("sharpen: tau must be in (0, 1]");
  std::vector<double> out(q.size());
  double s = 0.0;
  for (std::size_t c = 0; c < q.size(); ++c) {
    out[c] = tau == 1.0 ? q[c] : std::pow(q[c], 1.0 / tau);
    s += out[c];
  }
  if (s > 0.0)
    for (double& v : out) v /= s;
  return out;
}

double nld_similarity(std::span<const double> qa, std::span<const double> qb) {
  if (qa.size() != qb.size()) throw Error("nld_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t c = 0; c < qa.size(); ++c) {
    dot += qa[c] * qb[c];
    na += qa[c] * qa[c];
    nb += qb[c] * qb[c];
  }
  if (na == 0.0 || nb == 0.0) throw Error("nld_similarity: zero-norm distribution");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double sampling_weight(bool same_class, double s, std::size_t degree, double beta_s, double beta_d) {
  const double sign = same_class ? 1.0 : -1.0;
  return std::exp(sign * beta_s * s) / (1.0 + beta_d * static_cast<double>(degree));
}

PairAssignment sample_pairs(std::span<const NodeId> labeled_ids,
                            std::span<const std::size_t> labels, const PseudoLabelSet& dpl,
                            const NLDTable& nld, const MixupConfig& cfg,
                            std::span<const std::size_t> degrees, Rng& pair_rng,
                            Rng& lambda_rng) {
  PairAssignment out;
  if (dpl.empty()) return out;

  std::vector<char> labeled(labels.size(), 0);
  for (NodeId i : labeled_ids) labeled.at(i) = 1;
  for (NodeId j : dpl.nodes)
    if (labeled.at(j)) throw Error("sample_pairs: pseudo-labeled set contains a labeled node");

  std::vector<std::vector<double>> sharp_dpl;
  sharp_dpl.reserve(dpl.size());
  for (NodeId j : dpl.nodes) sharp_dpl.push_back(sharpen(nld.q.row(j), cfg.tau));

  std::vector<std::size_t> intra_pool, inter_pool;
  std::vector<double> intra_w, inter_w;
  for (NodeId i : labeled_ids) {
    const std::size_t yi = labels[i];
    const auto qi = sharpen(nld.q.row(i), cfg.tau);
    intra_pool.clear();
    inter_pool.clear();
    intra_w.clear();
    inter_w.clear();
    for (std::size_t k = 0; k < dpl.size(); ++k) {
      const bool same = dpl.labels[k] == yi;
      const double s = nld_similarity(qi, sharp_dpl[k]);
      const double w = sampling_weight(same, s, degrees[dpl.nodes[k]], cfg.beta_s, cfg.beta_d);
      (same ? intra_pool : inter_pool).push_back(k);
      (same ? intra_w : inter_w).push_back(w);
    }
    if (!intra_pool.empty()) {
      const std::size_t k = intra_pool[pair_rng.weighted_pick(intra_w)];
      out.intra.push_back({i, dpl.nodes[k], yi, dpl.labels[k], 0.0});
    }
    if (!inter_pool.empty()) {
      const std::size_t k = inter_pool[pair_rng.weighted_pick(inter_w)];
      out.inter.push_back({i, dpl.nodes[k], yi, dpl.labels[k], 0.0});
    }
  }
  for (auto& p : out.intra) p.lambda = lambda_rng.beta_symmetric(cfg.alpha);
  for (auto& p : out.inter) p.lambda = lambda_rng.beta_symmetric(cfg.alpha);
  return out;
}

MixupContext MixupContext::from_dataset(const Dataset& d) {
  MixupContext ctx;
  ctx.features = SparseRows(d.features());
  ctx.adjacency = add_self_loops(CsrGraph::from_dataset(d));
  ctx.normalized_adjacency = sym_normalize(ctx.adjacency);
  ctx.labeled = d.split().labeled;
  std::vector<std::size_t> y;
  for (NodeId i : ctx.labeled) y.push_back(d.labels()[i]);
  ctx.labeled_targets = one_hot(y, d.num_classes());
  ctx.num_classes = d.num_classes();
  return ctx;
}

namespace {

/// Sparse lambda * row(a) + (1 - lambda) * row(b), columns ascending.
void push_mixed_row(SparseRows& dst, const SparseRows& x, NodeId a, NodeId b, double lambda) {
  auto ac = x.row_cols(a);
  auto av = x.row_values(a);
  auto bc = x.row_cols(b);
  auto bv = x.row_values(b);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  const double mu = 1.0 - lambda;
  std::size_t i = 0, j = 0;
  while (i < ac.size() || j < bc.size()) {
    if (j == bc.size() || (i < ac.size() && ac[i] < bc[j])) {
      cols.push_back(ac[i]);
      vals.push_back(lambda * av[i] + mu * 0.0);
      ++i;
    } else if (i == ac.size() || bc[j] < ac[i]) {
      cols.push_back(bc[j]);
      vals.push_back(lambda * 0.0 + mu * bv[j]);
      ++j;
    } else {
      cols.push_back(ac[i]);
      vals.push_back(lambda * av[i] + mu * bv[j]);
      ++i;
      ++j;
    }
  }
  dst.push_row(cols, vals);
}

std::vector<double> one_hot_row(std::size_t c, std::size_t classes) {
  std::vector<double> v(classes, 0.0);
  v.at(c) = 1.0;
  return v;
}

}  // namespace

MixupBatches build_batches(const MixupContext& ctx, const PairAssignment& pairs) {
  const std::size_t n = ctx.features.rows();
  const std::size_t classes = ctx.num_classes;
  MixupBatches b;
  b.pairs = pairs;

  for (const auto& p : pairs.intra)
    if (p.label != p.partner_label)
      throw Error("build_batches: intra pair (" + std::to_string(p.labeled) + ", " +
                  std::to_string(p.partner) + ") has different classes");
  for (const auto& p : pairs.inter)
    if (p.label == p.partner_label)
      throw Error("build_batches: inter pair (" + std::to_string(p.labeled) + ", " +
                  std::to_string(p.partner) + ") shares a class");

  // intra: full graph with target rows replaced
  {
    IntraBatch& in = b.intra;
    std::vector<const MixedPair*> by_target(n, nullptr);
    MixSelector sel;
    for (const auto& p : pairs.intra) {
      by_target.at(p.labeled) = &p;
      sel.push_back({p.labeled, p.partner, p.lambda});
    }
    in.features = SparseRows::with_cols(ctx.features.cols());
    for (NodeId i = 0; i < n; ++i) {
      if (const MixedPair* p = by_target[i])
        push_mixed_row(in.features, ctx.features, p->labeled, p->partner, p->lambda);
      else
        in.features.push_row(ctx.features.row_cols(i), ctx.features.row_values(i));
    }
    in.soft_labels = Matrix(pairs.intra.size(), classes);
    for (std::size_t k = 0; k < pairs.intra.size(); ++k) {
      const auto& p = pairs.intra[k];
      in.rows.push_back(p.labeled);
      in.lambdas.push_back(p.lambda);
      auto y = mix(one_hot_row(p.label, classes), one_hot_row(p.partner_label, classes), p.lambda);
      std::copy(y.begin(), y.end(), in.soft_labels.row(k).begin());
    }
    in.mixed_adjacency = mix_adjacency(ctx.adjacency, sel);
    in.normalized_adjacency = sel.empty() ? ctx.normalized_adjacency
                                          : sym_normalize(in.mixed_adjacency);
  }

  // inter: one row per pair, no propagation
  {
    InterBatch& out = b.inter;
    out.features = SparseRows::with_cols(ctx.features.cols());
    out.soft_labels = Matrix(pairs.inter.size(), classes);
    for (std::size_t k = 0; k < pairs.inter.size(); ++k) {
      const auto& p = pairs.inter[k];
      push_mixed_row(out.features, ctx.features, p.labeled, p.partner, p.lambda);
      out.lambdas.push_back(p.lambda);
      auto y = mix(one_hot_row(p.label, classes), one_hot_row(p.partner_label, classes), p.lambda);
      std::copy(y.begin(), y.end(), out.soft_labels.row(k).begin());
    }
  }
  return b;
}

void check_batch_invariants(const MixupContext& ctx, const MixupBatches& b) {
  const std::size_t n = ctx.features.rows();
  std::vector<char> labeled(n, 0);
  for (NodeId i : ctx.labeled) labeled[i] = 1;
  auto fail = [](const std::string& msg) { throw Error("batch invariant violated: " + msg); };
  auto check_simplex = [&](const Matrix& m, const char* what) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double s = 0.0;
      for (double v : m.row(r)) {
        if (v < 0.0) fail(std::string(what) + " label row has a negative entry");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-12) fail(std::string(what) + " label row does not sum to 1");
    }
  };
  for (const auto& p : b.pairs.intra) {
    if (p.label != p.partner_label) fail("intra pair with different classes");
    if (labeled[p.partner] || !labeled[p.labeled]) fail("intra pair does not cross the labeled set");
  }
  for (const auto& p : b.pairs.inter) {
    if (p.label == p.partner_label) fail("inter pair with equal classes");
    if (labeled[p.partner] || !labeled[p.labeled]) fail("inter pair does not cross the labeled set");
  }
  check_simplex(b.intra.soft_labels, "intra");
  check_simplex(b.inter.soft_labels, "inter");
  if (b.intra.soft_labels.rows() != b.pairs.intra.size() ||
      b.inter.soft_labels.rows() != b.pairs.inter.size())
    fail("label rows do not match pair count");
  if (!b.intra.mixed_adjacency.is_symmetric()) fail("mixed adjacency is not symmetric");
}

LossAndGrad nodemixup_loss_and_grad(const ModelParams& params, const MixupContext& ctx,
                                    const MixupBatches* batches, const MixupConfig& cfg,
                                    const Dropout& dropout, bool want_grad) {
  LossAndGrad out;
  if (want_grad) out.grad = params.zeros_like();
  auto record = [&out](const ForwardTrace& t) {
    for (double v : t.pre_activation.data()) out.relu_pattern.push_back(v > 0.0);
  };
  const std::size_t n = ctx.features.rows();

  {
    ForwardResult f = gcn_forward(ctx.features, ctx.normalized_adjacency, params, dropout);
    const std::vector<double> w(ctx.labeled.size(), 1.0);
    LossGrad lg = soft_cross_entropy_with_grad(gather_rows(f.logits, ctx.labeled),
                                               ctx.labeled_targets, w);
    out.loss.gnn = lg.loss;
    record(f.trace);
    if (want_grad) out.grad.axpy(1.0, backward(f.trace, scatter_rows(lg.grad, ctx.labeled, n), params));
  }

  if (batches && cfg.lambda_intra != 0.0 && !batches->intra.empty()) {
    const IntraBatch& in = batches->intra;
    ForwardResult f = gcn_forward(in.features, in.normalized_adjacency, params, dropout);
    const std::vector<double> w(in.rows.size(), 1.0);
    LossGrad lg = soft_cross_entropy_with_grad(gather_rows(f.logits, in.rows), in.soft_labels, w);
    out.loss.intra = lg.loss;
    record(f.trace);
    if (want_grad)
      out.grad.axpy(cfg.lambda_intra, backward(f.trace, scatter_rows(lg.grad, in.rows, n), params));
  }

  if (batches && cfg.lambda_inter != 0.0 && !batches->inter.empty()) {
    const InterBatch& it = batches->inter;
    ForwardResult f = mlp_forward(it.features, params, dropout);
    const std::vector<double> w(it.lambdas.size(), 1.0);
    LossGrad lg = soft_cross_entropy_with_grad(f.logits, it.soft_labels, w);
    out.loss.inter = lg.loss;
    record(f.trace);
    if (want_grad) out.grad.axpy(cfg.lambda_inter, backward(f.trace, lg.grad, params));
  }

  out.loss.total = out.loss.gnn + cfg.lambda_intra * out.loss.intra + cfg.lambda_inter * out.loss.inter;
  if (!std::isfinite(out.loss.total)) throw DivergenceError("nodemixup loss is not finite");
  return out;
}

LossComponents nodemixup_loss(const ModelParams& params, const MixupContext& ctx,
                              const MixupBatches* batches, const MixupConfig& cfg) {
  return nodemixup_loss_and_grad(params, ctx, batches, cfg, {}, false).loss;
}

}  // namespace nodemixup
