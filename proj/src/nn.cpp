#include "nodemixup/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace nodemixup {

ModelParams ModelParams::zeros(std::size_t in, std::size_t hidden, std::size_t classes) {
  return {Matrix(in, hidden), Matrix(1, hidden), Matrix(hidden, classes), Matrix(1, classes)};
}

ModelParams ModelParams::glorot(std::size_t in, std::size_t hidden, std::size_t classes, Rng& rng) {
  ModelParams p = zeros(in, hidden, classes);
  auto init = [&rng](Matrix& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
  };
  init(p.w1);
  init(p.w2);
  return p;
}

bool ModelParams::all_finite() const {
  for (const Matrix* t : tensors())
    for (double v : t->data())
      if (!std::isfinite(v)) return false;
  return true;
}

void ModelParams::axpy(double scale, const ModelParams& other) {
  auto dst = tensors();
  auto src = other.tensors();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    if (dst[k]->size() != src[k]->size()) throw Error("ModelParams::axpy: shape mismatch");
    auto& d = dst[k]->data();
    const auto& s = src[k]->data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
  }
}

namespace {

void add_bias(Matrix& m, const Matrix& bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias(0, c);
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) += m(r, c);
  return out;
}

void check_finite(const Matrix& m, const char* what) {
  for (double v : m.data())
    if (!std::isfinite(v)) throw DivergenceError(std::string(what) + ": non-finite value");
}

ForwardResult forward_impl(const SparseRows& x, const CsrGraph* a, const ModelParams& p,
                           const Dropout& dropout) {
  if (x.cols() != p.w1.rows())
    throw Error("forward: input has " + std::to_string(x.cols()) + " features, model expects " +
                std::to_string(p.w1.rows()));
  if (p.b1.cols() != p.w1.cols() || p.w2.rows() != p.w1.cols() || p.b2.cols() != p.w2.cols())
    throw Error("forward: inconsistent parameter shapes");
  if (a && a->num_nodes() != x.rows()) throw Error("forward: adjacency size != number of rows");
  if (!(dropout.rate >= 0.0 && dropout.rate < 1.0)) throw Error("forward: dropout rate outside [0, 1)");
  const bool drop = dropout.train && dropout.rate > 0.0;
  if (drop && !dropout.rng) throw Error("forward: dropout requires a random stream");
  const double keep_scale = drop ? 1.0 / (1.0 - dropout.rate) : 1.0;

  ForwardResult res;
  ForwardTrace& t = res.trace;
  t.adjacency = a;
  if (drop) {
    t.input = SparseRows::with_cols(x.cols());
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      cols.clear();
      vals.clear();
      auto rc = x.row_cols(r);
      auto rv = x.row_values(r);
      for (std::size_t k = 0; k < rc.size(); ++k) {
        if (dropout.rng->uniform() < dropout.rate) continue;
        cols.push_back(rc[k]);
        vals.push_back(rv[k] * keep_scale);
      }
      t.input.push_row(cols, vals);
    }
  } else {
    t.input = x;
  }

  Matrix z1 = sparse_dense_product(t.input, p.w1);
  t.pre_activation = a ? spmm(*a, z1) : std::move(z1);
  add_bias(t.pre_activation, p.b1);

  t.hidden = Matrix(t.pre_activation.rows(), t.pre_activation.cols());
  t.hidden_scale.assign(t.hidden.size(), 1.0);
  for (std::size_t i = 0; i < t.hidden.size(); ++i) {
    if (drop) t.hidden_scale[i] = dropout.rng->uniform() < dropout.rate ? 0.0 : keep_scale;
    const double v = t.pre_activation.data()[i];
    t.hidden.data()[i] = v > 0.0 ? v * t.hidden_scale[i] : 0.0;
  }

  Matrix z2 = matmul(t.hidden, p.w2);
  res.logits = a ? spmm(*a, z2) : std::move(z2);
  add_bias(res.logits, p.b2);
  check_finite(res.logits, "forward");
  return res;
}

}  // namespace

ForwardResult gcn_forward(const SparseRows& x, const CsrGraph& a_hat, const ModelParams& params,
                          const Dropout& dropout) {
  return forward_impl(x, &a_hat, params, dropout);
}

ForwardResult gcn_forward(const Matrix& x, const CsrGraph& a_hat, const ModelParams& params,
                          const Dropout& dropout) {
  return forward_impl(SparseRows(x), &a_hat, params, dropout);
}

ForwardResult mlp_forward(const SparseRows& x, const ModelParams& params, const Dropout& dropout) {
  return forward_impl(x, nullptr, params, dropout);
}

ForwardResult mlp_forward(const Matrix& x, const ModelParams& params, const Dropout& dropout) {
  return forward_impl(SparseRows(x), nullptr, params, dropout);
}

ModelParams backward(ForwardTrace& t, const Matrix& grad_logits, const ModelParams& p) {
  if (t.consumed) throw Error("backward: trace already consumed");
  if (grad_logits.rows() != t.hidden.rows() || grad_logits.cols() != p.w2.cols())
    throw Error("backward: gradient shape mismatch");
  t.consumed = true;

  ModelParams g;
  g.b2 = column_sums(grad_logits);
  Matrix d_z2 = t.adjacency ? spmm_transposed(*t.adjacency, grad_logits) : grad_logits;
  g.w2 = matmul_at_b(t.hidden, d_z2);
  Matrix d_pre = matmul_a_bt(d_z2, p.w2);
  for (std::size_t i = 0; i < d_pre.size(); ++i)
    d_pre.data()[i] = t.pre_activation.data()[i] > 0.0 ? d_pre.data()[i] * t.hidden_scale[i] : 0.0;
  g.b1 = column_sums(d_pre);
  Matrix d_z1 = t.adjacency ? spmm_transposed(*t.adjacency, d_pre) : std::move(d_pre);
  g.w1 = sparse_transpose_product(t.input, d_z1);
  return g;
}

namespace {

void check_targets(const Matrix& logits, const Matrix& targets, std::span<const double> weights) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw Error("soft_cross_entropy: logits/targets shape mismatch");
  if (weights.size() != logits.rows()) throw Error("soft_cross_entropy: weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error("soft_cross_entropy: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw Error("soft_cross_entropy: all weights are zero");
  for (std::size_t r = 0; r < targets.rows(); ++r) {
    double s = 0.0;
    for (double v : targets.row(r)) {
      if (v < 0.0) throw Error("soft_cross_entropy: negative target entry in row " + std::to_string(r));
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-6)
      throw Error("soft_cross_entropy: target row " + std::to_string(r) + " sums to " + std::to_string(s));
  }
}

}  // namespace

LossGrad soft_cross_entropy_with_grad(const Matrix& logits, const Matrix& targets,
                                      std::span<const double> weights) {
  check_targets(logits, targets, weights);
  double total_w = 0.0;
  for (double w : weights) total_w += w;

  LossGrad out{0.0, Matrix(logits.rows(), logits.cols())};
  std::vector<double> prob(logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto l = logits.row(r);
    auto t = targets.row(r);
    const double mx = *std::max_element(l.begin(), l.end());
    double z = 0.0;
    for (std::size_t c = 0; c < l.size(); ++c) {
      prob[c] = std::exp(l[c] - mx);
      z += prob[c];
    }
    const double log_z = std::log(z);
    double row_loss = 0.0;
    for (std::size_t c = 0; c < l.size(); ++c)
      if (t[c] != 0.0) row_loss -= t[c] * (l[c] - mx - log_z);
    const double scale = weights[r] / total_w;
    out.loss += scale * row_loss;
    auto g = out.grad.row(r);
    for (std::size_t c = 0; c < l.size(); ++c) g[c] = scale * (prob[c] / z - t[c]);
  }
  if (!std::isfinite(out.loss)) throw DivergenceError("soft_cross_entropy: non-finite loss");
  return out;
}

double soft_cross_entropy(const Matrix& logits, const Matrix& targets,
                          std::span<const double> weights) {
  return soft_cross_entropy_with_grad(logits, targets, weights).loss;
}

Matrix gather_rows(const Matrix& m, std::span<const NodeId> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto src = m.row(rows[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

Matrix scatter_rows(const Matrix& src, std::span<const NodeId> rows, std::size_t total_rows) {
  Matrix out(total_rows, src.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto s = src.row(k);
    auto d = out.row(rows[k]);
    for (std::size_t c = 0; c < s.size(); ++c) d[c] += s[c];
  }
  return out;
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  Matrix out(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw Error("one_hot: label out of range");
    out(i, labels[i]) = 1.0;
  }
  return out;
}

AdamState AdamState::for_params(const ModelParams& p, const AdamConfig& cfg) {
  return {cfg, p.zeros_like(), p.zeros_like(), 0};
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state) {
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k]->size() != g[k]->size() || p[k]->size() != m[k]->size())
      throw Error("adam_step: shape mismatch");
    // tensors 0 and 1 form the first layer
    const bool decay = c.weight_decay != 0.0 && (!c.decay_first_layer_only || k < 2);
    auto& pd = p[k]->data();
    const auto& gd = g[k]->data();
    auto& md = m[k]->data();
    auto& vd = v[k]->data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      double gi = gd[i];
      if (decay && !c.decoupled) gi += c.weight_decay * pd[i];
      if (decay && c.decoupled) pd[i] -= c.lr * c.weight_decay * pd[i];
      md[i] = c.beta1 * md[i] + (1.0 - c.beta1) * gi;
      vd[i] = c.beta2 * vd[i] + (1.0 - c.beta2) * gi * gi;
      const double m_hat = md[i] / bc1;
      const double v_hat = vd[i] / bc2;
      pd[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

GradCheckResult gradient_check(const std::function<Evaluation(const ModelParams&)>& objective,
                               const ModelParams& params, const ModelParams& analytic,
                               double eps) {
  GradCheckResult res;
  ModelParams probe = params;
  auto pt = probe.tensors();
  auto at = analytic.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k) {
    auto& data = pt[k]->data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + eps;
      Evaluation plus = objective(probe);
      data[i] = orig - eps;
      Evaluation minus = objective(probe);
      data[i] = orig;
      if (plus.relu_pattern != minus.relu_pattern) {
        ++res.skipped_kinks;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * eps);
      const double a = at[k]->data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      res.max_rel_error = std::max(res.max_rel_error, std::abs(a - numeric) / denom);
      ++res.checked;
    }
  }
  return res;
}

GradCheckResult gradient_check(const Dataset& dataset, const ModelParams& params, double eps) {
  const CsrGraph a_hat = sym_normalize(add_self_loops(CsrGraph::from_dataset(dataset)));
  const SparseRows x(dataset.features());
  const auto& ids = dataset.split().labeled;
  std::vector<std::size_t> y;
  for (NodeId i : ids) y.push_back(dataset.labels()[i]);
  const Matrix targets = one_hot(y, dataset.num_classes());
  const std::vector<double> w(ids.size(), 1.0);

  auto objective = [&](const ModelParams& p) {
    ForwardResult f = gcn_forward(x, a_hat, p);
    Evaluation e;
    e.loss = soft_cross_entropy(gather_rows(f.logits, ids), targets, w);
    for (double v : f.trace.pre_activation.data()) e.relu_pattern.push_back(v > 0.0);
    return e;
  };
  ForwardResult f = gcn_forward(x, a_hat, params);
  LossGrad lg = soft_cross_entropy_with_grad(gather_rows(f.logits, ids), targets, w);
  ModelParams grads = backward(f.trace, scatter_rows(lg.grad, ids, dataset.num_nodes()), params);
  return gradient_check(objective, params, grads, eps);
}

namespace {

nlohmann::json tensor_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix tensor_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw Error("checkpoint: tensor size mismatch");
  m.data() = std::move(data);
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file) {
  const ModelParams& p = ckpt.params;
  nlohmann::json j;
  j["format"] = "nodemixup-checkpoint";
  j["version"] = 1;
  j["row_normalized_features"] = ckpt.row_normalized_features;
  j["w1"] = tensor_json(p.w1);
  j["b1"] = tensor_json(p.b1);
  j["w2"] = tensor_json(p.w2);
  j["b2"] = tensor_json(p.b2);
  std::ofstream out(file);
  if (!out) throw Error("cannot write checkpoint " + file.string());
  out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot read checkpoint " + file.string());
  try {
    auto j = nlohmann::json::parse(in);
    if (j.value("format", "") != "nodemixup-checkpoint") throw Error("not a nodemixup checkpoint");
    ModelParams p{tensor_from_json(j.at("w1")), tensor_from_json(j.at("b1")),
                  tensor_from_json(j.at("w2")), tensor_from_json(j.at("b2"))};
    if (p.b1.cols() != p.w1.cols() || p.w2.rows() != p.w1.cols() || p.b2.cols() != p.w2.cols())
      throw Error("checkpoint: inconsistent shapes");
    return {std::move(p), j.value("row_normalized_features", false)};
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint " + file.string() + ": " + e.what());
  }
}

}  // namespace nodemixup
