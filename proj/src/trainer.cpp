#include "nodemixup/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace nodemixup {

void TrainConfig::validate() const {
  if (hidden == 0) throw Error("config: hidden must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("config: dropout must be in [0, 1)");
  if (!(adam.lr > 0.0)) throw Error("config: lr must be > 0");
  if (adam.weight_decay < 0.0) throw Error("config: weight_decay must be >= 0");
  if (max_epochs == 0) throw Error("config: max_epochs must be >= 1");
  if (patience > max_epochs) throw Error("config: patience must not exceed max_epochs");
  if (seeds.empty()) throw Error("config: at least one seed is required");
  mixup.validate();
}

Dataset prepare_dataset(const Dataset& dataset, const TrainConfig& cfg) {
  return cfg.row_normalize_features ? dataset.with_row_normalized_features() : dataset;
}

namespace {

constexpr std::size_t kHidden = std::numeric_limits<std::size_t>::max();

struct Accuracy {
  double acc = 0.0;
  double loss = 0.0;
};

Accuracy score(const Matrix& logits, std::span<const NodeId> ids, std::span<const std::size_t> labels,
               std::size_t classes) {
  if (ids.empty()) return {};
  std::size_t correct = 0;
  std::vector<std::size_t> y;
  y.reserve(ids.size());
  for (NodeId i : ids) {
    if (labels[i] == kHidden) throw Error("internal: scoring a node whose label is hidden");
    y.push_back(labels[i]);
    correct += argmax(logits.row(i)) == labels[i];
  }
  const std::vector<double> w(ids.size(), 1.0);
  const double loss = soft_cross_entropy(gather_rows(logits, ids), one_hot(y, classes), w);
  return {static_cast<double>(correct) / static_cast<double>(ids.size()), loss};
}

}  // namespace

TrainOutcome train_one(const Dataset& raw, const TrainConfig& cfg, std::uint64_t seed,
                       const EpochObserver& observer) {
  cfg.validate();
  const Dataset d = prepare_dataset(raw, cfg);
  const MixupContext ctx = MixupContext::from_dataset(d);
  const auto& split = d.split();

  // labels the loop may read: labeled + validation
  std::vector<std::size_t> visible(d.num_nodes(), kHidden);
  for (NodeId i : split.labeled) visible[i] = d.labels()[i];
  for (NodeId i : split.valid) visible[i] = d.labels()[i];
  const std::vector<std::size_t> degrees = d.degrees();

  Rng init_rng(seed, "init");
  Rng dropout_rng(seed, "dropout");
  Rng pair_rng(seed, "pairs");
  Rng lambda_rng(seed, "lambda");

  ModelParams params = ModelParams::glorot(d.num_features(), cfg.hidden, d.num_classes(), init_rng);
  AdamState adam = AdamState::for_params(params, cfg.adam);

  TrainOutcome out;
  out.best_params = params;
  out.best_val_acc = -1.0;
  out.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  std::optional<MixupBatches> batches;
  PseudoLabelSet dpl;
  NLDTable nld;
  const MixupConfig& mc = cfg.mixup;
  const std::size_t resample_every = mc.pair_resample_every ? mc.pair_resample_every : mc.refresh_every;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochMetrics m;
    m.epoch = epoch;

    if (cfg.mixup_enabled && epoch >= mc.warmup_epochs) {
      const std::size_t since = epoch - mc.warmup_epochs;
      const bool refresh = since % mc.refresh_every == 0;
      if (refresh) {
        const Matrix probs =
            softmax_rows(gcn_forward(ctx.features, ctx.normalized_adjacency, params).logits);
        dpl = build_pseudo_labels(probs, split.labeled, mc.gamma);
        nld = compute_nld(ctx.adjacency, label_matrix(probs, split.labeled, visible, mc.soft_nld),
                          mc.nld_include_self);
      }
      if (refresh || since % resample_every == 0) {
        PairAssignment pairs =
            sample_pairs(split.labeled, visible, dpl, nld, mc, degrees, pair_rng, lambda_rng);
        batches = build_batches(ctx, pairs);
        if (cfg.check_invariants) check_batch_invariants(ctx, *batches);
      }
    }
    m.pseudo_labeled = batches ? dpl.size() : 0;
    m.intra_pairs = batches ? batches->pairs.intra.size() : 0;
    m.inter_pairs = batches ? batches->pairs.inter.size() : 0;

    const Dropout drop{cfg.dropout, true, &dropout_rng};
    LossAndGrad lg = nodemixup_loss_and_grad(params, ctx, batches ? &*batches : nullptr, mc, drop);
    m.loss = lg.loss;
    adam_step(params, lg.grad, adam);
    if (!params.all_finite())
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (seed " +
                            std::to_string(seed) + ")");

    const Matrix logits = gcn_forward(ctx.features, ctx.normalized_adjacency, params).logits;
    m.train_acc = score(logits, split.labeled, visible, d.num_classes()).acc;
    const bool have_valid = !split.valid.empty();
    const Accuracy val = have_valid ? score(logits, split.valid, visible, d.num_classes())
                                    : score(logits, split.labeled, visible, d.num_classes());
    m.val_acc = val.acc;
    m.val_loss = val.loss;

    const bool improved = !have_valid || m.val_acc > out.best_val_acc ||
                          (m.val_acc == out.best_val_acc && m.val_loss < out.best_val_loss);
    if (improved) {
      out.best_params = params;
      out.best_epoch = epoch;
      out.best_val_acc = m.val_acc;
      out.best_val_loss = m.val_loss;
      since_best = 0;
    } else {
      ++since_best;
    }
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.epochs.push_back(m);
    if (observer) observer(m, batches ? &*batches : nullptr);
    if (have_valid && since_best >= cfg.patience) break;
  }
  return out;
}

double evaluate_test(const Dataset& prepared, const ModelParams& params) {
  const auto& ids = prepared.split().test;
  if (ids.empty()) throw Error("evaluate_test: test split is empty");
  const CsrGraph a_hat = sym_normalize(add_self_loops(CsrGraph::from_dataset(prepared)));
  const Matrix logits = gcn_forward(prepared.features(), a_hat, params).logits;
  std::size_t correct = 0;
  for (NodeId i : ids) correct += argmax(logits.row(i)) == prepared.labels()[i];
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  for (double x : v) s.mean += x;
  s.mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / n);
  s.stderr_ = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  return s;
}

namespace {

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; the first
/// exception is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

RunResult train_multi(const Dataset& dataset, const TrainConfig& cfg, bool evaluate_on_test,
                      std::size_t jobs) {
  cfg.validate();
  RunResult res;
  res.seeds.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), jobs, [&](std::size_t k) {
    TrainOutcome o = train_one(dataset, cfg, cfg.seeds[k]);
    SeedResult& s = res.seeds[k];
    s.seed = cfg.seeds[k];
    s.best_val_acc = o.best_val_acc;
    s.best_epoch = o.best_epoch;
    s.epochs = std::move(o.epochs);
    s.params = std::move(o.best_params);
  });
  std::vector<double> val, test;
  std::optional<Dataset> prepared;
  if (evaluate_on_test) prepared.emplace(prepare_dataset(dataset, cfg));
  for (auto& s : res.seeds) {
    val.push_back(s.best_val_acc);
    if (prepared) {
      s.test_acc = evaluate_test(*prepared, s.params);
      test.push_back(*s.test_acc);
    }
  }
  res.val = summarize(val);
  res.test = summarize(test);
  return res;
}

GridSpec published_grids() {
  return {
      {"lambda_inter", {1.0, 1.1, 1.2, 1.3, 1.4, 1.5}},
      {"lambda_intra", {1.0, 1.1, 1.2, 1.3, 1.4, 1.5}},
      {"beta_d", {0.5, 1.0, 1.5, 2.0}},
      {"beta_s", {0.5, 1.0, 1.5, 2.0}},
      {"gamma", {0.5, 0.7, 0.9}},
  };
}

void apply_grid_value(TrainConfig& cfg, const std::string& key, double value) {
  auto count = [&](const char* what) {
    if (value < 0.0 || value != std::floor(value)) throw Error(std::string(what) + " must be a non-negative integer");
    return static_cast<std::size_t>(value);
  };
  if (key == "lambda_intra") cfg.mixup.lambda_intra = value;
  else if (key == "lambda_inter") cfg.mixup.lambda_inter = value;
  else if (key == "beta_s") cfg.mixup.beta_s = value;
  else if (key == "beta_d") cfg.mixup.beta_d = value;
  else if (key == "gamma") cfg.mixup.gamma = value;
  else if (key == "tau") cfg.mixup.tau = value;
  else if (key == "alpha") cfg.mixup.alpha = value;
  else if (key == "warmup_epochs") cfg.mixup.warmup_epochs = count("warmup_epochs");
  else if (key == "lr") cfg.adam.lr = value;
  else if (key == "weight_decay") cfg.adam.weight_decay = value;
  else if (key == "dropout") cfg.dropout = value;
  else if (key == "hidden") cfg.hidden = count("hidden");
  else throw Error("unknown grid key '" + key + "'");
}

std::size_t grid_size(const GridSpec& grids) {
  std::size_t n = 1;
  for (const auto& [key, values] : grids) n *= values.size();
  return n;
}

GridSearchResult grid_search(const Dataset& dataset, const TrainConfig& base, const GridSpec& grids,
                             std::size_t jobs) {
  if (grids.empty()) throw Error("grid_search: no grids");
  for (const auto& [key, values] : grids) {
    if (values.empty()) throw Error("grid_search: grid '" + key + "' is empty");
    TrainConfig probe = base;
    apply_grid_value(probe, key, values.front());
  }
  GridSearchResult res;
  for (const auto& g : grids) res.keys.push_back(g.first);
  const std::size_t total = grid_size(grids);
  res.rows.resize(total);
  std::vector<TrainConfig> configs(total, base);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    std::vector<double> values(grids.size());
    for (std::size_t k = grids.size(); k-- > 0;) {
      const auto& vals = grids[k].second;
      values[k] = vals[rem % vals.size()];
      rem /= vals.size();
    }
    for (std::size_t k = 0; k < grids.size(); ++k) apply_grid_value(configs[idx], grids[k].first, values[k]);
    configs[idx].validate();
    res.rows[idx].index = idx;
    res.rows[idx].values = std::move(values);
  }

  std::mutex best_mu;
  std::optional<std::size_t> best;
  RunResult best_run;
  parallel_for(total, jobs, [&](std::size_t idx) {
    RunResult r = train_multi(dataset, configs[idx], /*evaluate_on_test=*/false);
    res.rows[idx].val = r.val;
    std::lock_guard lock(best_mu);
    const bool better = !best || r.val.mean > res.rows[*best].val.mean ||
                        (r.val.mean == res.rows[*best].val.mean && idx < *best);
    if (better) {
      best = idx;
      best_run = std::move(r);
    }
  });
  res.best = *best;
  res.best_config = configs[res.best];

  // the single test evaluation of the sweep
  const Dataset prepared = prepare_dataset(dataset, res.best_config);
  std::vector<double> test;
  for (auto& s : best_run.seeds) {
    s.test_acc = evaluate_test(prepared, s.params);
    test.push_back(*s.test_acc);
  }
  best_run.test = summarize(test);
  res.best_run = std::move(best_run);
  return res;
}

}  // namespace nodemixup
