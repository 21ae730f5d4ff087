#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nodemixup/graphio.hpp"
#include "nodemixup/mixup.hpp"
#include "nodemixup/nn.hpp"

namespace nodemixup {

struct TrainConfig {
  std::size_t hidden = 64;
  double dropout = 0.5;
  AdamConfig adam;
  std::size_t max_epochs = 400;
  std::size_t patience = 100;
  bool row_normalize_features = true;
  bool mixup_enabled = false;
  MixupConfig mixup;
  std::vector<std::uint64_t> seeds{0};
  bool check_invariants = true;  // assert batch invariants at every resample

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  LossComponents loss;  // training objective of the step (train mode)
  double train_acc = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
  std::size_t pseudo_labeled = 0;
  std::size_t intra_pairs = 0;
  std::size_t inter_pairs = 0;
  double seconds = 0.0;  // wall clock, kept out of the deterministic metrics file
};

struct TrainOutcome {
  ModelParams best_params;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  double best_val_loss = 0.0;
  std::vector<EpochMetrics> epochs;
};

/// Called after every epoch; used by tests to observe batches.
using EpochObserver = std::function<void(const EpochMetrics&, const MixupBatches*)>;

/// Trains one model. Only labeled and validation labels are visible to the
/// loop; test labels are read by evaluate_test alone.
TrainOutcome train_one(const Dataset& dataset, const TrainConfig& cfg, std::uint64_t seed,
                       const EpochObserver& observer = {});

/// Dataset after the preprocessing selected by `cfg`.
Dataset prepare_dataset(const Dataset& dataset, const TrainConfig& cfg);

/// Accuracy on the test split (eval mode).
double evaluate_test(const Dataset& prepared, const ModelParams& params);

struct SeedResult {
  std::uint64_t seed = 0;
  double best_val_acc = 0.0;
  std::optional<double> test_acc;
  std::size_t best_epoch = 0;
  std::vector<EpochMetrics> epochs;
  ModelParams params;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;     // population standard deviation
  double stderr_ = 0.0; // sample std / sqrt(n); 0 for one value
};
Summary summarize(const std::vector<double>& values);

struct RunResult {
  std::vector<SeedResult> seeds;  // in config order
  Summary test;
  Summary val;
};

/// Independent train_one per seed; `jobs` > 1 runs seeds on worker threads.
RunResult train_multi(const Dataset& dataset, const TrainConfig& cfg, bool evaluate_on_test = true,
                      std::size_t jobs = 1);

using GridSpec = std::vector<std::pair<std::string, std::vector<double>>>;

/// The published hyperparameter grids (1728 points).
GridSpec published_grids();
/// Sets a named hyperparameter; throws on an unknown name.
void apply_grid_value(TrainConfig& cfg, const std::string& key, double value);
std::size_t grid_size(const GridSpec& grids);

struct GridRow {
  std::size_t index = 0;
  std::vector<double> values;  // aligned with GridSpec keys
  Summary val;
};

struct GridSearchResult {
  std::vector<std::string> keys;
  std::vector<GridRow> rows;  // enumeration order
  std::size_t best = 0;       // index into rows
  TrainConfig best_config;
  RunResult best_run;         // test evaluated exactly once, on this point
};

/// Exhaustive sweep selected by mean validation accuracy; ties go to the
/// earliest point in enumeration order (last key varies fastest).
GridSearchResult grid_search(const Dataset& dataset, const TrainConfig& base, const GridSpec& grids,
                             std::size_t jobs = 1);

}  // namespace nodemixup
