#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nodemixup/config_json.hpp"
#include "nodemixup/diagnostics.hpp"
#include "nodemixup/gradcheck.hpp"
#include "nodemixup/graphio.hpp"
#include "nodemixup/reports.hpp"
#include "nodemixup/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nodemixup;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Bad arguments discovered after parsing (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Relative --data paths are taken from NODEMIXUP_DATA_ROOT when it is set.
fs::path resolve_data(const std::string& arg) {
  fs::path p(arg);
  if (p.is_relative()) {
    if (const char* root = std::getenv("NODEMIXUP_DATA_ROOT"); root && *root) return fs::path(root) / p;
  }
  return p;
}

void prepare_out(const fs::path& out, bool force) {
  if (fs::exists(out)) {
    if (!force) throw UsageError("output directory " + out.string() + " exists (use --force)");
    fs::remove_all(out);
  }
  fs::create_directories(out);
}

struct Manifest {
  std::string command;
  std::string started = utc_now();
  json config = nullptr;
  std::string fingerprint;

  void write(const fs::path& out) const {
    json j;
    j["schema"] = "nodemixup.manifest.v1";
    j["command"] = command;
    j["version"] = NODEMIXUP_VERSION;
    j["config"] = config;
    j["dataset_fingerprint"] = fingerprint.empty() ? json(nullptr) : json(fingerprint);
    j["started"] = started;
    j["finished"] = utc_now();
    write_file(out / "manifest.json", j.dump(2) + "\n");
  }
};

/// Training flags that override the config file.
struct TrainFlags {
  std::string data;
  std::string config;
  std::string seeds;
  std::string mixup;
  std::optional<std::size_t> max_epochs, patience, hidden;
  std::optional<double> lr, weight_decay, dropout;
  std::size_t jobs = 1;
  std::string out;
  bool force = false;

  void add_to(CLI::App* app) {
    app->add_option("--data", data, "Dataset directory")->required();
    app->add_option("--config", config, "Run config (JSON)");
    app->add_option("--seeds", seeds, "Seeds, \"a..b\" inclusive or \"1,4,7\"");
    app->add_option("--mixup", mixup, "Override the mixup switch")->check(CLI::IsMember({"on", "off"}));
    app->add_option("--max-epochs", max_epochs);
    app->add_option("--patience", patience);
    app->add_option("--hidden", hidden);
    app->add_option("--lr", lr);
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--dropout", dropout);
    app->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--out", out, "Run directory")->required();
    app->add_flag("--force", force, "Replace an existing run directory");
  }

  TrainConfig resolve() const {
    TrainConfig cfg = config.empty() ? TrainConfig{} : load_config(config);
    if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
    if (!mixup.empty()) cfg.mixup_enabled = mixup == "on";
    if (max_epochs) cfg.max_epochs = *max_epochs;
    if (patience) cfg.patience = *patience;
    if (hidden) cfg.hidden = *hidden;
    if (lr) cfg.adam.lr = *lr;
    if (weight_decay) cfg.adam.weight_decay = *weight_decay;
    if (dropout) cfg.dropout = *dropout;
    if (cfg.patience > cfg.max_epochs) cfg.patience = cfg.max_epochs;
    cfg.validate();
    return cfg;
  }
};

std::string joined_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

// ---- synth / convert ----

void print_dataset_stats(const Dataset& d) {
  std::size_t same = 0;
  for (auto [u, v] : d.edges()) same += d.labels()[u] == d.labels()[v];
  const double m = static_cast<double>(d.edges().size());
  std::cout << "nodes=" << d.num_nodes() << " edges=" << d.edges().size()
            << " classes=" << d.num_classes() << " features=" << d.num_features()
            << " mean_degree=" << format_real(2.0 * m / static_cast<double>(d.num_nodes()))
            << " edge_homophily=" << (m > 0 ? format_real(static_cast<double>(same) / m) : "NA")
            << " labeled=" << d.split().labeled.size() << " valid=" << d.split().valid.size()
            << " test=" << d.split().test.size() << " fingerprint=" << dataset_fingerprint(d) << "\n";
}

void write_dataset_dir(const Dataset& d, const std::string& out, bool force, Manifest& man, json config) {
  prepare_out(out, force);
  save_dataset(d, out);
  man.config = std::move(config);
  man.fingerprint = dataset_fingerprint(d);
  man.write(out);
  print_dataset_stats(d);
}

// ---- train ----

void write_run(const fs::path& out, const RunResult& run) {
  for (const auto& s : run.seeds) {
    const std::string tag = std::to_string(s.seed);
    write_file(out / ("metrics_seed" + tag + ".tsv"), epoch_metrics_tsv(s.epochs));
    write_file(out / ("timing_seed" + tag + ".tsv"), epoch_timing_tsv(s.epochs));
  }
  write_file(out / "summary.json", run_summary_json(run));
}

int cmd_train(const TrainFlags& f, Manifest& man) {
  const TrainConfig cfg = f.resolve();
  const Dataset d = load_dataset(resolve_data(f.data));
  const fs::path out(f.out);
  prepare_out(out, f.force);
  man.config = json::parse(config_to_json(cfg));
  man.fingerprint = dataset_fingerprint(d);
  const RunResult run = train_multi(d, cfg, true, f.jobs);
  write_run(out, run);
  for (const auto& s : run.seeds)
    save_checkpoint({s.params, cfg.row_normalize_features},
                    out / ("checkpoint_seed" + std::to_string(s.seed) + ".json"));
  man.write(out);
  std::printf("test_acc mean=%.4f std=%.4f stderr=%.4f n=%zu\n", run.test.mean, run.test.std,
              run.test.stderr_, run.seeds.size());
  std::printf("val_acc mean=%.4f std=%.4f\n", run.val.mean, run.val.std);
  return kExitOk;
}

// ---- sweep ----

GridSpec parse_grid_args(const std::vector<std::string>& args) {
  GridSpec spec;
  std::set<std::string> seen;
  for (const auto& a : args) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == a.size())
      throw UsageError("--grid expects key=v1,v2,...: " + a);
    const std::string key = a.substr(0, eq);
    if (!seen.insert(key).second) throw UsageError("--grid key repeated: " + key);
    std::vector<double> values;
    std::string rest = a.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (tok.empty() || used != tok.size()) throw UsageError("--grid value is not a number: " + tok);
      values.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    TrainConfig probe;
    try {
      apply_grid_value(probe, key, values.front());
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    spec.emplace_back(key, std::move(values));
  }
  return spec;
}

int cmd_sweep(const TrainFlags& f, const std::vector<std::string>& grid_args, bool published, Manifest& man) {
  GridSpec grids = published ? published_grids() : GridSpec{};
  if (published && !grid_args.empty()) throw UsageError("--published-grids and --grid are exclusive");
  if (!published) grids = parse_grid_args(grid_args);
  if (grids.empty()) throw UsageError("empty grid: pass --grid key=values or --published-grids");
  const TrainConfig base = f.resolve();
  const Dataset d = load_dataset(resolve_data(f.data));
  const fs::path out(f.out);
  prepare_out(out, f.force);
  json mc = json::parse(config_to_json(base));
  json g = json::object();
  for (const auto& [k, v] : grids) g[k] = v;
  man.config = {{"base", mc}, {"grid", g}};
  man.fingerprint = dataset_fingerprint(d);
  const GridSearchResult res = grid_search(d, base, grids, f.jobs);
  write_file(out / "sweep.tsv", sweep_tsv(res));
  write_file(out / "best.json", config_to_json(res.best_config));
  write_file(out / "summary.json", run_summary_json(res.best_run));
  man.write(out);
  std::printf("grid_points=%zu best_index=%zu best_val_acc=%.4f\n", res.rows.size(),
              res.rows[res.best].index, res.rows[res.best].val.mean);
  std::printf("test_acc mean=%.4f std=%.4f stderr=%.4f n=%zu\n", res.best_run.test.mean,
              res.best_run.test.std, res.best_run.test.stderr_, res.best_run.seeds.size());
  return kExitOk;
}

// ---- diagnose ----

struct DiagnoseFlags {
  std::string kind, data, checkpoint, out, variant = "linear";
  std::uint64_t seed = 0;
  bool force = false;
};

int cmd_diagnose(const DiagnoseFlags& f, Manifest& man) {
  const bool needs_model = f.kind == "cka" || f.kind == "pearson";
  if (needs_model && f.checkpoint.empty()) throw UsageError("diagnose " + f.kind + " requires --checkpoint");
  Dataset d = load_dataset(resolve_data(f.data));
  std::optional<Checkpoint> ckpt;
  if (needs_model) {
    ckpt = load_checkpoint(f.checkpoint);
    if (ckpt->params.in_features() != d.num_features() || ckpt->params.classes() != d.num_classes())
      throw Error("checkpoint shape does not match the dataset");
    if (ckpt->row_normalized_features) d = d.with_row_normalized_features();
  }
  const fs::path out(f.out);
  prepare_out(out, f.force);
  man.config = {{"kind", f.kind}, {"seed", f.seed}, {"variant", f.variant},
                {"checkpoint", f.checkpoint.empty() ? json(nullptr) : json(f.checkpoint)}};
  man.fingerprint = dataset_fingerprint(d);
  const CsrGraph g = CsrGraph::from_dataset(d);
  const auto& labeled = d.split().labeled;

  if (f.kind == "rc") {
    const RCReport rc = reaching_coefficient(g, labeled);
    write_file(out / "rc.tsv", rc_tsv(rc));
    write_file(out / "rc.json", rc_summary_json(rc, rc_buckets(rc)));
    if (!rc.diameter_exact) std::cerr << "warning: graph too large for an exact diameter; using a double-sweep lower bound\n";
    std::cout << "rc nodes=" << rc.nodes.size() << " diameter=" << rc.diameter << "\n";
  } else if (f.kind == "cka") {
    const RCReport rc = reaching_coefficient(g, labeled);
    const CKAReport rep = cka_by_bucket(representations(d, ckpt->params), labeled, rc_buckets(rc), f.seed,
                                        f.variant == "printed" ? CkaVariant::Printed : CkaVariant::Linear);
    write_file(out / "cka.tsv", cka_tsv(rep));
    write_file(out / "cka.json", cka_summary_json(rep));
    std::cout << cka_tsv(rep);
  } else if (f.kind == "avgsp") {
    const DegreeSPReport rep = avg_sp_by_degree(g, labeled);
    write_file(out / "avgsp.tsv", avgsp_tsv(rep));
    write_file(out / "avgsp_nodes.tsv", avgsp_nodes_tsv(rep));
    write_file(out / "avgsp.json", avgsp_summary_json(rep));
    std::cout << "avgsp degrees=" << rep.mean_sp.size() << " nodes=" << rep.nodes.size() << "\n";
  } else {
    const RCReport rc = reaching_coefficient(g, labeled);
    const Matrix probs = softmax_rows(representations(d, ckpt->params));
    const PearsonReport rep = pearson_rc_vs_score(probs, d.labels(), rc);
    write_file(out / "pearson.tsv", pearson_tsv(rep));
    write_file(out / "pearson.json", pearson_summary_json(rep));
    std::printf("pearson r=%.6f nodes=%zu\n", rep.r, rep.nodes.size());
  }
  man.write(out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NodeMixup training and under-reaching diagnostics"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(NODEMIXUP_VERSION));
  Manifest man;
  man.command = joined_argv(argc, argv);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a stochastic block model dataset");
  SbmParams sbm;
  std::string synth_out;
  bool synth_force = false;
  synth->add_option("--classes", sbm.num_classes)->check(CLI::PositiveNumber);
  synth->add_option("--per-class", sbm.nodes_per_class)->check(CLI::PositiveNumber);
  synth->add_option("--p-in", sbm.p_in)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--p-out", sbm.p_out)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--feature-dim", sbm.feature_dim)->check(CLI::PositiveNumber);
  synth->add_option("--noise", sbm.feature_noise)->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", sbm.seed);
  synth->add_option("--labels-per-class", sbm.labels_per_class);
  synth->add_option("--valid-per-class", sbm.valid_per_class);
  synth->add_option("--out", synth_out, "Dataset directory")->required();
  synth->add_flag("--force", synth_force);

  // convert
  auto* convert = app.add_subcommand("convert", "Convert an external dataset layout");
  auto* linqs = convert->add_subcommand("linqs", "LINQS <name>.content / <name>.cites dump");
  convert->require_subcommand(1);
  std::string content, cites, conv_out;
  std::size_t conv_labels = 20, conv_valid = 30;
  std::uint64_t conv_seed = 0;
  bool conv_force = false;
  linqs->add_option("--content", content)->required()->check(CLI::ExistingFile);
  linqs->add_option("--cites", cites)->required()->check(CLI::ExistingFile);
  linqs->add_option("--labels-per-class", conv_labels);
  linqs->add_option("--valid-per-class", conv_valid);
  linqs->add_option("--seed", conv_seed);
  linqs->add_option("--out", conv_out)->required();
  linqs->add_flag("--force", conv_force);

  // train
  auto* train = app.add_subcommand("train", "Train over seeds and report test accuracy");
  TrainFlags train_flags;
  train_flags.add_to(train);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Grid search selected by validation accuracy");
  TrainFlags sweep_flags;
  sweep_flags.add_to(sweep);
  std::vector<std::string> grid_args;
  bool published = false;
  sweep->add_option("--grid", grid_args, "key=v1,v2,... (repeatable)");
  sweep->add_flag("--published-grids", published, "Search the published hyperparameter grids");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Under-reaching diagnostics");
  DiagnoseFlags diag;
  diagnose->add_option("kind", diag.kind)->required()->check(CLI::IsMember({"rc", "cka", "avgsp", "pearson"}));
  diagnose->add_option("--data", diag.data)->required();
  diagnose->add_option("--checkpoint", diag.checkpoint, "Checkpoint file (cka, pearson)");
  diagnose->add_option("--out", diag.out)->required();
  diagnose->add_option("--seed", diag.seed, "CKA sampling seed");
  diagnose->add_option("--variant", diag.variant)->check(CLI::IsMember({"linear", "printed"}));
  diagnose->add_flag("--force", diag.force);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check on a tiny graph");
  TinyProblem tiny;
  double eps = 1e-5, threshold = 1e-5;
  bool gc_mixup = false;
  gradcheck->add_option("--eps", eps)->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", tiny.seed);
  gradcheck->add_option("--nodes", tiny.nodes)->check(CLI::Range(4, 200));
  gradcheck->add_option("--threshold", threshold)->check(CLI::PositiveNumber);
  gradcheck->add_flag("--mixup", gc_mixup, "Check the full regularized objective");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) {
      json cfg{{"classes", sbm.num_classes}, {"per_class", sbm.nodes_per_class}, {"p_in", sbm.p_in},
               {"p_out", sbm.p_out}, {"feature_dim", sbm.feature_dim}, {"noise", sbm.feature_noise},
               {"seed", sbm.seed}, {"labels_per_class", sbm.labels_per_class},
               {"valid_per_class", sbm.valid_per_class}};
      write_dataset_dir(generate_sbm(sbm), synth_out, synth_force, man, cfg);
      return kExitOk;
    }
    if (*convert) {
      json cfg{{"format", "linqs"}, {"content", content}, {"cites", cites},
               {"labels_per_class", conv_labels}, {"valid_per_class", conv_valid}, {"seed", conv_seed}};
      write_dataset_dir(convert_linqs(content, cites, conv_labels, conv_valid, conv_seed), conv_out,
                        conv_force, man, cfg);
      return kExitOk;
    }
    if (*train) return cmd_train(train_flags, man);
    if (*sweep) return cmd_sweep(sweep_flags, grid_args, published, man);
    if (*diagnose) return cmd_diagnose(diag, man);
    if (*gradcheck) {
      const GradCheckResult r = gradcheck_tiny(tiny, eps, gc_mixup);
      const bool pass = r.max_rel_error < threshold && r.checked > 0;
      std::printf("%s max_rel_err=%.3e checked=%zu skipped_kinks=%zu eps=%g\n", pass ? "PASS" : "FAIL",
                  r.max_rel_error, r.checked, r.skipped_kinks, eps);
      return pass ? kExitOk : kExitFailure;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
