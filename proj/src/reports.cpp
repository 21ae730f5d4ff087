#include "nodemixup/reports.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace nodemixup {

using nlohmann::json;

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_real: conversion failed");
  return std::string(buf, ptr);
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
}

std::string epoch_metrics_tsv(const std::vector<EpochMetrics>& epochs) {
  std::string s =
      "epoch\tloss\tloss_gnn\tloss_intra\tloss_inter\ttrain_acc\tval_acc\tval_loss\t"
      "pseudo_labeled\tintra_pairs\tinter_pairs\n";
  for (const auto& m : epochs) {
    s += std::to_string(m.epoch) + "\t" + format_real(m.loss.total) + "\t" + format_real(m.loss.gnn) +
         "\t" + format_real(m.loss.intra) + "\t" + format_real(m.loss.inter) + "\t" +
         format_real(m.train_acc) + "\t" + format_real(m.val_acc) + "\t" + format_real(m.val_loss) +
         "\t" + std::to_string(m.pseudo_labeled) + "\t" + std::to_string(m.intra_pairs) + "\t" +
         std::to_string(m.inter_pairs) + "\n";
  }
  return s;
}

std::string epoch_timing_tsv(const std::vector<EpochMetrics>& epochs) {
  std::string s = "epoch\tseconds\n";
  for (const auto& m : epochs) s += std::to_string(m.epoch) + "\t" + format_real(m.seconds) + "\n";
  return s;
}

namespace {

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"stderr", s.stderr_}}; }

}  // namespace

std::string run_summary_json(const RunResult& run) {
  json j;
  j["schema"] = kReportSchema;
  j["kind"] = "train";
  j["test_acc"] = summary_json(run.test);
  j["val_acc"] = summary_json(run.val);
  json seeds = json::array();
  for (const auto& s : run.seeds) {
    json e{{"seed", s.seed}, {"best_val_acc", s.best_val_acc}, {"best_epoch", s.best_epoch},
           {"epochs_run", s.epochs.size()}};
    e["test_acc"] = s.test_acc ? json(*s.test_acc) : json(nullptr);
    seeds.push_back(e);
  }
  j["seeds"] = seeds;
  return j.dump(2) + "\n";
}

std::string rc_tsv(const RCReport& rc) {
  std::string s = "node\trc\tmin_distance\tmean_distance\n";
  for (std::size_t k = 0; k < rc.nodes.size(); ++k)
    s += std::to_string(rc.nodes[k]) + "\t" + format_real(rc.rc[k]) + "\t" +
         format_real(rc.min_distance[k]) + "\t" + format_real(rc.mean_distance[k]) + "\n";
  return s;
}

std::string rc_summary_json(const RCReport& rc, const std::array<std::vector<NodeId>, 5>& buckets) {
  json j;
  j["schema"] = kReportSchema;
  j["kind"] = "rc";
  j["diameter"] = rc.diameter;
  j["diameter_exact"] = rc.diameter_exact;
  j["unlabeled_nodes"] = rc.nodes.size();
  if (!rc.rc.empty()) {
    j["rc_max"] = *std::max_element(rc.rc.begin(), rc.rc.end());
    j["rc_min"] = *std::min_element(rc.rc.begin(), rc.rc.end());
    j["rc_mean"] = std::accumulate(rc.rc.begin(), rc.rc.end(), 0.0) / static_cast<double>(rc.rc.size());
  }
  json sizes = json::array();
  for (const auto& b : buckets) sizes.push_back(b.size());
  j["bucket_sizes"] = sizes;
  return j.dump(2) + "\n";
}

std::string cka_tsv(const CKAReport& rep) {
  static const char* names[] = {"I", "II", "III", "IV", "V"};
  std::string s = "bucket\tbucket_size\tsample_size\tcka\n";
  for (std::size_t b = 0; b < 5; ++b)
    s += std::string(names[b]) + "\t" + std::to_string(rep.bucket_size[b]) + "\t" +
         std::to_string(rep.sample_size[b]) + "\t" + (rep.value[b] ? format_real(*rep.value[b]) : "NA") +
         "\n";
  return s;
}

std::string cka_summary_json(const CKAReport& rep) {
  json j;
  j["schema"] = kReportSchema;
  j["kind"] = "cka";
  j["seed"] = rep.seed;
  json values = json::array();
  for (const auto& v : rep.value) values.push_back(v ? json(*v) : json(nullptr));
  j["cka"] = values;
  j["sample_size"] = rep.sample_size;
  j["bucket_size"] = rep.bucket_size;
  return j.dump(2) + "\n";
}

std::string avgsp_tsv(const DegreeSPReport& rep) {
  std::string s = "degree\tnodes\tavg_sp\n";
  for (const auto& [deg, mean] : rep.mean_sp)
    s += std::to_string(deg) + "\t" + std::to_string(rep.count.at(deg)) + "\t" + format_real(mean) + "\n";
  return s;
}

std::string avgsp_nodes_tsv(const DegreeSPReport& rep) {
  std::string s = "node\tdegree\tavg_sp\n";
  for (std::size_t k = 0; k < rep.nodes.size(); ++k)
    s += std::to_string(rep.nodes[k]) + "\t" + std::to_string(rep.degree[k]) + "\t" +
         format_real(rep.avg_sp[k]) + "\n";
  return s;
}

std::string avgsp_summary_json(const DegreeSPReport& rep) {
  json j;
  j["schema"] = kReportSchema;
  j["kind"] = "avgsp";
  j["diameter"] = rep.diameter;
  std::vector<double> deg, sp, node_deg(rep.degree.begin(), rep.degree.end());
  for (const auto& [d, m] : rep.mean_sp) {
    deg.push_back(static_cast<double>(d));
    sp.push_back(m);
  }
  try {
    j["spearman_by_degree_group"] = spearman(deg, sp);
  } catch (const Error&) {
    j["spearman_by_degree_group"] = nullptr;
  }
  try {
    j["spearman_by_node"] = spearman(node_deg, rep.avg_sp);
  } catch (const Error&) {
    j["spearman_by_node"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string pearson_tsv(const PearsonReport& rep) {
  std::string s = "node\tscore\trc\n";
  for (std::size_t k = 0; k < rep.nodes.size(); ++k)
    s += std::to_string(rep.nodes[k]) + "\t" + format_real(rep.score[k]) + "\t" + format_real(rep.rc[k]) + "\n";
  return s;
}

std::string pearson_summary_json(const PearsonReport& rep) {
  json j;
  j["schema"] = kReportSchema;
  j["kind"] = "pearson";
  j["r"] = rep.r;
  j["nodes"] = rep.nodes.size();
  return j.dump(2) + "\n";
}

std::string sweep_tsv(const GridSearchResult& res) {
  std::vector<std::size_t> order(res.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return res.rows[a].val.mean > res.rows[b].val.mean;
  });
  std::string s = "index";
  for (const auto& k : res.keys) s += "\t" + k;
  s += "\tval_acc_mean\tval_acc_std\n";
  for (std::size_t i : order) {
    const auto& r = res.rows[i];
    s += std::to_string(r.index);
    for (double v : r.values) s += "\t" + format_real(v);
    s += "\t" + format_real(r.val.mean) + "\t" + format_real(r.val.std) + "\n";
  }
  return s;
}

}  // namespace nodemixup
