#include "nodemixup/graphio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "nodemixup/rng.hpp"

namespace nodemixup {
namespace fs = std::filesystem;

namespace {

std::string where(const fs::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (!s.empty() && s.front() == '+') ++first;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("missing file: " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  // a single trailing blank line is a normal end-of-file artifact
  while (!lines.empty() && split_ws(lines.back()).empty()) lines.pop_back();
  return lines;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
}

std::string edges_text(const Dataset& d) {
  std::string s;
  for (auto [u, v] : d.edges()) s += std::to_string(u) + "\t" + std::to_string(v) + "\n";
  return s;
}

std::string features_text(const Dataset& d) {
  std::string s;
  const Matrix& x = d.features();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (c) s += '\t';
      s += format_double(x(r, c));
    }
    s += '\n';
  }
  return s;
}

std::string labels_text(const Dataset& d) {
  std::string s;
  for (auto y : d.labels()) s += std::to_string(y) + "\n";
  return s;
}

std::string split_text(const Dataset& d) {
  nlohmann::json j;
  j["num_classes"] = d.num_classes();
  j["labeled"] = d.split().labeled;
  j["valid"] = d.split().valid;
  j["test"] = d.split().test;
  return j.dump() + "\n";
}

}  // namespace

void validate_split(const SplitSpec& split, std::size_t num_nodes) {
  if (split.labeled.empty()) throw Error("split: labeled set is empty");
  std::vector<int> owner(num_nodes, -1);
  auto mark = [&](const std::vector<NodeId>& ids, int tag, const char* name) {
    for (NodeId id : ids) {
      if (id >= num_nodes)
        throw Error(std::string("split: ") + name + " id " + std::to_string(id) + " out of range");
      if (owner[id] != -1)
        throw Error(std::string("split: node ") + std::to_string(id) + " listed twice");
      owner[id] = tag;
    }
  };
  mark(split.labeled, 0, "labeled");
  mark(split.valid, 1, "valid");
  mark(split.test, 2, "test");
}

Dataset Dataset::create(std::size_t num_classes, std::vector<Edge> edges, Matrix features,
                        std::vector<std::size_t> labels, SplitSpec split) {
  const std::size_t n = labels.size();
  if (num_classes == 0) throw Error("dataset: num_classes must be >= 1");
  if (features.rows() != n)
    throw Error("dataset: feature rows (" + std::to_string(features.rows()) +
                ") != number of nodes (" + std::to_string(n) + ")");
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] >= num_classes)
      throw Error("dataset: label " + std::to_string(labels[i]) + " of node " + std::to_string(i) +
                  " outside [0, " + std::to_string(num_classes) + ")");
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u >= n || v >= n)
      throw Error("dataset: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                  ") references a node >= " + std::to_string(n));
    if (u == v) continue;
    canon.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
  validate_split(split, n);

  Dataset d;
  d.num_classes_ = num_classes;
  d.edges_ = std::move(canon);
  d.features_ = std::move(features);
  d.labels_ = std::move(labels);
  d.split_ = std::move(split);
  return d;
}

Dataset Dataset::with_split(SplitSpec split) const {
  validate_split(split, num_nodes());
  Dataset d = *this;
  d.split_ = std::move(split);
  return d;
}

Dataset Dataset::with_row_normalized_features() const {
  Dataset d = *this;
  for (std::size_t r = 0; r < d.features_.rows(); ++r) {
    auto row = d.features_.row(r);
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    if (s != 0.0)
      for (double& v : row) v /= s;
  }
  return d;
}

std::vector<std::size_t> Dataset::degrees() const {
  std::vector<std::size_t> deg(num_nodes(), 0);
  for (auto [u, v] : edges_) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

std::vector<bool> Dataset::labeled_mask() const {
  std::vector<bool> m(num_nodes(), false);
  for (NodeId id : split_.labeled) m[id] = true;
  return m;
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path labels_file = dir / "labels.tsv";
  const fs::path features_file = dir / "features.tsv";
  const fs::path edges_file = dir / "edges.tsv";
  const fs::path split_file = dir / "split.json";
  for (const auto& f : {edges_file, features_file, labels_file, split_file})
    if (!fs::exists(f)) throw ParseError("missing file: " + f.string());

  std::vector<std::size_t> labels;
  {
    auto lines = read_lines(labels_file);
    labels.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto tok = split_ws(lines[i]);
      std::size_t y = 0;
      if (tok.size() != 1 || !parse_number(tok[0], y))
        throw ParseError(where(labels_file, i + 1) + ": expected one non-negative integer label");
      labels.push_back(y);
    }
  }
  const std::size_t n = labels.size();
  if (n == 0) throw ParseError(labels_file.string() + ": no labels");

  nlohmann::json sj;
  {
    std::ifstream in(split_file);
    try {
      sj = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(split_file.filename().string() + ": " + e.what());
    }
  }
  SplitSpec split;
  std::size_t num_classes = 0;
  try {
    split.labeled = sj.at("labeled").get<std::vector<NodeId>>();
    split.valid = sj.value("valid", std::vector<NodeId>{});
    split.test = sj.value("test", std::vector<NodeId>{});
    if (sj.contains("num_classes")) num_classes = sj.at("num_classes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(split_file.filename().string() + ": " + e.what());
  }
  if (num_classes == 0) num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] >= num_classes)
      throw ParseError(where(labels_file, i + 1) + ": label " + std::to_string(labels[i]) +
                       " out of range [0, " + std::to_string(num_classes) + ")");

  Matrix features;
  {
    auto lines = read_lines(features_file);
    if (lines.size() != n)
      throw ParseError(features_file.filename().string() + ": " + std::to_string(lines.size()) +
                       " rows but labels.tsv has " + std::to_string(n) + " nodes");
    std::size_t width = split_ws(lines[0]).size();
    if (width == 0) throw ParseError(where(features_file, 1) + ": empty feature row");
    features = Matrix(n, width);
    for (std::size_t i = 0; i < n; ++i) {
      auto tok = split_ws(lines[i]);
      if (tok.size() != width)
        throw ParseError(where(features_file, i + 1) + ": expected " + std::to_string(width) +
                         " values, found " + std::to_string(tok.size()));
      for (std::size_t c = 0; c < width; ++c) {
        double v = 0.0;
        if (!parse_number(tok[c], v))
          throw ParseError(where(features_file, i + 1) + ": malformed real '" +
                           std::string(tok[c]) + "'");
        features(i, c) = v;
      }
    }
  }

  std::vector<Edge> edges;
  {
    auto lines = read_lines(edges_file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string_view line = lines[i];
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      auto tok = split_ws(line);
      if (tok.empty()) continue;
      NodeId u = 0, v = 0;
      if (tok.size() != 2 || !parse_number(tok[0], u) || !parse_number(tok[1], v))
        throw ParseError(where(edges_file, i + 1) + ": expected 'u<TAB>v'");
      if (u >= n || v >= n)
        throw ParseError(where(edges_file, i + 1) + ": node id out of range (N=" +
                         std::to_string(n) + ")");
      edges.emplace_back(u, v);
    }
  }

  try {
    return Dataset::create(num_classes, std::move(edges), std::move(features), std::move(labels),
                           std::move(split));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(split_file.filename().string() + ": " + e.what());
  }
}

void save_dataset(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "edges.tsv", edges_text(d));
  write_text(dir / "features.tsv", features_text(d));
  write_text(dir / "labels.tsv", labels_text(d));
  write_text(dir / "split.json", split_text(d));
}

std::string dataset_fingerprint(const Dataset& d) {
  std::uint64_t h = fnv1a64(edges_text(d));
  h = splitmix64(h ^ fnv1a64(features_text(d)));
  h = splitmix64(h ^ fnv1a64(labels_text(d)));
  h = splitmix64(h ^ fnv1a64(split_text(d)));
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

Dataset generate_sbm(const SbmParams& p) {
  if (!(p.p_out >= 0.0 && p.p_out < p.p_in && p.p_in <= 1.0))
    throw Error("generate_sbm: need 0 <= p_out < p_in <= 1");
  if (p.num_classes == 0 || p.nodes_per_class == 0 || p.feature_dim == 0)
    throw Error("generate_sbm: counts must be >= 1");
  if (p.feature_dim < p.num_classes)
    throw Error("generate_sbm: feature_dim must be >= num_classes for one-hot centroids");
  if (p.feature_noise < 0.0) throw Error("generate_sbm: feature_noise must be >= 0");

  const std::size_t n = p.num_classes * p.nodes_per_class;
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i / p.nodes_per_class;

  Rng edge_rng(p.seed, "sbm-edges");
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const double prob = labels[u] == labels[v] ? p.p_in : p.p_out;
      if (edge_rng.uniform() < prob) edges.emplace_back(u, v);
    }

  Rng feat_rng(p.seed, "sbm-features");
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(n, p.feature_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < p.feature_dim; ++c) {
      double v = c == labels[i] ? 1.0 : 0.0;
      if (p.feature_noise > 0.0) v += p.feature_noise * noise(feat_rng.engine());
      x(i, c) = v;
    }
  }

  // temporary split so the dataset validates; replaced below
  SplitSpec tmp{{0}, {}, {}};
  Dataset d = Dataset::create(p.num_classes, std::move(edges), std::move(x), std::move(labels), tmp);
  return d.with_split(make_split(d, p.labels_per_class, p.valid_per_class, p.seed));
}

SplitSpec make_split(const Dataset& d, std::size_t labels_per_class, std::size_t valid_per_class,
                     std::uint64_t seed) {
  if (labels_per_class == 0) throw Error("make_split: labels_per_class must be >= 1");
  std::vector<std::vector<NodeId>> by_class(d.num_classes());
  for (NodeId i = 0; i < d.num_nodes(); ++i) by_class[d.labels()[i]].push_back(i);

  Rng rng(seed, "split");
  SplitSpec s;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& ids = by_class[c];
    if (ids.size() < labels_per_class + valid_per_class)
      throw Error("make_split: class " + std::to_string(c) + " has " + std::to_string(ids.size()) +
                  " nodes, needs " + std::to_string(labels_per_class + valid_per_class));
    // Fisher-Yates, drawing from the back
    for (std::size_t k = ids.size(); k > 1; --k) std::swap(ids[k - 1], ids[rng.below(k)]);
    s.labeled.insert(s.labeled.end(), ids.begin(), ids.begin() + labels_per_class);
    s.valid.insert(s.valid.end(), ids.begin() + labels_per_class,
                   ids.begin() + labels_per_class + valid_per_class);
    s.test.insert(s.test.end(), ids.begin() + labels_per_class + valid_per_class, ids.end());
  }
  std::sort(s.labeled.begin(), s.labeled.end());
  std::sort(s.valid.begin(), s.valid.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Dataset convert_linqs(const fs::path& content, const fs::path& cites,
                      std::size_t labels_per_class, std::size_t valid_per_class,
                      std::uint64_t seed) {
  auto content_lines = read_lines(content);
  if (content_lines.empty()) throw ParseError(content.string() + ": empty");
  std::unordered_map<std::string, NodeId> index;
  std::map<std::string, std::size_t> class_ids;
  std::vector<std::string> class_order;
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < content_lines.size(); ++i) {
    auto tok = split_ws(content_lines[i]);
    if (tok.size() < 3) throw ParseError(where(content, i + 1) + ": too few columns");
    index.emplace(std::string(tok.front()), rows.size());
    std::string cls(tok.back());
    auto [it, inserted] = class_ids.emplace(cls, class_order.size());
    if (inserted) class_order.push_back(cls);
    labels.push_back(it->second);
    std::vector<double> row(tok.size() - 2);
    for (std::size_t c = 1; c + 1 < tok.size(); ++c)
      if (!parse_number(tok[c], row[c - 1]))
        throw ParseError(where(content, i + 1) + ": malformed feature value");
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(where(content, i + 1) + ": feature width mismatch");
    rows.push_back(std::move(row));
  }
  Matrix x(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), x.row(r).begin());

  std::vector<Edge> edges;
  auto cite_lines = read_lines(cites);
  for (std::size_t i = 0; i < cite_lines.size(); ++i) {
    auto tok = split_ws(cite_lines[i]);
    if (tok.empty()) continue;
    if (tok.size() != 2) throw ParseError(where(cites, i + 1) + ": expected two paper ids");
    auto a = index.find(std::string(tok[0]));
    auto b = index.find(std::string(tok[1]));
    if (a == index.end() || b == index.end()) continue;  // dangling citations exist in the dump
    edges.emplace_back(a->second, b->second);
  }
  SplitSpec tmp{{0}, {}, {}};
  Dataset d = Dataset::create(class_order.size(), std::move(edges), std::move(x), std::move(labels),
                              tmp);
  return d.with_split(make_split(d, labels_per_class, valid_per_class, seed));
}

}  // namespace nodemixup
