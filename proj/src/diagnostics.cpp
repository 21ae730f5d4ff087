#include "nodemixup/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nodemixup/rng.hpp"

namespace nodemixup {

namespace {

std::vector<NodeId> unlabeled_nodes(std::size_t n, std::span<const NodeId> labeled_ids) {
  std::vector<char> labeled(n, 0);
  for (NodeId i : labeled_ids) {
    if (i >= n) throw Error("labeled id out of range");
    labeled[i] = 1;
  }
  std::vector<NodeId> out;
  for (NodeId i = 0; i < n; ++i)
    if (!labeled[i]) out.push_back(i);
  return out;
}

/// BFS table: one distance vector per labeled source.
std::vector<std::vector<std::size_t>> distances_from(const CsrGraph& g,
                                                     std::span<const NodeId> sources) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(sources.size());
  for (NodeId s : sources) {
    const NodeId src[] = {s};
    out.push_back(bfs_distances(g, src));
  }
  return out;
}

}  // namespace

RCReport reaching_coefficient(const CsrGraph& g, std::span<const NodeId> labeled_ids) {
  if (labeled_ids.empty()) throw Error("reaching_coefficient: labeled set is empty");
  const GraphShape shape = diameter_and_components(g);
  if (shape.diameter < 2)
    throw Error("reaching_coefficient: graph diameter " + std::to_string(shape.diameter) +
                " < 2 makes log(D) degenerate");
  RCReport rep;
  rep.diameter = shape.diameter;
  rep.diameter_exact = shape.exact;
  rep.nodes = unlabeled_nodes(g.num_nodes(), labeled_ids);
  const auto table = distances_from(g, labeled_ids);
  const double log_d = std::log(static_cast<double>(shape.diameter));
  const double inv_l = 1.0 / static_cast<double>(labeled_ids.size());
  for (NodeId i : rep.nodes) {
    double acc = 0.0, dsum = 0.0, dmin = static_cast<double>(shape.diameter);
    for (const auto& dist : table) {
      const double d = dist[i] == kUnreachable ? static_cast<double>(shape.diameter)
                                               : static_cast<double>(dist[i]);
      acc += 1.0 - std::log(d) / log_d;
      dsum += d;
      dmin = std::min(dmin, d);
    }
    rep.rc.push_back(acc * inv_l);
    rep.mean_distance.push_back(dsum * inv_l);
    rep.min_distance.push_back(dmin);
  }
  return rep;
}

std::array<std::vector<NodeId>, 5> rc_buckets(const RCReport& rc) {
  if (rc.nodes.empty()) throw Error("rc_buckets: no unlabeled nodes");
  std::array<std::vector<NodeId>, 5> out;
  const double m = *std::max_element(rc.rc.begin(), rc.rc.end());
  for (std::size_t k = 0; k < rc.nodes.size(); ++k) {
    const double v = rc.rc[k];
    std::size_t b = 4;
    if (m <= 0.0) {
      b = 0;
    } else {
      for (std::size_t j = 0; j < 4; ++j) {
        if (v <= static_cast<double>(j + 1) * m / 5.0) {
          b = j;
          break;
        }
      }
    }
    out[b].push_back(rc.nodes[k]);
  }
  return out;
}

double cka(const Matrix& zl, const Matrix& zu, CkaVariant variant) {
  if (zl.rows() != zu.rows()) throw Error("cka: row counts differ");
  if (zl.rows() < 2) throw Error("cka: need at least two rows");
  auto center = [](const Matrix& z) {
    Matrix c = z;
    for (std::size_t j = 0; j < c.cols(); ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < c.rows(); ++i) mean += c(i, j);
      mean /= static_cast<double>(c.rows());
      for (std::size_t i = 0; i < c.rows(); ++i) c(i, j) -= mean;
    }
    return c;
  };
  const Matrix a = center(zl);
  const Matrix b = center(zu);
  if (frobenius_norm(a) == 0.0 || frobenius_norm(b) == 0.0)
    throw Error("cka: zero variance after centering");
  const double cross = frobenius_norm(matmul_at_b(b, a));
  double value = 0.0;
  if (variant == CkaVariant::Linear) {
    value = cross * cross / (frobenius_norm(matmul_at_b(a, a)) * frobenius_norm(matmul_at_b(b, b)));
  } else {
    value = cross / (frobenius_norm(matmul_a_bt(a, a)) * frobenius_norm(matmul_a_bt(b, b)));
  }
  return std::clamp(value, 0.0, 1.0);
}

Matrix representations(const Dataset& d, const ModelParams& params) {
  const CsrGraph a_hat = sym_normalize(add_self_loops(CsrGraph::from_dataset(d)));
  return gcn_forward(d.features(), a_hat, params).logits;
}

CKAReport cka_by_bucket(const Matrix& reps, std::span<const NodeId> labeled_ids,
                        const std::array<std::vector<NodeId>, 5>& buckets, std::uint64_t seed,
                        CkaVariant variant) {
  CKAReport rep;
  rep.seed = seed;
  Rng rng(seed, "cka");
  auto sample = [&rng](std::vector<NodeId> pool, std::size_t m) {
    for (std::size_t k = 0; k < m; ++k) std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
    pool.resize(m);
    std::sort(pool.begin(), pool.end());  // rows pair up by id order
    return pool;
  };
  const std::vector<NodeId> labeled(labeled_ids.begin(), labeled_ids.end());
  for (std::size_t b = 0; b < 5; ++b) {
    rep.bucket_size[b] = buckets[b].size();
    const std::size_t m = std::min(labeled.size(), buckets[b].size());
    rep.sample_size[b] = m;
    if (m < 2) continue;
    const auto ls = sample(labeled, m);
    const auto us = sample(buckets[b], m);
    try {
      rep.value[b] = cka(gather_rows(reps, ls), gather_rows(reps, us), variant);
    } catch (const Error&) {
      // zero-variance sample: nothing to compare
    }
  }
  return rep;
}

DegreeSPReport avg_sp_by_degree(const CsrGraph& g, std::span<const NodeId> labeled_ids) {
  if (labeled_ids.empty()) throw Error("avg_sp_by_degree: labeled set is empty");
  DegreeSPReport rep;
  rep.diameter = diameter_and_components(g).diameter;
  rep.nodes = unlabeled_nodes(g.num_nodes(), labeled_ids);
  const auto table = distances_from(g, labeled_ids);
  std::map<std::size_t, double> sums;
  for (NodeId i : rep.nodes) {
    std::size_t deg = 0;
    for (NodeId v : g.neighbors(i)) deg += v != i;
    double s = 0.0;
    for (const auto& dist : table)
      s += dist[i] == kUnreachable ? static_cast<double>(rep.diameter) : static_cast<double>(dist[i]);
    const double avg = s / static_cast<double>(labeled_ids.size());
    rep.degree.push_back(deg);
    rep.avg_sp.push_back(avg);
    sums[deg] += avg;
    ++rep.count[deg];
  }
  for (const auto& [deg, s] : sums) rep.mean_sp[deg] = s / static_cast<double>(rep.count[deg]);
  return rep;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 2) throw Error("pearson: need at least two points");
  // Checked on the raw values: a rounded mean leaves a tiny spurious variance.
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y)) throw Error("pearson: zero variance in a series");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("pearson: zero variance in a series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return pearson(rx, ry);
}

PearsonReport pearson_rc_vs_score(const Matrix& probs, std::span<const std::size_t> labels,
                                  const RCReport& rc) {
  if (rc.nodes.size() < 3) throw Error("pearson_rc_vs_score: need at least 3 unlabeled nodes");
  PearsonReport rep;
  rep.nodes = rc.nodes;
  rep.rc = rc.rc;
  for (NodeId i : rc.nodes) rep.score.push_back(probs(i, labels[i]));
  rep.r = pearson(rep.score, rep.rc);
  return rep;
}

}  // namespace nodemixup
