#include <doctest.h>

#include <numeric>

#include <cmath>
#include <random>

#include "nodemixup/diagnostics.hpp"
#include "support.hpp"

using namespace nodemixup;

TEST_CASE("rc: path a-b-c with a labeled") {
  const std::vector<Edge> e{{0, 1}, {1, 2}};
  const NodeId labeled[] = {0};
  const RCReport r = reaching_coefficient(CsrGraph::from_edges(3, e), labeled);
  CHECK(r.nodes == std::vector<NodeId>{1, 2});
  CHECK(r.rc[0] == 1.0);
  CHECK(r.rc[1] == 0.0);
  CHECK(r.diameter == 2);
}

TEST_CASE("rc: other component counts as distance D") {
  // path 0-1-2 plus isolated edge 3-4
  const std::vector<Edge> e{{0, 1}, {1, 2}, {3, 4}};
  const NodeId labeled[] = {0};
  const RCReport r = reaching_coefficient(CsrGraph::from_edges(5, e), labeled);
  CHECK(r.rc[2] == 0.0);
  CHECK(r.rc[3] == 0.0);
  CHECK(r.min_distance[3] == 2.0);
}

TEST_CASE("rc: errors") {
  const std::vector<Edge> e{{0, 1}};
  const NodeId labeled[] = {0};
  CHECK_THROWS_AS(reaching_coefficient(CsrGraph::from_edges(2, e), labeled), Error);
  const std::vector<Edge> p{{0, 1}, {1, 2}};
  CHECK_THROWS_AS(reaching_coefficient(CsrGraph::from_edges(3, p), std::span<const NodeId>{}), Error);
}

TEST_CASE("rc matches a brute-force recomputation on random graphs") {
  std::mt19937_64 gen(31);
  int tested = 0;
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 5 + gen() % 46;
    const auto edges = testsupport::random_edges(n, 3.0 / static_cast<double>(n), gen);
    const auto fw = testsupport::floyd_warshall(n, edges);
    double diam = 0;
    for (const auto& row : fw)
      for (double v : row)
        if (!std::isinf(v)) diam = std::max(diam, v);
    if (diam < 2) continue;
    std::vector<NodeId> labeled;
    for (NodeId i = 0; i < n; ++i)
      if (gen() % 4 == 0) labeled.push_back(i);
    if (labeled.empty() || labeled.size() == n) continue;
    const RCReport r = reaching_coefficient(CsrGraph::from_edges(n, edges), labeled);
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
      double acc = 0;
      for (NodeId j : labeled) {
        const double d = std::isinf(fw[r.nodes[k]][j]) ? diam : fw[r.nodes[k]][j];
        acc += 1.0 - std::log(d) / std::log(diam);
      }
      CHECK(std::abs(r.rc[k] - acc / static_cast<double>(labeled.size())) < 1e-12);
      CHECK(r.rc[k] >= 0.0);
      CHECK(r.rc[k] <= 1.0);
    }
    ++tested;
  }
  CHECK(tested > 30);
}

TEST_CASE("rc buckets: boundaries and partition") {
  RCReport r;
  r.nodes = {10, 11, 12, 13};
  r.rc = {0.0, 0.2, 1.0, 0.5};
  auto b = rc_buckets(r);
  CHECK(b[0] == std::vector<NodeId>{10, 11});
  CHECK(b[2] == std::vector<NodeId>{13});
  CHECK(b[4] == std::vector<NodeId>{12});
  r.rc = {0.3, 0.3, 0.3, 0.3};
  b = rc_buckets(r);
  CHECK(b[4].size() == 4);
  r.rc = {0.0, 0.0, 0.0, 0.0};
  b = rc_buckets(r);
  CHECK(b[0].size() == 4);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  r.nodes.clear();
  r.rc.clear();
  for (NodeId i = 0; i < 500; ++i) r.nodes.push_back(i), r.rc.push_back(u(gen));
  b = rc_buckets(r);
  std::vector<int> seen(500, 0);
  for (const auto& bucket : b)
    for (NodeId i : bucket) ++seen[i];
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("cka: self, rotation, scale, symmetry, HSIC oracle") {
  std::mt19937_64 gen(41);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 5 + gen() % 20, n = 2 + gen() % 6;
    const Matrix z = testsupport::random_matrix(m, n, gen);
    const Matrix w = testsupport::random_matrix(m, n, gen);
    CHECK(std::abs(cka(z, z) - 1.0) < 1e-10);
    CHECK(std::abs(cka(z, matmul(z, testsupport::random_orthogonal(n, gen))) - 1.0) < 1e-10);
    Matrix scaled = z;
    for (double& v : scaled.data()) v *= -3.7;
    CHECK(std::abs(cka(z, scaled) - 1.0) < 1e-10);
    CHECK(std::abs(cka(z, w) - cka(w, z)) < 1e-12);
    CHECK(std::abs(cka(z, w) - testsupport::cka_hsic(z, w)) < 1e-10);
    const double v = cka(z, w);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  Matrix flat(4, 2, 1.0);
  CHECK_THROWS_AS(cka(flat, flat), Error);
  CHECK_THROWS_AS(cka(Matrix(1, 2), Matrix(1, 2)), Error);
}

TEST_CASE("cka printed variant is not self-normalized") {
  std::mt19937_64 gen(5);
  const Matrix z = testsupport::random_matrix(10, 3, gen);
  CHECK(cka(z, z, CkaVariant::Printed) < 1.0 - 1e-6);
}

TEST_CASE("cka by bucket: identical sets give 1, small buckets are absent") {
  std::mt19937_64 gen(6);
  const Matrix reps = testsupport::random_matrix(20, 3, gen);
  const std::vector<NodeId> labeled{0, 1, 2, 3, 4};
  std::array<std::vector<NodeId>, 5> buckets;
  buckets[0] = labeled;
  buckets[1] = {7};
  buckets[3] = {8, 9, 10, 11, 12, 13, 14};
  const CKAReport r = cka_by_bucket(reps, labeled, buckets, 3);
  REQUIRE(r.value[0].has_value());
  CHECK(std::abs(*r.value[0] - 1.0) < 1e-10);
  CHECK_FALSE(r.value[1].has_value());
  CHECK_FALSE(r.value[2].has_value());
  CHECK(r.value[3].has_value());
  CHECK(r.sample_size[3] == 5);
  CHECK(r.bucket_size[3] == 7);
  CHECK(cka_by_bucket(reps, labeled, buckets, 3).value == r.value);
}

TEST_CASE("avg sp by degree: star and path") {
  const std::vector<Edge> star{{0, 1}, {0, 2}, {0, 3}};
  const NodeId center[] = {0};
  const DegreeSPReport s = avg_sp_by_degree(CsrGraph::from_edges(4, star), center);
  CHECK(s.mean_sp.size() == 1);
  CHECK(s.mean_sp.at(1) == 1.0);
  CHECK(s.count.at(1) == 3);
  const std::vector<Edge> path{{0, 1}, {1, 2}};
  const DegreeSPReport p = avg_sp_by_degree(CsrGraph::from_edges(3, path), center);
  CHECK(p.mean_sp.at(1) == 2.0);
  CHECK(p.mean_sp.at(2) == 1.0);
}

TEST_CASE("avg sp: count-weighted group means equal the global mean") {
  std::mt19937_64 gen(8);
  const std::size_t n = 60;
  const auto edges = testsupport::random_edges(n, 0.06, gen);
  const std::vector<NodeId> labeled{0, 5, 17, 33};
  const DegreeSPReport r = avg_sp_by_degree(CsrGraph::from_edges(n, edges), labeled);
  double global = 0, weighted = 0;
  for (double v : r.avg_sp) global += v;
  global /= static_cast<double>(r.avg_sp.size());
  for (const auto& [deg, m] : r.mean_sp) weighted += m * static_cast<double>(r.count.at(deg));
  weighted /= static_cast<double>(r.nodes.size());
  CHECK(std::abs(global - weighted) < 1e-12);
}

TEST_CASE("pearson and spearman") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10.5};
  std::vector<double> ya;
  for (double v : y) ya.push_back(-0.5 + 3.0 * v);
  CHECK(pearson(x, ya) == doctest::Approx(pearson(x, y)).epsilon(1e-14));
  CHECK(pearson(x, x) == doctest::Approx(1.0));
  const std::vector<double> cube{1, 8, 27, 64, 125};
  CHECK(spearman(x, cube) == doctest::Approx(1.0));
  const std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(spearman(x, rev) == doctest::Approx(-1.0));
  const std::vector<double> flat{1, 1, 1, 1, 1};
  CHECK_THROWS_AS(pearson(x, flat), Error);
  // a constant whose mean does not round-trip
  std::vector<double> third(78, 1.0 / 3.0), ramp(78);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  CHECK_THROWS_AS(pearson(ramp, third), Error);
  // ties get average ranks: ranks (1.5, 1.5, 3) vs (1, 2, 3)
  const std::vector<double> tx{1, 1, 2}, ty{1, 2, 3};
  CHECK(spearman(tx, ty) == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-14));
}

TEST_CASE("pearson rc vs score: affine scores give 1, constant scores throw") {
  RCReport rc;
  rc.nodes = {1, 2, 3, 4};
  rc.rc = {0.1, 0.4, 0.2, 0.9};
  Matrix probs(5, 2);
  const std::vector<std::size_t> labels{0, 1, 0, 1, 0};
  for (std::size_t k = 0; k < 4; ++k) {
    const NodeId i = rc.nodes[k];
    probs(i, labels[i]) = 0.3 + 0.5 * rc.rc[k];
    probs(i, 1 - labels[i]) = 1.0 - probs(i, labels[i]);
  }
  CHECK(pearson_rc_vs_score(probs, labels, rc).r == doctest::Approx(1.0));
  Matrix flat(5, 2, 0.5);
  CHECK_THROWS_AS(pearson_rc_vs_score(flat, labels, rc), Error);
}
