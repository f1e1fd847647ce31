#include <cmath>
#include <random>

#include "doctest.h"
#include "fsgauge/confusion.hpp"
#include "fsgauge/errors.hpp"
#include "fsgauge/rng.hpp"
#include "oracles.hpp"

using namespace fsgauge;

namespace {

SimilarityGraph graph_of(const Matrix& w) {
  SimilarityGraph g;
  g.weights = w;
  return g;
}

Matrix two_cliques(double bridge) {
  Matrix w = Matrix::Zero(8, 8);
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) w(4 * b + i, 4 * b + j) = 1.0;
  w(3, 4) = w(4, 3) = bridge;
  return w;
}

CommunityPartition partition_of(std::vector<int> c) {
  CommunityPartition p;
  p.community_of = std::move(c);
  return p;
}

// Features of a class: one-hot-ish rows around coordinate `axis`.
Matrix blob(int rows, int dim, int axis, double spread, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> n(0.0, spread);
  Matrix m = Matrix::Zero(rows, dim);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = std::abs(n(rng));
    m(i, axis) += 1.0;
  }
  return m;
}

}  // namespace

TEST_CASE("Louvain on two cliques" * doctest::test_suite("oracle")) {
  const Matrix w = two_cliques(0.1);
  const auto p = louvain(graph_of(w), 1);
  CHECK(p.num_communities() == 2);
  for (int i = 1; i < 4; ++i) CHECK(p.community_of[i] == p.community_of[0]);
  for (int i = 5; i < 8; ++i) CHECK(p.community_of[i] == p.community_of[4]);
  std::vector<int> best;
  const double q = oracle::best_modularity(w, &best);
  CHECK(std::abs(p.modularity - q) < 1e-12);
}

TEST_CASE("Louvain single edge keeps both vertices together" * doctest::test_suite("analytic")) {
  Matrix w(2, 2);
  w << 0, 1, 1, 0;
  const auto p = louvain(graph_of(w), 3);
  CHECK(p.num_communities() == 1);
  CHECK(oracle::brute_modularity(w, {0, 1}) < 0.0);
  CHECK_THROWS_AS(louvain(graph_of(Matrix::Zero(3, 3)), 1), InvalidArgument);
}

TEST_CASE("Louvain reaches the exhaustive optimum on small graphs" * doctest::test_suite("oracle")) {
  Rng rng = make_rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Matrix> fixtures{two_cliques(0.1), two_cliques(1.0), Matrix::Ones(6, 6) - Matrix::Identity(6, 6)};
  // Planted partitions with light noise.
  for (int t = 0; t < 12; ++t) {
    const int n = 5 + t % 4;
    Matrix w = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const bool same = (i % 2) == (j % 2);
        w(i, j) = w(j, i) = same ? 0.8 + 0.2 * u(rng) : 0.05 * u(rng);
      }
    fixtures.push_back(w);
  }
  for (const auto& w : fixtures) {
    const double best = oracle::best_modularity(w);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto p = louvain(graph_of(w), seed);
      CHECK(std::abs(p.modularity - oracle::brute_modularity(w, p.community_of)) < 1e-12);
      CHECK(p.modularity <= best + 1e-12);
      CHECK(std::abs(p.modularity - best) < 1e-9);
      for (std::size_t i = 1; i < p.pass_modularity.size(); ++i)
        CHECK(p.pass_modularity[i] >= p.pass_modularity[i - 1] - 1e-12);
    }
  }
}

TEST_CASE("modularity matches the brute-force formula" * doctest::test_suite("oracle")) {
  const Matrix w = two_cliques(0.3);
  const std::vector<int> part{0, 0, 1, 1, 2, 2, 2, 0};
  CHECK(std::abs(modularity(w, part) - oracle::brute_modularity(w, part)) < 1e-12);
}

TEST_CASE("binary entropy" * doctest::test_suite("analytic")) {
  CHECK(binary_entropy(0.5) == 1.0);
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(std::abs(binary_entropy(0.25) - 0.811278) < 1e-6);
}

TEST_CASE("conditional entropy bound" * doctest::test_suite("analytic")) {
  CHECK(conditional_entropy_bound(partition_of({0, 0, 1, 1}), {0, 0, 1, 1}) == 0.0);
  CHECK(conditional_entropy_bound(partition_of({0, 0, 0, 0}), {0, 1, 0, 1}) == 1.0);
  const double b = conditional_entropy_bound(partition_of({0, 0, 0, 0, 1, 1, 1, 1}), {0, 1, 1, 1, 0, 0, 0, 1});
  CHECK(std::abs(b - 0.811278) < 1e-6);
}

TEST_CASE("overlap score" * doctest::test_suite("properties")) {
  OverlapParams params;
  params.seed = 5;
  SUBCASE("duplicated class") {
    const Matrix a = blob(30, 10, 0, 0.3, 1);
    CHECK(overlap_score(a, a, params) > 0.8);
  }
  SUBCASE("orthogonal tight classes") {
    const Matrix a = blob(30, 10, 0, 0.01, 1);
    const Matrix b = blob(30, 10, 5, 0.01, 2);
    CHECK(overlap_score(a, b, params) < 0.1);
  }
  SUBCASE("symmetric in its class arguments") {
    const auto fs = synth_generate(4, 25, 16, 0.5, 0.5, 8);
    CHECK(overlap_score(fs, 1, 3, params) == overlap_score(fs, 3, 1, params));
  }
}

TEST_CASE("overlap matrix" * doctest::test_suite("properties")) {
  FeatureSet fs;
  const Matrix a = blob(20, 8, 0, 0.2, 1), b = blob(20, 8, 0, 0.2, 2), c = blob(20, 8, 6, 0.05, 3);
  fs.features.resize(60, 8);
  fs.features << a.cast<float>(), b.cast<float>(), c.cast<float>();
  for (Label l = 0; l < 3; ++l)
    for (int i = 0; i < 20; ++i) fs.labels.push_back(l);
  fs.class_names = {"a", "b", "c"};
  OverlapParams params;
  params.seed = 4;
  const auto m = overlap_matrix(fs, {0, 1, 2}, params);
  CHECK(m.scores(0, 1) > m.scores(0, 2));
  CHECK(m.scores(0, 1) > m.scores(1, 2));
  CHECK(m.scores(0, 1) == m.scores(1, 0));
  CHECK(m.scores(0, 0) == 0.0);
  const auto edges = top_edges(m);
  CHECK(edges.front().from == 0);
  CHECK(edges.front().to == 1);
  for (std::size_t i = 1; i < edges.size(); ++i) CHECK(edges[i].score <= edges[i - 1].score);

  const auto single = overlap_matrix(fs, {0, 2}, params);
  CHECK(single.scores(0, 1) == overlap_score(fs, 0, 2, {params.k, params.runs, pair_seed(params.seed, 0, 2)}));

  const auto perm = overlap_matrix(fs, {2, 0, 1}, params);
  const int map[3] = {2, 0, 1};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(perm.scores(i, j) == m.scores(map[i], map[j]));

  CHECK(overlap_matrix(fs, {0, 1, 2}, params, ExecPolicy::Parallel).scores == m.scores);
  CHECK(overlap_to_text(m).find("a\tb\t") != std::string::npos);
}

TEST_CASE("bipartite base/novel confusion" * doctest::test_suite("properties")) {
  FeatureSet base, novel;
  const Matrix b0 = blob(20, 9, 0, 0.1, 1), b1 = blob(20, 9, 3, 0.1, 2), b2 = blob(20, 9, 6, 0.1, 3);
  base.features.resize(60, 9);
  base.features << b0.cast<float>(), b1.cast<float>(), b2.cast<float>();
  for (Label l = 0; l < 3; ++l)
    for (int i = 0; i < 20; ++i) base.labels.push_back(l);
  base.class_names = {"b0", "b1", "b2"};
  novel.features.resize(40, 9);
  novel.features << b1.cast<float>(), blob(20, 9, 8, 0.1, 4).cast<float>();
  for (Label l = 0; l < 2; ++l)
    for (int i = 0; i < 20; ++i) novel.labels.push_back(l);
  novel.class_names = {"n_dup", "n_far"};
  OverlapParams params;
  params.seed = 6;
  const auto g = bipartite_confusion(base, novel, params);
  CHECK(g.edges.size() == 4);
  CHECK(g.edges.front().from == 1);
  CHECK(g.edges.front().to == 0);
  for (std::size_t i = 1; i < g.edges.size(); ++i) CHECK(g.edges[i].score <= g.edges[i - 1].score);
  CHECK(g.scores.maxCoeff() == g.scores(1, 0));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(g.scores(i, 1) < 0.1);
}

TEST_CASE("score versus error study" * doctest::test_suite("properties")) {
  const auto flat = synth_generate(6, 60, 16, 1.0, 0.3, 3);
  OverlapMatrix constant;
  constant.class_ids = {0, 1, 2, 3, 4, 5};
  constant.scores = Matrix::Constant(6, 6, 0.4);
  constant.scores.diagonal().setZero();
  CHECK_THROWS_AS(score_vs_error_correlation(flat, constant, 3, 20, 1), NumericalError);
  CHECK_THROWS_AS(score_vs_error_correlation(flat, constant, 3, 1, 1), InvalidArgument);

  SynthParams p;
  p.num_classes = 10;
  p.per_class = 60;
  p.dim = 32;
  p.separation = 0.2;
  p.separation_max = 2.0;
  p.spread = 0.8;
  p.seed = 4;
  const auto graded = synth_generate(p);
  OverlapParams params;
  params.seed = 2;
  const auto study = score_vs_error_correlation(graded, 5, 200, 9, params, ExecPolicy::Parallel);
  CHECK(study.pearson >= 0.5);
}
