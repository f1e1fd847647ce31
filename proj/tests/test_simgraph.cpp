#include <random>

#include "doctest.h"
#include "fsgauge/errors.hpp"
#include "fsgauge/rng.hpp"
#include "fsgauge/simgraph.hpp"
#include "oracles.hpp"

using namespace fsgauge;

namespace {

SimilarityGraph from_weights(const Matrix& w) {
  SimilarityGraph g;
  g.weights = w;
  return g;
}

Matrix random_similarity(int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) m(i, j) = m(j, i) = u(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("cosine similarity closed forms" * doctest::test_suite("analytic")) {
  Matrix x(4, 2);
  x << 1, 0, 1, 0, 0, 1, 1, 1;
  const Matrix c = cosine_matrix(x);
  CHECK(c(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(c(0, 2)) < 1e-12);
  CHECK(std::abs(c(3, 0) - 0.70710678118654752) < 1e-9);
}

TEST_CASE("k-NN sparsification" * doctest::test_suite("analytic")) {
  Matrix m(3, 3);
  m << 1, .9, .1, .9, 1, .2, .1, .2, 1;
  SUBCASE("row top-1 then symmetric max") {
    const auto g = knn_sparsify(m, 1);
    CHECK(g.weights(0, 1) == .9);
    CHECK(g.weights(1, 2) == .2);
    CHECK(g.weights(2, 1) == .2);
    CHECK(g.weights(0, 2) == 0.0);
    CHECK(g.num_edges() == 2);
  }
  SUBCASE("k = n-1 keeps every off-diagonal entry") {
    const auto g = knn_sparsify(m, 2);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(g.weights(i, j) == (i == j ? 0.0 : m(i, j)));
  }
  SUBCASE("ties go to the lower index") {
    Matrix t(3, 3);
    t << 1, .5, .5, .5, 1, .1, .5, .1, 1;
    const auto g = knn_sparsify(t, 1);
    CHECK(g.weights(0, 1) == .5);
    CHECK(g.weights(0, 2) == .5);  // row 2 picks vertex 0
    CHECK(g.weights(1, 2) == 0.0);
    Matrix u(4, 4);
    u << 1, .3, .3, .3, .3, 1, 0, 0, .3, 0, 1, 0, .3, 0, 0, 1;
    const auto h = knn_sparsify(u, 1);
    CHECK(h.weights(0, 1) == .3);
    CHECK(h.weights(0, 2) == .3);  // picked by row 2, not by row 0
  }
}

TEST_CASE("heavier edges graph" * doctest::test_suite("analytic")) {
  SUBCASE("budget covering all pairs gives the complete graph") {
    Matrix s(3, 3);
    s << 1, .4, .3, .4, 1, .2, .3, .2, 1;
    const auto g = heavier_edges_graph(s, 1);
    CHECK(g.num_edges() == 3);
    CHECK(g.construction.mode == GraphMode::Dense);
    CHECK_THROWS_AS(heavier_edges_graph(s, 2), InvalidArgument);
  }
  SUBCASE("budget 1 keeps the single heaviest edge") {
    Matrix s(3, 3);
    s << 1, .4, .9, .4, 1, .2, .9, .2, 1;
    const auto g = heaviest_edges(s, 1);
    CHECK(g.num_edges() == 1);
    CHECK(g.weights(0, 2) == .9);
  }
  SUBCASE("global selection ignores row distribution") {
    Matrix s(4, 4);
    s << 1, .9, .8, .1, .9, 1, .7, .2, .8, .7, 1, .3, .1, .2, .3, 1;
    const auto g = heaviest_edges(s, 2);
    CHECK(g.weights(0, 1) == .9);
    CHECK(g.weights(0, 2) == .8);
    CHECK(g.num_edges() == 2);
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix r = random_similarity(4, 100 + trial);
      std::vector<std::pair<double, std::pair<int, int>>> pairs;
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) pairs.push_back({r(i, j), {i, j}});
      std::sort(pairs.rbegin(), pairs.rend());
      const auto h = heaviest_edges(r, 2);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p].second;
        CHECK((h.weights(i, j) > 0.0) == (p < 2));
      }
    }
  }
}

TEST_CASE("normalized adjacency" * doctest::test_suite("analytic")) {
  Matrix w(2, 2);
  w << 0, .5, .5, 0;
  const Matrix e = normalize_adjacency(from_weights(w));
  CHECK(e(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e(0, 0) == 0.0);
  Matrix iso = Matrix::Zero(3, 3);
  iso(0, 1) = iso(1, 0) = 1.0;
  const Matrix f = normalize_adjacency(from_weights(iso));
  CHECK(f.row(2).isZero());
  CHECK(f.col(2).isZero());
  CHECK(normalize_adjacency(from_weights(Matrix::Zero(3, 3))).isZero());
}

TEST_CASE("diffusion" * doctest::test_suite("analytic")) {
  const Matrix x = random_similarity(5, 3).leftCols(3);
  const auto g = knn_sparsify(cosine_matrix(x), 2);
  DiffusionParams p;
  p.kappa = 0;
  CHECK(diffuse(x, g, p) == x);
  p.kappa = 1;
  const Matrix edgeless = diffuse(x, from_weights(Matrix::Zero(5, 5)), p);
  CHECK((edgeless - 0.75 * x).norm() < 1e-15);
  p.kappa = 2;
  const Matrix twice = diffuse(x, g, p);
  p.kappa = 1;
  CHECK((twice - diffuse(diffuse(x, g, p), g, p)).norm() < 1e-12);
}

TEST_CASE("Laplacian spectra" * doctest::test_suite("analytic")) {
  Matrix w(2, 2);
  w << 0, 1, 1, 0;
  auto ev = laplacian_eigenvalues(from_weights(w));
  CHECK(std::abs(ev[0]) < 1e-12);
  CHECK(std::abs(ev[1] - 2.0) < 1e-12);

  Matrix path = Matrix::Zero(3, 3);
  path(0, 1) = path(1, 0) = path(1, 2) = path(2, 1) = 1.0;
  ev = laplacian_eigenvalues(from_weights(path));
  CHECK(std::abs(ev[0]) < 1e-9);
  CHECK(std::abs(ev[1] - 1.0) < 1e-9);
  CHECK(std::abs(ev[2] - 3.0) < 1e-9);
  const auto poly = oracle::char_poly(laplacian(from_weights(path)));
  for (double root : {0.0, 1.0, 3.0}) CHECK(std::abs(oracle::poly_eval(poly, root)) < 1e-9);

  // Three components: a triangle, an edge, an isolated vertex.
  Matrix comp = Matrix::Zero(6, 6);
  comp(0, 1) = comp(1, 0) = .5;
  comp(1, 2) = comp(2, 1) = .3;
  comp(0, 2) = comp(2, 0) = .9;
  comp(3, 4) = comp(4, 3) = .7;
  ev = laplacian_eigenvalues(from_weights(comp));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(ev[i]) < 1e-8);
  CHECK(ev[3] > 1e-3);
}

TEST_CASE("eigenvalues agree with the Jacobi oracle on small graphs" * doctest::test_suite("oracle")) {
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 25; ++trial) {
      Matrix m = random_similarity(n, static_cast<std::uint64_t>(n * 100 + trial));
      const auto g = knn_sparsify(m, 1 + trial % (n - 1));
      const auto ev = laplacian_eigenvalues(g);
      const auto ref = oracle::jacobi_eigenvalues(laplacian(g));
      for (int i = 0; i < n; ++i) CHECK(std::abs(ev[i] - ref[i]) < 1e-8);
    }
  }
}

TEST_CASE("graph exports" * doctest::test_suite("analytic")) {
  Matrix w(3, 3);
  w << 0, .123456789012, 0, .123456789012, 0, 1, 0, 1, 0;
  const auto g = from_weights(w);
  CHECK(graph_to_edge_list(g) == "0 1 0.123456789\n1 2 1\n");
  const auto dot = graph_to_dot(g, {"a", "b", "c"});
  CHECK(dot.find("graph") != std::string::npos);
  CHECK(dot.find("v0 -- v1") != std::string::npos);
  CHECK(dot.find("label=\"a\"") != std::string::npos);
}

TEST_CASE("serial and parallel kernels agree" * doctest::test_suite("properties")) {
  const Matrix x = random_similarity(40, 77).leftCols(12);
  CHECK(cosine_matrix(x, ExecPolicy::Serial) == cosine_matrix(x, ExecPolicy::Parallel));
  const Matrix c = cosine_matrix(x);
  CHECK(knn_sparsify(c, 5, ExecPolicy::Serial).weights == knn_sparsify(c, 5, ExecPolicy::Parallel).weights);
  DiffusionParams p;
  CHECK(diffuse_features(x, p, ExecPolicy::Serial) == diffuse_features(x, p, ExecPolicy::Parallel));
}
