#pragma once

#include <string>
#include <vector>

#include "fsgauge/feature_store.hpp"
#include "fsgauge/parallel.hpp"

namespace fsgauge {

enum class GraphMode { RowTopK, GlobalTopEdges, Dense };

struct GraphConstruction {
  GraphMode mode = GraphMode::Dense;
  /// Neighbours per row (RowTopK) or edges per vertex (GlobalTopEdges).
  int k = 0;
  /// True when the row-wise selection was symmetrized by elementwise max.
  bool symmetrized = false;
};

/// Weighted undirected graph: symmetric, nonnegative, zero diagonal.
struct SimilarityGraph {
  Matrix weights;
  GraphConstruction construction;

  int num_vertices() const { return static_cast<int>(weights.rows()); }
  std::size_t num_edges() const;
};

struct DiffusionParams {
  double alpha = 0.75;
  int kappa = 1;
  int k_neighbors = 15;
};

/// Cosine similarity of every pair of rows. Rows need not be unit norm.
Matrix cosine_matrix(const Matrix& features, ExecPolicy policy = ExecPolicy::Serial);
Matrix cosine_matrix(const FeatureSet& fs, const std::vector<std::size_t>& rows,
                     ExecPolicy policy = ExecPolicy::Serial);

/// Zeroes the diagonal, keeps the k largest off-diagonal entries of every
/// row (ties go to the lower column index), then symmetrizes by max.
SimilarityGraph knn_sparsify(const Matrix& similarity, int k, ExecPolicy policy = ExecPolicy::Serial);

/// Keeps the `budget` largest upper-triangle entries (ties: lexicographic (i, j)).
SimilarityGraph heaviest_edges(const Matrix& similarity, std::size_t budget);

/// heaviest_edges with a budget of k * |V|.
SimilarityGraph heavier_edges_graph(const Matrix& similarity, int k);

/// D^{-1/2} W D^{-1/2}, with D^{-1/2} = 0 on isolated vertices.
Matrix normalize_adjacency(const SimilarityGraph& graph);

/// (alpha I + E)^kappa F, as kappa successive products.
Matrix diffuse(const Matrix& features, const SimilarityGraph& graph, const DiffusionParams& params);

/// Builds the k-NN cosine graph over the rows of `features` and diffuses them.
Matrix diffuse_features(const Matrix& features, const DiffusionParams& params,
                        ExecPolicy policy = ExecPolicy::Serial);

/// L = D - W.
Matrix laplacian(const SimilarityGraph& graph);

/// Eigenvalues of the graph Laplacian in ascending order; values within
/// 1e-9 below zero are clamped to 0.
std::vector<double> laplacian_eigenvalues(const SimilarityGraph& graph);

/// Graphviz export; `names` may be empty (vertex ids are used instead).
std::string graph_to_dot(const SimilarityGraph& graph, const std::vector<std::string>& names = {},
                         int decimals = 9);

/// One "i j weight" line per edge (i < j), weights with 9 significant digits.
std::string graph_to_edge_list(const SimilarityGraph& graph);

}  // namespace fsgauge
