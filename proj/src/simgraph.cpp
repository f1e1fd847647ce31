#include "fsgauge/simgraph.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fsgauge/errors.hpp"

namespace fsgauge {

std::size_t SimilarityGraph::num_edges() const {
  std::size_t edges = 0;
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < weights.cols(); ++j) {
      if (weights(i, j) != 0.0) ++edges;
    }
  }
  return edges;
}

Matrix cosine_matrix(const Matrix& features, ExecPolicy policy) {
  const Eigen::Index n = features.rows();
  if (n == 0) throw_invalid("cosine_matrix needs at least one row");
  Vector inv_norm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = features.row(i).norm();
    if (norm == 0.0) throw_data("zero-norm row " + std::to_string(i));
    inv_norm(i) = 1.0 / norm;
  }
  const Matrix unit = inv_norm.asDiagonal() * features;
  Matrix out(n, n);
  parallel_for(static_cast<std::size_t>(n), policy, [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = unit.row(i).dot(unit.row(j));
    out(i, i) = 1.0;
  });
  return out;
}

Matrix cosine_matrix(const FeatureSet& fs, const std::vector<std::size_t>& rows, ExecPolicy policy) {
  if (rows.empty()) throw_invalid("cosine_matrix needs at least one row");
  return cosine_matrix(fs.gather(rows), policy);
}

SimilarityGraph knn_sparsify(const Matrix& similarity, int k, ExecPolicy policy) {
  if (k < 1) throw_invalid("knn_sparsify needs k >= 1");
  const Eigen::Index n = similarity.rows();
  if (similarity.cols() != n) throw_invalid("similarity matrix must be square");

  SimilarityGraph g;
  g.construction.k = k;
  if (k >= n - 1) {
    g.weights = similarity;
    g.weights.diagonal().setZero();
    g.weights = g.weights.cwiseMax(g.weights.transpose());
    g.construction.mode = GraphMode::Dense;
    g.construction.symmetrized = true;
    return g;
  }

  Matrix selected = Matrix::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), policy, [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Eigen::Index a, Eigen::Index b) {
      const double wa = similarity(i, a);
      const double wb = similarity(i, b);
      return wa != wb ? wa > wb : a < b;
    });
    for (int t = 0; t < k; ++t) selected(i, order[static_cast<std::size_t>(t)]) = similarity(i, order[static_cast<std::size_t>(t)]);
  });
  g.weights = selected.cwiseMax(selected.transpose());
  g.construction.mode = GraphMode::RowTopK;
  g.construction.symmetrized = true;
  return g;
}

SimilarityGraph heaviest_edges(const Matrix& similarity, std::size_t budget) {
  const Eigen::Index n = similarity.rows();
  if (similarity.cols() != n) throw_invalid("similarity matrix must be square");
  const std::size_t pairs = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  if (budget > pairs) {
    throw_invalid("edge budget " + std::to_string(budget) + " exceeds the " + std::to_string(pairs) +
                  " available pairs");
  }
  struct Pair {
    double w;
    Eigen::Index i, j;
  };
  std::vector<Pair> all;
  all.reserve(pairs);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) all.push_back({similarity(i, j), i, j});
  }
  auto heavier = [](const Pair& a, const Pair& b) {
    if (a.w != b.w) return a.w > b.w;
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  };
  if (budget < all.size()) {
    std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(budget), all.end(), heavier);
  }
  SimilarityGraph g;
  g.weights = Matrix::Zero(n, n);
  for (std::size_t e = 0; e < budget; ++e) {
    g.weights(all[e].i, all[e].j) = all[e].w;
    g.weights(all[e].j, all[e].i) = all[e].w;
  }
  g.construction.mode = budget == pairs ? GraphMode::Dense : GraphMode::GlobalTopEdges;
  g.construction.k = 0;
  g.construction.symmetrized = false;
  return g;
}

SimilarityGraph heavier_edges_graph(const Matrix& similarity, int k) {
  if (k < 0) throw_invalid("heavier_edges_graph needs k >= 0");
  auto g = heaviest_edges(similarity, static_cast<std::size_t>(k) * static_cast<std::size_t>(similarity.rows()));
  g.construction.k = k;
  return g;
}

Matrix normalize_adjacency(const SimilarityGraph& graph) {
  const Vector degree = graph.weights.rowwise().sum();
  Vector inv_sqrt(degree.size());
  for (Eigen::Index i = 0; i < degree.size(); ++i) inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  return inv_sqrt.asDiagonal() * graph.weights * inv_sqrt.asDiagonal();
}

Matrix diffuse(const Matrix& features, const SimilarityGraph& graph, const DiffusionParams& params) {
  if (params.kappa < 0) throw_invalid("kappa must be >= 0");
  if (features.rows() != graph.weights.rows()) throw_invalid("feature rows must match graph vertices");
  Matrix propagator = normalize_adjacency(graph);
  propagator.diagonal().array() += params.alpha;
  Matrix out = features;
  for (int step = 0; step < params.kappa; ++step) out = propagator * out;
  return out;
}

Matrix diffuse_features(const Matrix& features, const DiffusionParams& params, ExecPolicy policy) {
  if (params.k_neighbors < 1) throw_invalid("k_neighbors must be >= 1");
  const auto graph = knn_sparsify(cosine_matrix(features, policy), params.k_neighbors, policy);
  return diffuse(features, graph, params);
}

Matrix laplacian(const SimilarityGraph& graph) {
  Matrix lap = -graph.weights;
  lap.diagonal() = graph.weights.rowwise().sum();
  return lap;
}

std::vector<double> laplacian_eigenvalues(const SimilarityGraph& graph) {
  const Matrix lap = laplacian(graph);
  if (lap.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(lap, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw_numerical("Laplacian eigensolver did not converge");
  const double tolerance = 1e-9 * std::max(1.0, lap.diagonal().maxCoeff());
  std::vector<double> values(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(values.begin(), values.end());
  for (double& v : values) {
    if (v < 0.0 && v >= -tolerance) v = 0.0;
  }
  return values;
}

std::string graph_to_dot(const SimilarityGraph& graph, const std::vector<std::string>& names, int decimals) {
  std::ostringstream out;
  out << "graph similarity {\n";
  const auto n = graph.weights.rows();
  auto name = [&](Eigen::Index i) {
    return names.empty() ? std::to_string(i) : names[static_cast<std::size_t>(i)];
  };
  for (Eigen::Index i = 0; i < n; ++i) out << "  v" << i << " [label=\"" << name(i) << "\"];\n";
  out << std::fixed << std::setprecision(decimals);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (graph.weights(i, j) != 0.0) out << "  v" << i << " -- v" << j << " [weight=" << graph.weights(i, j) << "];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string graph_to_edge_list(const SimilarityGraph& graph) {
  std::ostringstream out;
  out << std::setprecision(9);
  const auto n = graph.weights.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (graph.weights(i, j) != 0.0) out << i << ' ' << j << ' ' << graph.weights(i, j) << '\n';
    }
  }
  return out.str();
}

}  // namespace fsgauge
