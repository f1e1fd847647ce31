#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsgauge/feature_store.hpp"
#include "fsgauge/parallel.hpp"
#include "fsgauge/simgraph.hpp"

namespace fsgauge {

struct CommunityPartition {
  /// Community of every vertex, ids contiguous from 0 in order of first vertex.
  std::vector<int> community_of;
  double modularity = 0.0;
  /// Modularity (on the input graph) after each local-moving pass.
  std::vector<double> pass_modularity;

  int num_communities() const;
};

/// Weighted modularity (resolution 1) of a vertex partition.
double modularity(const Matrix& weights, const std::vector<int>& community_of);

/// Two-phase Louvain: local moves in a seeded random vertex order, then
/// aggregation, until no move improves modularity.
CommunityPartition louvain(const SimilarityGraph& graph, std::uint64_t seed);

/// Binary entropy in bits, 0 log 0 = 0.
double binary_entropy(double p);

/// sum_C |C|/|V| * H(p_A(C)) for labels in {0, 1}.
double conditional_entropy_bound(const CommunityPartition& partition, const std::vector<int>& labels);

struct OverlapParams {
  int k = 20;
  int runs = 5;
  std::uint64_t seed = 0;
};

/// Overlap of two sample sets: heavier-edges cosine graph over their union
/// (budget k|V|, capped at the complete graph), averaged entropy bound over
/// `runs` Louvain runs. Result in bits, within [0, 1].
double overlap_score(const Matrix& class_a, const Matrix& class_b, const OverlapParams& params);
double overlap_score(const FeatureSet& fs, Label class_a, Label class_b, const OverlapParams& params);

/// Seed used for the pair {a, b} inside overlap_matrix; order-free.
std::uint64_t pair_seed(std::uint64_t seed, Label a, Label b);

struct OverlapMatrix {
  std::vector<Label> class_ids;
  std::vector<std::string> class_names;
  Matrix scores;  // symmetric, zero diagonal
};

OverlapMatrix overlap_matrix(const FeatureSet& fs, const std::vector<Label>& class_list, const OverlapParams& params,
                             ExecPolicy policy = ExecPolicy::Serial);

struct ScoredEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double score = 0.0;
};

/// Upper-triangle edges sorted by descending score (ties by (from, to)),
/// truncated to `max_edges` when it is > 0.
std::vector<ScoredEdge> top_edges(const OverlapMatrix& overlap, std::size_t max_edges = 0);

std::string overlap_to_dot(const OverlapMatrix& overlap, std::size_t max_edges = 0);
std::string overlap_to_text(const OverlapMatrix& overlap, std::size_t max_edges = 0);

/// Scores between every base class and every novel class.
struct BipartiteConfusion {
  std::vector<std::string> base_names;
  std::vector<std::string> novel_names;
  Matrix scores;  // base x novel
  /// Retained edges (from = base index, to = novel index), descending.
  std::vector<ScoredEdge> edges;
};

/// `max_edges` = 0 selects the default budget of 2 x number of novel classes.
BipartiteConfusion bipartite_confusion(const FeatureSet& base, const FeatureSet& novel, const OverlapParams& params,
                                       std::size_t max_edges = 0, ExecPolicy policy = ExecPolicy::Serial);

std::string bipartite_to_dot(const BipartiteConfusion& graph);
std::string bipartite_to_text(const BipartiteConfusion& graph);

/// Pearson correlation between the off-diagonal scores of two overlap
/// matrices over the same classes (e.g. two backbones).
double edge_correlation(const OverlapMatrix& a, const OverlapMatrix& b);

struct ScoreErrorStudy {
  std::vector<double> score_sums;
  std::vector<double> errors;
  double pearson = 0.0;
};

/// Samples n_tasks N-way K-shot supervised tasks, sums pairwise overlap
/// scores of the drawn classes and correlates them with the LR test error.
ScoreErrorStudy score_vs_error_correlation(const FeatureSet& fs, const OverlapMatrix& overlap, int n_way,
                                           int n_tasks, std::uint64_t seed, int k_shot = 5, int test_per_class = 50,
                                           ExecPolicy policy = ExecPolicy::Serial);
ScoreErrorStudy score_vs_error_correlation(const FeatureSet& fs, int n_way, int n_tasks, std::uint64_t seed,
                                           const OverlapParams& params = {}, ExecPolicy policy = ExecPolicy::Serial);

}  // namespace fsgauge
