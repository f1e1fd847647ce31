#include "fsgauge/confusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fsgauge/episode.hpp"
#include "fsgauge/errors.hpp"
#include "fsgauge/learners.hpp"
#include "fsgauge/rng.hpp"
#include "fsgauge/stats.hpp"

namespace fsgauge {

namespace {

constexpr double kMinGain = 1e-12;

// Symmetric weighted graph as adjacency lists; self-loops kept separately.
// Degrees include the self-loop weight once, so that sum(degree) = 2m.
struct LevelGraph {
  std::vector<std::vector<std::pair<int, double>>> neighbours;
  std::vector<double> self_loop;
  std::vector<double> degree;
  double total = 0.0;  // 2m

  int size() const { return static_cast<int>(neighbours.size()); }
};

LevelGraph from_weights(const Matrix& w) {
  LevelGraph g;
  const auto n = static_cast<int>(w.rows());
  g.neighbours.resize(static_cast<std::size_t>(n));
  g.self_loop.assign(static_cast<std::size_t>(n), 0.0);
  g.degree.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      if (i == j) {
        g.self_loop[static_cast<std::size_t>(i)] = wij;
      } else {
        g.neighbours[static_cast<std::size_t>(i)].emplace_back(j, wij);
      }
      g.degree[static_cast<std::size_t>(i)] += wij;
    }
    g.total += g.degree[static_cast<std::size_t>(i)];
  }
  return g;
}

// Local moving phase. Returns true when any vertex changed community.
bool local_moves(const LevelGraph& g, std::vector<int>& community, Rng& rng) {
  const int n = g.size();
  std::vector<double> tot(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) tot[static_cast<std::size_t>(community[static_cast<std::size_t>(i)])] += g.degree[static_cast<std::size_t>(i)];

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link(static_cast<std::size_t>(n), 0.0);
  std::vector<int> touched;
  bool any_move = false;
  bool improved = true;
  while (improved) {
    improved = false;
    for (int v : order) {
      const auto vi = static_cast<std::size_t>(v);
      const int own = community[vi];
      touched.clear();
      for (const auto& [u, w] : g.neighbours[vi]) {
        const int cu = community[static_cast<std::size_t>(u)];
        if (link[static_cast<std::size_t>(cu)] == 0.0) touched.push_back(cu);
        link[static_cast<std::size_t>(cu)] += w;
      }
      const double k = g.degree[vi];
      tot[static_cast<std::size_t>(own)] -= k;
      // Gain of joining community c, up to the common factor 1/m.
      auto gain = [&](int c) { return link[static_cast<std::size_t>(c)] - tot[static_cast<std::size_t>(c)] * k / g.total; };
      int best = own;
      double best_gain = gain(own);
      std::sort(touched.begin(), touched.end());
      for (int c : touched) {
        const double candidate = gain(c);
        if (candidate > best_gain + kMinGain) {
          best_gain = candidate;
          best = c;
        }
      }
      tot[static_cast<std::size_t>(best)] += k;
      if (best != own) {
        community[vi] = best;
        improved = true;
        any_move = true;
      }
      for (int c : touched) link[static_cast<std::size_t>(c)] = 0.0;
    }
  }
  return any_move;
}

std::vector<int> renumber(std::vector<int> community) {
  std::unordered_map<int, int> ids;
  for (int& c : community) {
    auto [it, inserted] = ids.emplace(c, static_cast<int>(ids.size()));
    c = it->second;
  }
  return community;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<int>& community, int n_communities) {
  std::vector<std::unordered_map<int, double>> links(static_cast<std::size_t>(n_communities));
  LevelGraph out;
  out.self_loop.assign(static_cast<std::size_t>(n_communities), 0.0);
  out.degree.assign(static_cast<std::size_t>(n_communities), 0.0);
  out.neighbours.resize(static_cast<std::size_t>(n_communities));
  for (int v = 0; v < g.size(); ++v) {
    const int cv = community[static_cast<std::size_t>(v)];
    out.self_loop[static_cast<std::size_t>(cv)] += g.self_loop[static_cast<std::size_t>(v)];
    out.degree[static_cast<std::size_t>(cv)] += g.degree[static_cast<std::size_t>(v)];
    for (const auto& [u, w] : g.neighbours[static_cast<std::size_t>(v)]) {
      const int cu = community[static_cast<std::size_t>(u)];
      if (cu == cv) {
        out.self_loop[static_cast<std::size_t>(cv)] += w;
      } else {
        links[static_cast<std::size_t>(cv)][cu] += w;
      }
    }
  }
  for (int c = 0; c < n_communities; ++c) {
    std::vector<std::pair<int, double>> adj(links[static_cast<std::size_t>(c)].begin(), links[static_cast<std::size_t>(c)].end());
    std::sort(adj.begin(), adj.end());
    out.neighbours[static_cast<std::size_t>(c)] = std::move(adj);
  }
  out.total = g.total;
  return out;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

std::vector<ScoredEdge> sorted_edges(std::vector<ScoredEdge> edges, std::size_t max_edges) {
  std::sort(edges.begin(), edges.end(), [](const ScoredEdge& a, const ScoredEdge& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });
  if (max_edges > 0 && edges.size() > max_edges) edges.resize(max_edges);
  return edges;
}

Matrix rows_of(const FeatureSet& fs, Label c) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fs.num_rows(); ++i) {
    if (fs.labels[i] == c) rows.push_back(i);
  }
  return fs.gather(rows);
}

}  // namespace

int CommunityPartition::num_communities() const {
  int n = 0;
  for (int c : community_of) n = std::max(n, c + 1);
  return n;
}

double modularity(const Matrix& weights, const std::vector<int>& community_of) {
  const auto n = weights.rows();
  if (static_cast<std::size_t>(n) != community_of.size()) throw_invalid("partition size does not match graph");
  const Vector degree = weights.rowwise().sum();
  const double total = degree.sum();
  if (total == 0.0) throw_invalid("modularity of an edgeless graph is undefined");
  double q = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (community_of[static_cast<std::size_t>(i)] == community_of[static_cast<std::size_t>(j)]) {
        q += weights(i, j) - degree(i) * degree(j) / total;
      }
    }
  }
  return q / total;
}

CommunityPartition louvain(const SimilarityGraph& graph, std::uint64_t seed) {
  if (graph.num_edges() == 0) throw_invalid("Louvain needs a graph with at least one edge");
  Rng rng = make_rng(seed);
  const int n = graph.num_vertices();
  CommunityPartition result;
  std::vector<int> vertex_community(static_cast<std::size_t>(n));
  std::iota(vertex_community.begin(), vertex_community.end(), 0);

  LevelGraph level = from_weights(graph.weights);
  for (;;) {
    std::vector<int> community(static_cast<std::size_t>(level.size()));
    std::iota(community.begin(), community.end(), 0);
    const bool moved = local_moves(level, community, rng);
    community = renumber(std::move(community));
    for (int& c : vertex_community) c = community[static_cast<std::size_t>(c)];
    result.pass_modularity.push_back(modularity(graph.weights, vertex_community));
    const int n_communities = *std::max_element(community.begin(), community.end()) + 1;
    if (!moved || n_communities == level.size()) break;
    level = aggregate(level, community, n_communities);
  }
  result.community_of = renumber(std::move(vertex_community));
  result.modularity = result.pass_modularity.back();
  return result;
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw_invalid("binary_entropy needs p in [0, 1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

double conditional_entropy_bound(const CommunityPartition& partition, const std::vector<int>& labels) {
  if (labels.size() != partition.community_of.size()) throw_invalid("labels and partition differ in length");
  if (labels.empty()) throw_invalid("empty partition");
  const int n_comm = partition.num_communities();
  std::vector<double> size(static_cast<std::size_t>(n_comm), 0.0);
  std::vector<double> count_a(static_cast<std::size_t>(n_comm), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw_invalid("conditional entropy bound needs binary labels");
    const auto c = static_cast<std::size_t>(partition.community_of[i]);
    size[c] += 1.0;
    if (labels[i] == 0) count_a[c] += 1.0;
  }
  double bound = 0.0;
  for (std::size_t c = 0; c < size.size(); ++c) {
    if (size[c] > 0.0) bound += size[c] / static_cast<double>(labels.size()) * binary_entropy(count_a[c] / size[c]);
  }
  return bound;
}

double overlap_score(const Matrix& class_a, const Matrix& class_b, const OverlapParams& params) {
  if (class_a.rows() < 2 || class_b.rows() < 2) throw_invalid("overlap score needs >= 2 samples per class");
  if (class_a.cols() != class_b.cols()) throw_invalid("feature dims differ");
  if (params.runs < 1) throw_invalid("overlap score needs runs >= 1");
  Matrix stacked(class_a.rows() + class_b.rows(), class_a.cols());
  stacked << class_a, class_b;
  std::vector<int> labels(static_cast<std::size_t>(stacked.rows()), 1);
  std::fill(labels.begin(), labels.begin() + class_a.rows(), 0);

  const auto n = static_cast<std::size_t>(stacked.rows());
  const std::size_t budget = std::min(static_cast<std::size_t>(std::max(params.k, 0)) * n, n * (n - 1) / 2);
  const SimilarityGraph graph = heaviest_edges(cosine_matrix(stacked), budget);
  double total = 0.0;
  for (int r = 0; r < params.runs; ++r) {
    total += conditional_entropy_bound(louvain(graph, derive_seed(params.seed, static_cast<std::uint64_t>(r))), labels);
  }
  return total / params.runs;
}

double overlap_score(const FeatureSet& fs, Label class_a, Label class_b, const OverlapParams& params) {
  if (class_a >= fs.num_classes() || class_b >= fs.num_classes()) throw_invalid("class id out of range");
  if (class_a == class_b) throw_invalid("overlap score needs two distinct classes");
  // Vertices are ordered by class id so that S(A, B) and S(B, A) build the same graph.
  const Label lo = std::min(class_a, class_b);
  const Label hi = std::max(class_a, class_b);
  return overlap_score(rows_of(fs, lo), rows_of(fs, hi), params);
}

std::uint64_t pair_seed(std::uint64_t seed, Label a, Label b) {
  return derive_seed(seed, std::min(a, b), std::max(a, b));
}

OverlapMatrix overlap_matrix(const FeatureSet& fs, const std::vector<Label>& class_list, const OverlapParams& params,
                             ExecPolicy policy) {
  std::set<Label> unique(class_list.begin(), class_list.end());
  if (unique.size() != class_list.size()) throw_invalid("duplicate class in overlap matrix");
  OverlapMatrix out;
  out.class_ids = class_list;
  for (Label c : class_list) {
    if (c >= fs.num_classes()) throw_invalid("class id out of range");
    out.class_names.push_back(fs.class_names[c]);
  }
  const auto n = class_list.size();
  out.scores = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<double> scores(pairs.size());
  parallel_for(pairs.size(), policy, [&](std::size_t p) {
    const Label a = class_list[pairs[p].first];
    const Label b = class_list[pairs[p].second];
    OverlapParams local = params;
    local.seed = pair_seed(params.seed, a, b);
    scores[p] = overlap_score(fs, a, b, local);
  });
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto i = static_cast<Eigen::Index>(pairs[p].first);
    const auto j = static_cast<Eigen::Index>(pairs[p].second);
    out.scores(i, j) = scores[p];
    out.scores(j, i) = scores[p];
  }
  return out;
}

std::vector<ScoredEdge> top_edges(const OverlapMatrix& overlap, std::size_t max_edges) {
  std::vector<ScoredEdge> edges;
  const auto n = static_cast<std::size_t>(overlap.scores.rows());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      edges.push_back({i, j, overlap.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  return sorted_edges(std::move(edges), max_edges);
}

std::string overlap_to_dot(const OverlapMatrix& overlap, std::size_t max_edges) {
  std::ostringstream out;
  out << "graph overlap {\n";
  for (std::size_t i = 0; i < overlap.class_names.size(); ++i) {
    out << "  c" << i << " [label=" << quoted(overlap.class_names[i]) << "];\n";
  }
  for (const auto& e : top_edges(overlap, max_edges)) {
    out << "  c" << e.from << " -- c" << e.to << " [score=" << fmt6(e.score) << "];\n";
  }
  out << "}\n";
  return out.str();
}

std::string overlap_to_text(const OverlapMatrix& overlap, std::size_t max_edges) {
  std::ostringstream out;
  out << "class_a\tclass_b\tscore\n";
  for (const auto& e : top_edges(overlap, max_edges)) {
    out << overlap.class_names[e.from] << '\t' << overlap.class_names[e.to] << '\t' << fmt6(e.score) << '\n';
  }
  return out.str();
}

BipartiteConfusion bipartite_confusion(const FeatureSet& base, const FeatureSet& novel, const OverlapParams& params,
                                       std::size_t max_edges, ExecPolicy policy) {
  if (base.dim() != novel.dim()) throw_invalid("base and novel feature dims differ");
  const std::set<std::string> base_names(base.class_names.begin(), base.class_names.end());
  for (const auto& name : novel.class_names) {
    if (base_names.contains(name)) throw_invalid("class '" + name + "' appears in both base and novel sets");
  }
  BipartiteConfusion out;
  out.base_names = base.class_names;
  out.novel_names = novel.class_names;
  const auto nb = base.num_classes();
  const auto nn = novel.num_classes();
  std::vector<Matrix> base_rows(nb);
  std::vector<Matrix> novel_rows(nn);
  for (std::size_t b = 0; b < nb; ++b) base_rows[b] = rows_of(base, static_cast<Label>(b));
  for (std::size_t v = 0; v < nn; ++v) novel_rows[v] = rows_of(novel, static_cast<Label>(v));

  out.scores = Matrix::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nn));
  std::vector<double> flat(nb * nn);
  parallel_for(flat.size(), policy, [&](std::size_t p) {
    const std::size_t b = p / nn;
    const std::size_t v = p % nn;
    OverlapParams local = params;
    local.seed = derive_seed(params.seed, b, v);
    flat[p] = overlap_score(base_rows[b], novel_rows[v], local);
  });
  std::vector<ScoredEdge> edges;
  for (std::size_t p = 0; p < flat.size(); ++p) {
    out.scores(static_cast<Eigen::Index>(p / nn), static_cast<Eigen::Index>(p % nn)) = flat[p];
    edges.push_back({p / nn, p % nn, flat[p]});
  }
  out.edges = sorted_edges(std::move(edges), max_edges > 0 ? max_edges : 2 * nn);
  return out;
}

std::string bipartite_to_dot(const BipartiteConfusion& g) {
  std::ostringstream out;
  out << "graph confusion {\n";
  for (std::size_t b = 0; b < g.base_names.size(); ++b) out << "  b" << b << " [label=" << quoted(g.base_names[b]) << ", group=base];\n";
  for (std::size_t v = 0; v < g.novel_names.size(); ++v) out << "  n" << v << " [label=" << quoted(g.novel_names[v]) << ", group=novel];\n";
  for (const auto& e : g.edges) out << "  b" << e.from << " -- n" << e.to << " [score=" << fmt6(e.score) << "];\n";
  out << "}\n";
  return out.str();
}

std::string bipartite_to_text(const BipartiteConfusion& g) {
  std::ostringstream out;
  out << "base\tnovel\tscore\n";
  for (const auto& e : g.edges) out << g.base_names[e.from] << '\t' << g.novel_names[e.to] << '\t' << fmt6(e.score) << '\n';
  return out.str();
}

double edge_correlation(const OverlapMatrix& a, const OverlapMatrix& b) {
  if (a.scores.rows() != b.scores.rows() || a.class_ids != b.class_ids) {
    throw_invalid("overlap matrices cover different classes");
  }
  std::vector<double> x;
  std::vector<double> y;
  for (Eigen::Index i = 0; i < a.scores.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.scores.cols(); ++j) {
      x.push_back(a.scores(i, j));
      y.push_back(b.scores(i, j));
    }
  }
  return pearson(x, y);
}

ScoreErrorStudy score_vs_error_correlation(const FeatureSet& fs, const OverlapMatrix& overlap, int n_way, int n_tasks,
                                           std::uint64_t seed, int k_shot, int test_per_class, ExecPolicy policy) {
  if (n_tasks < 2) throw_invalid("correlation needs at least 2 tasks");
  std::vector<long> position(fs.num_classes(), -1);
  for (std::size_t i = 0; i < overlap.class_ids.size(); ++i) position[overlap.class_ids[i]] = static_cast<long>(i);
  for (long p : position) {
    if (p < 0) throw_invalid("overlap matrix must cover every class of the feature set");
  }
  ScoreErrorStudy study;
  study.score_sums.resize(static_cast<std::size_t>(n_tasks));
  study.errors.resize(static_cast<std::size_t>(n_tasks));
  parallel_for(static_cast<std::size_t>(n_tasks), policy, [&](std::size_t t) {
    EpisodeSpec spec;
    spec.n_way = n_way;
    spec.k_shot = k_shot;
    spec.q_query = 0;
    spec.test_per_class = test_per_class;
    spec.seed = derive_seed(seed, t);
    const Episode ep = sample_episode(fs, spec);
    double sum = 0.0;
    for (std::size_t i = 0; i < ep.class_ids.size(); ++i)
      for (std::size_t j = i + 1; j < ep.class_ids.size(); ++j)
        sum += overlap.scores(position[ep.class_ids[i]], position[ep.class_ids[j]]);
    const auto model = train_logreg(fs.gather(ep.support_rows()), ep.support_labels(), n_way);
    study.score_sums[t] = sum;
    study.errors[t] = 1.0 - accuracy(model, fs.gather(ep.test_rows()), ep.test_labels());
  });
  study.pearson = pearson(study.score_sums, study.errors);
  return study;
}

ScoreErrorStudy score_vs_error_correlation(const FeatureSet& fs, int n_way, int n_tasks, std::uint64_t seed,
                                           const OverlapParams& params, ExecPolicy policy) {
  if (n_tasks < 2) throw_invalid("correlation needs at least 2 tasks");
  std::vector<Label> all(fs.num_classes());
  std::iota(all.begin(), all.end(), 0);
  OverlapParams p = params;
  p.seed = derive_seed(seed, 0x6f766c70ULL);
  const auto overlap = overlap_matrix(fs, all, p, policy);
  return score_vs_error_correlation(fs, overlap, n_way, n_tasks, derive_seed(seed, 1), 5, 50, policy);
}

}  // namespace fsgauge
