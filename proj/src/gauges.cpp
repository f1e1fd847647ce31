#include "fsgauge/gauges.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fsgauge/errors.hpp"

namespace fsgauge {

namespace {

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

int count_groups(const std::vector<int>& labels) {
  int n = 0;
  for (int l : labels) {
    if (l < 0) throw_invalid("negative group label");
    n = std::max(n, l + 1);
  }
  return n;
}

}  // namespace

std::string to_string(Setting setting) {
  switch (setting) {
    case Setting::Supervised:
      return "supervised";
    case Setting::SemiSupervised:
      return "semi-supervised";
    case Setting::Unsupervised:
      return "unsupervised";
  }
  return "unknown";
}

Setting setting_from_string(const std::string& name) {
  if (name == "supervised") return Setting::Supervised;
  if (name == "semi-supervised" || name == "semi") return Setting::SemiSupervised;
  if (name == "unsupervised") return Setting::Unsupervised;
  throw_invalid("unknown setting '" + name + "'");
}

std::string gauge_csv_header() {
  return "episode_id,setting,N,K,Q,lr_loss,similarity,db_score,nth_egv,lr_conf_log,lr_conf_mmp,performance";
}

std::string gauge_csv_row(const GaugeReport& r) {
  char perf[32];
  std::snprintf(perf, sizeof perf, "%.9g", r.realized_performance);
  return std::to_string(r.episode_id) + "," + to_string(r.setting) + "," + std::to_string(r.n_way) + "," +
         std::to_string(r.k_shot) + "," + std::to_string(r.q_query) + "," + format_optional(r.lr_training_loss) +
         "," + format_optional(r.similarity) + "," + format_optional(r.db_score) + "," +
         format_optional(r.nth_eigenvalue) + "," + format_optional(r.lr_confidence_log) + "," +
         format_optional(r.lr_confidence_mean_max_prob) + "," + perf;
}

double lr_training_loss(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw_invalid("probabilities and labels differ in length");
  if (labels.empty()) throw_invalid("loss of an empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= probs.cols()) throw_invalid("label out of range");
    const double p = probs(static_cast<Eigen::Index>(i), labels[i]);
    if (p <= 0.0) throw_numerical("true-class probability is 0 at row " + std::to_string(i) + "; clamp upstream");
    total -= std::log(p);
  }
  return total / static_cast<double>(labels.size());
}

double similarity_metric(const Matrix& features, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) throw_invalid("features and labels differ in length");
  const int n = count_groups(labels);
  if (n < 2) throw_invalid("similarity metric needs at least 2 classes");
  const Matrix cos = cosine_matrix(features);
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
  for (const auto& m : members) {
    if (m.empty()) throw_invalid("every class needs at least one support row");
  }

  auto block_mean = [&](const std::vector<Eigen::Index>& a, const std::vector<Eigen::Index>& b) {
    double s = 0.0;
    for (auto i : a)
      for (auto j : b) s += cos(i, j);
    return s / static_cast<double>(a.size() * b.size());
  };

  double total = 0.0;
  for (int c = 0; c < n; ++c) {
    const auto& mc = members[static_cast<std::size_t>(c)];
    double intra = 1.0;
    if (mc.size() > 1) {
      double s = 0.0;
      for (std::size_t x = 0; x < mc.size(); ++x)
        for (std::size_t y = x + 1; y < mc.size(); ++y) s += cos(mc[x], mc[y]);
      intra = s / (static_cast<double>(mc.size()) * static_cast<double>(mc.size() - 1) / 2.0);
    }
    double worst_inter = -std::numeric_limits<double>::infinity();
    for (int o = 0; o < n; ++o) {
      if (o != c) worst_inter = std::max(worst_inter, block_mean(mc, members[static_cast<std::size_t>(o)]));
    }
    total += intra - worst_inter;
  }
  return total / n;
}

double similarity_metric(const FeatureSet& fs, const std::vector<std::vector<std::size_t>>& support) {
  std::vector<std::size_t> rows;
  std::vector<int> labels;
  for (std::size_t c = 0; c < support.size(); ++c) {
    rows.insert(rows.end(), support[c].begin(), support[c].end());
    labels.insert(labels.end(), support[c].size(), static_cast<int>(c));
  }
  return similarity_metric(fs.gather(rows), labels);
}

double db_score(const Matrix& features, const std::vector<int>& assignments) {
  if (static_cast<std::size_t>(features.rows()) != assignments.size()) {
    throw_invalid("features and assignments differ in length");
  }
  const int n = count_groups(assignments);
  if (n < 2) throw_invalid("DB score needs at least 2 groups");
  Matrix centroids = Matrix::Zero(n, features.cols());
  std::vector<double> sizes(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    centroids.row(assignments[i]) += features.row(static_cast<Eigen::Index>(i));
    sizes[static_cast<std::size_t>(assignments[i])] += 1.0;
  }
  for (int c = 0; c < n; ++c) {
    if (sizes[static_cast<std::size_t>(c)] == 0.0) throw_invalid("DB score needs non-empty groups");
    centroids.row(c) /= sizes[static_cast<std::size_t>(c)];
  }
  std::vector<double> scatter(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    scatter[static_cast<std::size_t>(assignments[i])] +=
        (features.row(static_cast<Eigen::Index>(i)) - centroids.row(assignments[i])).norm();
  }
  for (int c = 0; c < n; ++c) scatter[static_cast<std::size_t>(c)] /= sizes[static_cast<std::size_t>(c)];

  double total = 0.0;
  for (int c = 0; c < n; ++c) {
    double worst = 0.0;
    for (int o = 0; o < n; ++o) {
      if (o == c) continue;
      const double separation = (centroids.row(c) - centroids.row(o)).norm();
      if (separation == 0.0) throw_numerical("degenerate centroids");
      worst = std::max(worst, (scatter[static_cast<std::size_t>(c)] + scatter[static_cast<std::size_t>(o)]) / separation);
    }
    total += worst;
  }
  return total / n;
}

double nth_eigenvalue_gauge(const Matrix& features, int n, int k_neighbors) {
  if (n < 1) throw_invalid("eigenvalue index must be >= 1");
  if (features.rows() < n) throw_invalid("need at least N vertices for the N-th eigenvalue");
  const auto graph = knn_sparsify(cosine_matrix(features), k_neighbors);
  return laplacian_eigenvalues(graph)[static_cast<std::size_t>(n - 1)];
}

double nth_eigenvalue_gauge(const FeatureSet& fs, const std::vector<std::size_t>& rows, int n, int k_neighbors) {
  return nth_eigenvalue_gauge(fs.gather(rows), n, k_neighbors);
}

std::vector<double> max_probabilities(const Matrix& probs) {
  std::vector<double> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) out[static_cast<std::size_t>(i)] = probs.row(i).maxCoeff();
  return out;
}

Confidence lr_confidence(const Matrix& query_probs) {
  if (query_probs.rows() < 1) throw_invalid("LR confidence needs at least one query");
  Confidence c;
  for (double p : max_probabilities(query_probs)) {
    c.log_form -= std::log(p);
    c.mean_max_prob += p;
  }
  c.log_form /= static_cast<double>(query_probs.rows());
  c.mean_max_prob /= static_cast<double>(query_probs.rows());
  return c;
}

}  // namespace fsgauge
