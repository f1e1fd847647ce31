#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsgauge/feature_store.hpp"
#include "fsgauge/simgraph.hpp"

namespace fsgauge {

enum class Setting { Supervised, SemiSupervised, Unsupervised };

std::string to_string(Setting setting);
Setting setting_from_string(const std::string& name);

/// Per-episode gauge values and realized performance. Gauges that are not
/// defined for the setting (or for K = 1 in the DB case) stay empty.
struct GaugeReport {
  std::uint64_t episode_id = 0;
  Setting setting = Setting::Supervised;
  int n_way = 0;
  int k_shot = 0;
  int q_query = 0;
  std::optional<double> lr_training_loss;
  std::optional<double> similarity;
  std::optional<double> db_score;
  std::optional<double> nth_eigenvalue;
  std::optional<double> lr_confidence_log;
  std::optional<double> lr_confidence_mean_max_prob;
  double realized_performance = 0.0;
};

/// Fixed CSV column order shared by every per-task output.
std::string gauge_csv_header();
std::string gauge_csv_row(const GaugeReport& report);

/// -(1/n) sum_i log p[i, y_i], natural log.
double lr_training_loss(const Matrix& probs, const std::vector<int>& labels);

/// Mean over classes of intra(c) - max_{c' != c} inter(c, c'), cosine based.
/// `features` rows are grouped by `labels` (0..N-1); every class needs >= 1 row.
double similarity_metric(const Matrix& features, const std::vector<int>& labels);
double similarity_metric(const FeatureSet& fs, const std::vector<std::vector<std::size_t>>& support);

/// Davies-Bouldin score of a partition with Euclidean distances.
double db_score(const Matrix& features, const std::vector<int>& assignments);

/// lambda_N of the k-NN cosine graph Laplacian over the rows of `features`.
double nth_eigenvalue_gauge(const Matrix& features, int n, int k_neighbors = 15);
double nth_eigenvalue_gauge(const FeatureSet& fs, const std::vector<std::size_t>& rows, int n,
                            int k_neighbors = 15);

struct Confidence {
  double log_form = 0.0;       // -(1/n) sum log max_c p
  double mean_max_prob = 0.0;  // (1/n) sum max_c p
};
Confidence lr_confidence(const Matrix& query_probs);

/// Per-row max probability (used by active labeling).
std::vector<double> max_probabilities(const Matrix& probs);

}  // namespace fsgauge
