#pragma once

#include <cstdint>
#include <vector>

#include "fsgauge/feature_store.hpp"
#include "fsgauge/parallel.hpp"

namespace fsgauge {

struct LogRegConfig {
  int epochs = 50;
  double learning_rate = 0.01;
  double weight_decay = 5e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Multinomial logistic regression without bias: P = softmax(F W).
struct LogRegModel {
  Matrix weights;  // dim x n_classes
  int n_classes = 0;
  LogRegConfig config;
  /// Mean cross-entropy (nats) on the training rows after the last step.
  double final_training_loss = 0.0;
};

/// Mean cross-entropy plus (weight_decay / 2) ||W||^2 and its gradient.
/// The gradient of this objective is what Adam follows.
struct Objective {
  double value = 0.0;
  double cross_entropy = 0.0;
  Matrix gradient;
};
Objective logreg_objective(const Matrix& weights, const Matrix& features, const std::vector<int>& labels,
                           double weight_decay);

/// Row-wise numerically stable softmax.
Matrix softmax_rows(const Matrix& logits);

/// Full-batch Adam from zero weights, one step per epoch.
LogRegModel train_logreg(const Matrix& features, const std::vector<int>& labels, int n_classes,
                         const LogRegConfig& config = {});

Matrix predict_proba(const LogRegModel& model, const Matrix& features);

/// Index of the largest entry per row; ties go to the lowest index.
std::vector<int> argmax_rows(const Matrix& probs);

double accuracy(const LogRegModel& model, const Matrix& features, const std::vector<int>& labels);
double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels);

struct NMeansConfig {
  int n_init = 10;
  int max_iter = 300;
  double tol = 1e-4;
};

struct Clustering {
  std::vector<int> assignments;
  Matrix centroids;  // n_clusters x dim
  double inertia = 0.0;
  int iterations = 0;
  int empty_cluster_repairs = 0;
  /// Inertia after every Lloyd iteration of the winning restart.
  std::vector<double> inertia_trace;
};

/// k-means++ seeding, Lloyd iterations, best of n_init restarts.
Clustering n_means(const Matrix& features, int n_clusters, std::uint64_t seed, const NMeansConfig& config = {},
                   ExecPolicy policy = ExecPolicy::Serial);

/// Pair-counting adjusted Rand index; may be negative.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace fsgauge
