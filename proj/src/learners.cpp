#include "fsgauge/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fsgauge/errors.hpp"
#include "fsgauge/rng.hpp"

namespace fsgauge {

namespace {

void check_labels(const Matrix& features, const std::vector<int>& labels, int n_classes) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw_invalid("features and labels are not row-aligned");
  }
  if (labels.empty()) throw_invalid("no training rows");
  for (int l : labels) {
    if (l < 0 || l >= n_classes) throw_invalid("label " + std::to_string(l) + " out of range");
  }
}

double squared_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

// Nearest centroid per row (ties: lowest centroid index) and the inertia.
double assign(const Matrix& x, const Matrix& centers, std::vector<int>& labels) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      const double d = squared_distance(x, i, centers, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    inertia += best_d;
  }
  return inertia;
}

Matrix cluster_means(const Matrix& x, const std::vector<int>& labels, const Matrix& previous,
                     std::vector<int>& sizes) {
  const Eigen::Index k = previous.rows();
  Matrix sums = Matrix::Zero(k, x.cols());
  sizes.assign(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
    ++sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] > 0) {
      sums.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    } else {
      sums.row(c) = previous.row(c);
    }
  }
  return sums;
}

// Moves the point farthest from its centroid into each empty cluster.
int repair_empty(const Matrix& x, std::vector<int>& labels, Matrix& centers, std::vector<int>& sizes) {
  int repairs = 0;
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    if (sizes[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int owner = labels[static_cast<std::size_t>(i)];
      if (sizes[static_cast<std::size_t>(owner)] < 2) continue;
      const double d = squared_distance(x, i, centers, owner);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far < 0) break;
    const int donor = labels[static_cast<std::size_t>(far)];
    labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
    --sizes[static_cast<std::size_t>(donor)];
    sizes[static_cast<std::size_t>(c)] = 1;
    centers.row(c) = x.row(far);
    Vector sum = Vector::Zero(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (labels[static_cast<std::size_t>(i)] == donor) sum += x.row(i).transpose();
    }
    centers.row(donor) = sum.transpose() / static_cast<double>(sizes[static_cast<std::size_t>(donor)]);
    ++repairs;
  }
  return repairs;
}

// Greedy k-means++ with 2 + floor(ln k) candidate draws per new center.
Matrix kmeans_plus_plus(const Matrix& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  Matrix centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(rng));
  Vector closest(n);
  for (Eigen::Index i = 0; i < n; ++i) closest(i) = squared_distance(x, i, centers, 0);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double potential = closest.sum();
    Eigen::Index best_candidate = 0;
    double best_potential = std::numeric_limits<double>::infinity();
    Vector best_closest;
    for (int t = 0; t < trials; ++t) {
      Eigen::Index candidate = 0;
      if (potential > 0.0) {
        double target = unit(rng) * potential;
        candidate = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          target -= closest(i);
          if (target < 0.0) {
            candidate = i;
            break;
          }
        }
      } else {
        candidate = first(rng);
      }
      Vector updated(n);
      for (Eigen::Index i = 0; i < n; ++i) updated(i) = std::min(closest(i), (x.row(i) - x.row(candidate)).squaredNorm());
      const double pot = updated.sum();
      if (pot < best_potential) {
        best_potential = pot;
        best_candidate = candidate;
        best_closest = std::move(updated);
      }
    }
    centers.row(c) = x.row(best_candidate);
    closest = std::move(best_closest);
  }
  return centers;
}

Clustering lloyd_once(const Matrix& x, int k, std::uint64_t seed, const NMeansConfig& config, double tol_abs) {
  Rng rng = make_rng(seed);
  Clustering result;
  Matrix centers = kmeans_plus_plus(x, k, rng);
  std::vector<int> labels(static_cast<std::size_t>(x.rows()), 0);
  std::vector<int> previous;
  std::vector<int> sizes;
  for (int it = 0; it < config.max_iter; ++it) {
    result.inertia_trace.push_back(assign(x, centers, labels));
    ++result.iterations;
    Matrix updated = cluster_means(x, labels, centers, sizes);
    result.empty_cluster_repairs += repair_empty(x, labels, updated, sizes);
    const double shift = (updated - centers).squaredNorm();
    centers = std::move(updated);
    if (labels == previous || shift <= tol_abs) break;
    previous = labels;
  }
  assign(x, centers, labels);
  centers = cluster_means(x, labels, centers, sizes);
  result.empty_cluster_repairs += repair_empty(x, labels, centers, sizes);
  centers = cluster_means(x, labels, centers, sizes);
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) inertia += squared_distance(x, i, centers, labels[static_cast<std::size_t>(i)]);
  result.inertia_trace.push_back(inertia);
  result.assignments = std::move(labels);
  result.centroids = std::move(centers);
  result.inertia = inertia;
  return result;
}

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - top).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

Objective logreg_objective(const Matrix& weights, const Matrix& features, const std::vector<int>& labels,
                           double weight_decay) {
  const auto n = static_cast<double>(features.rows());
  const Matrix probs = softmax_rows(features * weights);
  Matrix residual = probs;
  double ce = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    ce -= std::log(probs(i, y));
    residual(i, y) -= 1.0;
  }
  ce /= n;
  Objective obj;
  obj.cross_entropy = ce;
  obj.value = ce + 0.5 * weight_decay * weights.squaredNorm();
  obj.gradient = features.transpose() * residual / n + weight_decay * weights;
  return obj;
}

LogRegModel train_logreg(const Matrix& features, const std::vector<int>& labels, int n_classes,
                         const LogRegConfig& config) {
  if (n_classes < 2) throw_invalid("logistic regression needs at least 2 classes");
  check_labels(features, labels, n_classes);
  std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
  for (int l : labels) present[static_cast<std::size_t>(l)] = true;
  if (std::find(present.begin(), present.end(), false) != present.end()) {
    throw_invalid("every class must have at least one training row");
  }

  LogRegModel model;
  model.n_classes = n_classes;
  model.config = config;
  model.weights = Matrix::Zero(features.cols(), n_classes);
  Matrix m = Matrix::Zero(features.cols(), n_classes);
  Matrix v = Matrix::Zero(features.cols(), n_classes);
  double beta1_t = 1.0;
  double beta2_t = 1.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Objective obj = logreg_objective(model.weights, features, labels, config.weight_decay);
    if (!std::isfinite(obj.value)) throw_numerical("logistic regression diverged at epoch " + std::to_string(epoch));
    m = config.beta1 * m + (1.0 - config.beta1) * obj.gradient;
    v = config.beta2 * v + (1.0 - config.beta2) * obj.gradient.cwiseAbs2();
    beta1_t *= config.beta1;
    beta2_t *= config.beta2;
    const double step = config.learning_rate / (1.0 - beta1_t);
    const double v_scale = 1.0 / (1.0 - beta2_t);
    model.weights.array() -= step * m.array() / ((v.array() * v_scale).sqrt() + config.epsilon);
  }
  const Objective final_obj = logreg_objective(model.weights, features, labels, config.weight_decay);
  if (!std::isfinite(final_obj.cross_entropy) || !model.weights.allFinite()) {
    throw_numerical("logistic regression diverged");
  }
  model.final_training_loss = final_obj.cross_entropy;
  return model;
}

Matrix predict_proba(const LogRegModel& model, const Matrix& features) {
  if (features.cols() != model.weights.rows()) {
    throw_invalid("feature dim " + std::to_string(features.cols()) + " does not match model dim " +
                  std::to_string(model.weights.rows()));
  }
  return softmax_rows(features * model.weights);
}

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(i, c) > probs(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (labels.empty()) throw_invalid("accuracy of an empty evaluation set");
  if (predicted.size() != labels.size()) throw_invalid("prediction and label counts differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double accuracy(const LogRegModel& model, const Matrix& features, const std::vector<int>& labels) {
  if (labels.empty()) throw_invalid("accuracy of an empty evaluation set");
  return accuracy(argmax_rows(predict_proba(model, features)), labels);
}

Clustering n_means(const Matrix& features, int n_clusters, std::uint64_t seed, const NMeansConfig& config,
                   ExecPolicy policy) {
  if (n_clusters < 1) throw_invalid("n_clusters must be >= 1");
  if (features.rows() < n_clusters) {
    throw_invalid("n_means needs at least " + std::to_string(n_clusters) + " rows, got " +
                  std::to_string(features.rows()));
  }
  if (config.n_init < 1) throw_invalid("n_init must be >= 1");
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const double mean_variance = (features.rowwise() - mean).cwiseAbs2().colwise().mean().mean();
  const double tol_abs = config.tol * mean_variance;

  std::vector<Clustering> runs(static_cast<std::size_t>(config.n_init));
  parallel_for(runs.size(), policy, [&](std::size_t r) {
    runs[r] = lloyd_once(features, n_clusters, derive_seed(seed, r), config, tol_abs);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  return std::move(runs[best]);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw_invalid("partitions have different lengths");
  if (a.size() < 2) throw_invalid("adjusted Rand index needs at least 2 elements");
  std::map<int, std::size_t> ids_a;
  std::map<int, std::size_t> ids_b;
  for (int v : a) ids_a.emplace(v, ids_a.size());
  for (int v : b) ids_b.emplace(v, ids_b.size());
  std::vector<std::vector<double>> table(ids_a.size(), std::vector<double>(ids_b.size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) table[ids_a[a[i]]][ids_b[b[i]]] += 1.0;

  double index = 0.0;
  std::vector<double> row_sums(ids_a.size(), 0.0);
  std::vector<double> col_sums(ids_b.size(), 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < table[i].size(); ++j) {
      index += choose2(table[i][j]);
      row_sums[i] += table[i][j];
      col_sums[j] += table[i][j];
    }
  }
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (double s : row_sums) sum_a += choose2(s);
  for (double s : col_sums) sum_b += choose2(s);
  const double expected = sum_a * sum_b / choose2(static_cast<double>(a.size()));
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;  // both partitions trivial and identical
  return (index - expected) / (maximum - expected);
}

}  // namespace fsgauge
