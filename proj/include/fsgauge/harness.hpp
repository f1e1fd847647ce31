#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsgauge/episode.hpp"
#include "fsgauge/feature_store.hpp"
#include "fsgauge/gauges.hpp"
#include "fsgauge/learners.hpp"
#include "fsgauge/parallel.hpp"
#include "fsgauge/simgraph.hpp"
#include "fsgauge/stats.hpp"

namespace fsgauge {

/// Gauges addressable by the harness. OracleError (1 - realized performance)
/// and Random (seeded uniform noise) are control gauges for protocol checks.
enum class GaugeId { LrLoss, Similarity, DbScore, NthEigenvalue, LrConfLog, LrConfMmp, OracleError, Random };

std::string to_string(GaugeId id);
GaugeId gauge_from_string(const std::string& name);

/// True when larger values of the gauge indicate a harder task.
bool higher_is_harder(GaugeId id);

/// Gauges reported for a setting, in CSV order.
std::vector<GaugeId> gauges_for(Setting setting);

/// Everything needed to run one task besides the episode itself.
struct TaskParams {
  Setting setting = Setting::Supervised;
  EpisodeSpec spec;
  DiffusionParams diffusion;
  /// Neighbours of the graph behind the eigenvalue gauge.
  int eigen_k_neighbors = 15;
  LogRegConfig logreg;
  NMeansConfig nmeans;
  bool keep_spectrum = false;
};

struct TaskResult {
  GaugeReport report;
  std::uint64_t seed = 0;
  /// Ascending Laplacian eigenvalues of the eigenvalue-gauge graph.
  std::vector<double> spectrum;
  bool dropped = false;
  std::string drop_reason;
};

/// Trains the setting's learner on one episode and computes every gauge
/// available for the setting.
TaskResult evaluate_task(const FeatureSet& fs, const Episode& episode, const TaskParams& params,
                         std::uint64_t episode_id, std::uint64_t seed);

/// Samples and evaluates n_tasks episodes; task t uses derive_seed(seed, t).
/// Tasks failing with a NumericalError are kept with dropped = true.
std::vector<TaskResult> run_tasks(const FeatureSet& fs, const TaskParams& params, int n_tasks, std::uint64_t seed,
                                  ExecPolicy policy = ExecPolicy::Serial);

/// Gauge value of a task, empty when the gauge is unavailable.
std::optional<double> gauge_value(const TaskResult& task, GaugeId id);

// ---- correlation studies -------------------------------------------------

struct GridPoint {
  int n_way = 5;
  int k_shot = 5;
  int q_query = 15;
};

struct GaugeCorrelation {
  GaugeId gauge = GaugeId::LrLoss;
  std::optional<double> pearson_signed;
  std::size_t n = 0;
  /// Set when the gauge or the performance had zero variance.
  bool degenerate = false;

  std::optional<double> pearson_abs() const;
};

struct CorrelationPoint {
  GridPoint point;
  /// Neighbour count used for this point (k-NN sweeps); 0 when not swept.
  int k_neighbors = 0;
  std::size_t n_tasks = 0;
  std::size_t n_dropped = 0;
  double mean_performance = 0.0;
  std::vector<GaugeCorrelation> gauges;
};

struct CorrelationStudy {
  Setting setting = Setting::Supervised;
  std::vector<CorrelationPoint> points;
  std::vector<TaskResult> tasks;
};

/// Correlation of every available gauge against realized performance over
/// `tasks`. The DB gauge is omitted when K = 1 in the supervised setting.
std::vector<GaugeCorrelation> correlate_gauges(const std::vector<TaskResult>& tasks, Setting setting);

CorrelationStudy run_correlation_study(const FeatureSet& fs, const TaskParams& base, const std::vector<GridPoint>& grid,
                                       int n_tasks, std::uint64_t seed, ExecPolicy policy = ExecPolicy::Serial);

/// Repeats the study at one grid point for each k (diffusion and eigenvalue graphs).
CorrelationStudy run_knn_sweep(const FeatureSet& fs, const TaskParams& base, const std::vector<int>& k_grid,
                               int n_tasks, std::uint64_t seed, ExecPolicy policy = ExecPolicy::Serial);

std::string correlation_csv_header();
std::string correlation_csv(const CorrelationStudy& study);
std::string tasks_csv(const std::vector<TaskResult>& tasks);

// ---- variance attribution ------------------------------------------------

struct VarianceAttribution {
  double std_random = 0.0;
  double fixed_class_mean_std = 0.0;
  double fixed_class_std_of_std = 0.0;
  double fixed_shot_mean_std = 0.0;
  double fixed_shot_std_of_std = 0.0;
  int outer = 0;
  int inner = 0;
};

/// The three nested protocols: std over random tasks (`inner` tasks), mean
/// std with fixed classes, mean std with fixed shots. `fixed_shot_pool` = 0
/// pre-assigns shots to every class.
VarianceAttribution run_variance_attribution(const FeatureSet& fs, const EpisodeSpec& spec, int outer, int inner,
                                             std::uint64_t seed, int fixed_shot_pool = 0,
                                             const LogRegConfig& logreg = {},
                                             ExecPolicy policy = ExecPolicy::Serial);

// ---- ROC threshold prediction ---------------------------------------------

struct RocPoint {
  double threshold = 0.0;
  double one_minus_specificity = 0.0;
  double sensibility = 0.0;
};

struct RocResult {
  GaugeId gauge = GaugeId::LrLoss;
  double accuracy_cut = 0.8;
  /// From "nothing predicted hard" to "everything predicted hard".
  std::vector<RocPoint> curve;
  std::size_t chosen = 0;
  double area = 0.0;
  /// Row-normalized percentages: [true hard, true easy] x [pred hard, pred easy].
  double confusion[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  std::size_t holdout_hard = 0;
  std::size_t holdout_easy = 0;
  /// Calibration (gauge, is_hard) pairs the curve was built from.
  std::vector<std::pair<double, bool>> calibration;
};

/// ROC over thresholds at every distinct gauge value. A task is predicted
/// hard when its gauge lies on the hard side of the threshold.
std::vector<RocPoint> roc_curve(const std::vector<double>& gauge, const std::vector<bool>& hard, bool higher_harder);
double roc_area(const std::vector<RocPoint>& curve);

/// Operating point: lowest 1-specificity among points whose sensibility
/// reaches `target`, ties toward higher sensibility.
std::size_t choose_operating_point(const std::vector<RocPoint>& curve, double target = 0.8);

/// Builds the curve on calibration values, freezes the chosen threshold and
/// scores it on the holdout values.
RocResult roc_from_values(GaugeId gauge, const std::vector<double>& calib_gauge, const std::vector<double>& calib_perf,
                          const std::vector<double>& hold_gauge, const std::vector<double>& hold_perf,
                          double accuracy_cut = 0.8, double target_sensibility = 0.8);

RocResult run_roc_prediction(const FeatureSet& calibrate, const FeatureSet& holdout, GaugeId gauge,
                             const TaskParams& params, int n_tasks, std::uint64_t seed, double accuracy_cut = 0.8,
                             ExecPolicy policy = ExecPolicy::Serial);

std::string roc_csv(const RocResult& roc);
std::string confusion_text(const RocResult& roc);

// ---- accuracy prediction -------------------------------------------------

struct AccuracyPrediction {
  double mae = 0.0;
  double mad_baseline = 0.0;
  std::vector<double> predicted;
  std::vector<double> realized;
};

/// mean |predicted - realized| and mean |realized - mean(realized)|.
AccuracyPrediction score_accuracy_prediction(const std::vector<double>& predicted, const std::vector<double>& realized);

/// Semi-supervised tasks; the mean max probability on the queries is the
/// predicted accuracy.
AccuracyPrediction run_accuracy_prediction(const FeatureSet& fs, const TaskParams& params, int n_tasks,
                                           std::uint64_t seed, ExecPolicy policy = ExecPolicy::Serial);

// ---- eigenvalue index sweep ---------------------------------------------

struct EigenIndexPoint {
  int n_way = 0;
  /// |r| of the N-th eigenvalue and of the best index (1-based).
  double r_at_n = 0.0;
  int best_index = 0;
  double r_at_best = 0.0;
  /// |r| per eigenvalue index (1-based position i-1); NaN when undefined.
  std::vector<double> r_by_index;
};

std::vector<EigenIndexPoint> run_eigenindex_sweep(const FeatureSet& fs, const TaskParams& base,
                                                  const std::vector<int>& way_grid, int n_tasks, std::uint64_t seed,
                                                  ExecPolicy policy = ExecPolicy::Serial);

std::string eigenindex_csv(const std::vector<EigenIndexPoint>& points);

// ---- active labeling ----------------------------------------------------

enum class LabelPolicy { LowestConfidence, Random };

std::string to_string(LabelPolicy policy);
LabelPolicy label_policy_from_string(const std::string& name);

struct ActiveLabelPoint {
  int budget = 0;
  double mean_accuracy = 0.0;
  std::size_t n_tasks = 0;
};

/// Trains the diffused LR, moves `budget` queries (lowest max-probability
/// first, or uniformly at random) into the support with their true labels,
/// retrains and scores on the remaining queries.
std::vector<ActiveLabelPoint> run_active_labeling(const FeatureSet& fs, const TaskParams& params,
                                                  const std::vector<int>& budget_grid, LabelPolicy policy,
                                                  int n_tasks, std::uint64_t seed,
                                                  ExecPolicy exec = ExecPolicy::Serial);

std::string active_label_csv(const std::vector<ActiveLabelPoint>& points, LabelPolicy policy);

}  // namespace fsgauge
