#include "fsgauge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "fsgauge/errors.hpp"
#include "fsgauge/rng.hpp"

namespace fsgauge {

namespace {

constexpr std::uint64_t kRandomGaugeStream = 0x72616e64ULL;
constexpr std::uint64_t kNMeansStream = 0x6b6d6e73ULL;

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

Matrix top_rows(const Matrix& m, Eigen::Index n) { return m.topRows(n); }
Matrix bottom_rows(const Matrix& m, Eigen::Index n) { return m.bottomRows(n); }

// Unsupervised gauges on `rows`: N-means clustering, its DB score and the
// Laplacian spectrum of the k-NN graph.
struct UnlabeledGauges {
  Clustering clustering;
  std::optional<double> db;
  double nth_eigenvalue = 0.0;
  std::vector<double> spectrum;
};

UnlabeledGauges unlabeled_gauges(const Matrix& rows, int n_way, const TaskParams& params, std::uint64_t seed,
                                 bool want_db) {
  UnlabeledGauges g;
  g.clustering = n_means(rows, n_way, derive_seed(seed, kNMeansStream), params.nmeans);
  if (want_db) {
    try {
      g.db = db_score(rows, g.clustering.assignments);
    } catch (const NumericalError&) {
      g.db.reset();
    }
  }
  const auto graph = knn_sparsify(cosine_matrix(rows), params.eigen_k_neighbors);
  g.spectrum = laplacian_eigenvalues(graph);
  g.nth_eigenvalue = g.spectrum[static_cast<std::size_t>(n_way - 1)];
  return g;
}

TaskParams with_point(const TaskParams& base, const GridPoint& p) {
  TaskParams t = base;
  t.spec.n_way = p.n_way;
  t.spec.k_shot = p.k_shot;
  t.spec.q_query = p.q_query;
  if (t.setting != Setting::Supervised) t.spec.test_per_class = 0;
  if (t.setting == Setting::Unsupervised) t.spec.k_shot = 0;
  return t;
}

}  // namespace

std::string to_string(GaugeId id) {
  switch (id) {
    case GaugeId::LrLoss:
      return "lr_loss";
    case GaugeId::Similarity:
      return "similarity";
    case GaugeId::DbScore:
      return "db_score";
    case GaugeId::NthEigenvalue:
      return "nth_egv";
    case GaugeId::LrConfLog:
      return "lr_conf_log";
    case GaugeId::LrConfMmp:
      return "lr_conf_mmp";
    case GaugeId::OracleError:
      return "oracle_error";
    case GaugeId::Random:
      return "random";
  }
  return "unknown";
}

GaugeId gauge_from_string(const std::string& name) {
  for (GaugeId id : {GaugeId::LrLoss, GaugeId::Similarity, GaugeId::DbScore, GaugeId::NthEigenvalue,
                     GaugeId::LrConfLog, GaugeId::LrConfMmp, GaugeId::OracleError, GaugeId::Random}) {
    if (to_string(id) == name) return id;
  }
  throw_invalid("unknown gauge '" + name + "'");
}

bool higher_is_harder(GaugeId id) {
  return id != GaugeId::Similarity && id != GaugeId::LrConfMmp;
}

std::vector<GaugeId> gauges_for(Setting setting) {
  switch (setting) {
    case Setting::Supervised:
      return {GaugeId::LrLoss, GaugeId::Similarity, GaugeId::DbScore, GaugeId::NthEigenvalue};
    case Setting::SemiSupervised:
      return {GaugeId::LrLoss,        GaugeId::Similarity, GaugeId::DbScore,
              GaugeId::NthEigenvalue, GaugeId::LrConfLog,  GaugeId::LrConfMmp};
    case Setting::Unsupervised:
      return {GaugeId::DbScore, GaugeId::NthEigenvalue};
  }
  return {};
}

TaskResult evaluate_task(const FeatureSet& fs, const Episode& ep, const TaskParams& params, std::uint64_t episode_id,
                         std::uint64_t seed) {
  TaskResult out;
  out.seed = seed;
  GaugeReport& r = out.report;
  r.episode_id = episode_id;
  r.setting = params.setting;
  r.n_way = ep.n_way();
  r.k_shot = params.spec.k_shot;
  r.q_query = params.spec.q_query;
  const int n = ep.n_way();

  switch (params.setting) {
    case Setting::Supervised: {
      if (params.spec.k_shot < 1) throw_invalid("supervised tasks need K >= 1");
      const Matrix support = fs.gather(ep.support_rows());
      const auto labels = ep.support_labels();
      const auto model = train_logreg(support, labels, n, params.logreg);
      r.lr_training_loss = model.final_training_loss;
      r.similarity = similarity_metric(support, labels);
      // Unsupervised gauges treat the support rows as unlabeled.
      auto g = unlabeled_gauges(support, n, params, seed, params.spec.k_shot > 1);
      r.db_score = g.db;
      r.nth_eigenvalue = g.nth_eigenvalue;
      if (params.keep_spectrum) out.spectrum = std::move(g.spectrum);
      r.realized_performance = accuracy(model, fs.gather(ep.test_rows()), ep.test_labels());
      break;
    }
    case Setting::SemiSupervised: {
      if (params.spec.k_shot < 1) throw_invalid("semi-supervised tasks need K >= 1");
      const auto support_rows = ep.support_rows();
      const auto query_rows = ep.query_rows();
      if (query_rows.empty()) throw_invalid("semi-supervised tasks need queries");
      std::vector<std::size_t> all = support_rows;
      all.insert(all.end(), query_rows.begin(), query_rows.end());
      const Matrix diffused = diffuse_features(fs.gather(all), params.diffusion);
      const Matrix support = top_rows(diffused, static_cast<Eigen::Index>(support_rows.size()));
      const Matrix query = bottom_rows(diffused, static_cast<Eigen::Index>(query_rows.size()));
      const auto labels = ep.support_labels();
      const auto model = train_logreg(support, labels, n, params.logreg);
      const Matrix probs = predict_proba(model, query);
      r.lr_training_loss = model.final_training_loss;
      r.similarity = similarity_metric(support, labels);
      auto g = unlabeled_gauges(query, n, params, seed, true);
      r.db_score = g.db;
      r.nth_eigenvalue = g.nth_eigenvalue;
      if (params.keep_spectrum) out.spectrum = std::move(g.spectrum);
      const auto conf = lr_confidence(probs);
      r.lr_confidence_log = conf.log_form;
      r.lr_confidence_mean_max_prob = conf.mean_max_prob;
      r.realized_performance = accuracy(argmax_rows(probs), ep.query_labels());
      break;
    }
    case Setting::Unsupervised: {
      const auto query_rows = ep.query_rows();
      if (query_rows.size() < 2) throw_invalid("unsupervised tasks need at least 2 queries");
      const Matrix diffused = diffuse_features(fs.gather(query_rows), params.diffusion);
      auto g = unlabeled_gauges(diffused, n, params, seed, true);
      r.db_score = g.db;
      r.nth_eigenvalue = g.nth_eigenvalue;
      r.realized_performance = adjusted_rand_index(g.clustering.assignments, ep.query_labels());
      if (params.keep_spectrum) out.spectrum = std::move(g.spectrum);
      break;
    }
  }
  return out;
}

std::vector<TaskResult> run_tasks(const FeatureSet& fs, const TaskParams& params, int n_tasks, std::uint64_t seed,
                                  ExecPolicy policy) {
  if (n_tasks < 1) throw_invalid("n_tasks must be >= 1");
  validate_spec(params.spec);
  std::vector<TaskResult> results(static_cast<std::size_t>(n_tasks));
  parallel_for(results.size(), policy, [&](std::size_t t) {
    EpisodeSpec spec = params.spec;
    spec.seed = derive_seed(seed, t);
    const Episode ep = sample_episode(fs, spec);
    try {
      results[t] = evaluate_task(fs, ep, params, t, spec.seed);
    } catch (const NumericalError& e) {
      results[t].seed = spec.seed;
      results[t].report.episode_id = t;
      results[t].report.setting = params.setting;
      results[t].dropped = true;
      results[t].drop_reason = e.what();
    }
  });
  return results;
}

std::optional<double> gauge_value(const TaskResult& task, GaugeId id) {
  const auto& r = task.report;
  switch (id) {
    case GaugeId::LrLoss:
      return r.lr_training_loss;
    case GaugeId::Similarity:
      return r.similarity;
    case GaugeId::DbScore:
      return r.db_score;
    case GaugeId::NthEigenvalue:
      return r.nth_eigenvalue;
    case GaugeId::LrConfLog:
      return r.lr_confidence_log;
    case GaugeId::LrConfMmp:
      return r.lr_confidence_mean_max_prob;
    case GaugeId::OracleError:
      return 1.0 - r.realized_performance;
    case GaugeId::Random: {
      Rng rng = make_rng(derive_seed(task.seed, kRandomGaugeStream));
      return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }
  }
  return std::nullopt;
}

// ---- correlation ---------------------------------------------------------

std::optional<double> GaugeCorrelation::pearson_abs() const {
  if (!pearson_signed) return std::nullopt;
  return std::abs(*pearson_signed);
}

std::vector<GaugeCorrelation> correlate_gauges(const std::vector<TaskResult>& tasks, Setting setting) {
  std::vector<GaugeCorrelation> out;
  for (GaugeId id : gauges_for(setting)) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& t : tasks) {
      if (t.dropped) continue;
      const auto v = gauge_value(t, id);
      if (!v) continue;
      x.push_back(*v);
      y.push_back(t.report.realized_performance);
    }
    if (x.empty()) continue;  // gauge not reported for this point (e.g. DB at K = 1)
    GaugeCorrelation c;
    c.gauge = id;
    c.n = x.size();
    try {
      c.pearson_signed = pearson(x, y);
    } catch (const Error&) {
      c.degenerate = true;
    }
    out.push_back(c);
  }
  return out;
}

CorrelationStudy run_correlation_study(const FeatureSet& fs, const TaskParams& base, const std::vector<GridPoint>& grid,
                                       int n_tasks, std::uint64_t seed, ExecPolicy policy) {
  if (grid.empty()) throw_invalid("correlation study needs a nonempty grid");
  if (n_tasks < 2) throw_invalid("correlation study needs n_tasks >= 2");
  CorrelationStudy study;
  study.setting = base.setting;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const TaskParams params = with_point(base, grid[g]);
    auto tasks = run_tasks(fs, params, n_tasks, derive_seed(seed, g), policy);
    CorrelationPoint point;
    point.point = grid[g];
    point.n_tasks = tasks.size();
    std::vector<double> perf;
    for (const auto& t : tasks) {
      if (t.dropped) {
        ++point.n_dropped;
      } else {
        perf.push_back(t.report.realized_performance);
      }
    }
    point.mean_performance = perf.empty() ? std::nan("") : mean(perf);
    point.gauges = correlate_gauges(tasks, base.setting);
    for (auto& t : tasks) t.report.episode_id += g * static_cast<std::uint64_t>(n_tasks);
    study.tasks.insert(study.tasks.end(), std::make_move_iterator(tasks.begin()), std::make_move_iterator(tasks.end()));
    study.points.push_back(std::move(point));
  }
  return study;
}

CorrelationStudy run_knn_sweep(const FeatureSet& fs, const TaskParams& base, const std::vector<int>& k_grid,
                               int n_tasks, std::uint64_t seed, ExecPolicy policy) {
  if (k_grid.empty()) throw_invalid("k-NN sweep needs a nonempty k grid");
  CorrelationStudy study;
  study.setting = base.setting;
  const GridPoint point{base.spec.n_way, base.spec.k_shot, base.spec.q_query};
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    TaskParams params = base;
    params.diffusion.k_neighbors = k_grid[i];
    params.eigen_k_neighbors = k_grid[i];
    auto sub = run_correlation_study(fs, params, {point}, n_tasks, derive_seed(seed, i), policy);
    sub.points.front().k_neighbors = k_grid[i];
    study.points.push_back(std::move(sub.points.front()));
    for (auto& t : sub.tasks) t.report.episode_id += i * static_cast<std::uint64_t>(n_tasks);
    study.tasks.insert(study.tasks.end(), std::make_move_iterator(sub.tasks.begin()),
                       std::make_move_iterator(sub.tasks.end()));
  }
  return study;
}

std::string correlation_csv_header() { return "setting,N,K,Q,gauge,pearson_signed,pearson_abs,n_tasks"; }

std::string correlation_csv(const CorrelationStudy& study) {
  std::ostringstream out;
  const bool swept = std::any_of(study.points.begin(), study.points.end(), [](const auto& p) { return p.k_neighbors > 0; });
  out << correlation_csv_header() << (swept ? ",k_neighbors" : "") << "\n";
  for (const auto& p : study.points) {
    for (const auto& g : p.gauges) {
      out << to_string(study.setting) << ',' << p.point.n_way << ',' << p.point.k_shot << ',' << p.point.q_query << ','
          << to_string(g.gauge) << ',' << fmt(g.pearson_signed) << ',' << fmt(g.pearson_abs()) << ',' << g.n;
      if (swept) out << ',' << p.k_neighbors;
      out << "\n";
    }
  }
  return out.str();
}

std::string tasks_csv(const std::vector<TaskResult>& tasks) {
  std::ostringstream out;
  out << gauge_csv_header() << "\n";
  for (const auto& t : tasks) {
    if (!t.dropped) out << gauge_csv_row(t.report) << "\n";
  }
  return out.str();
}

// ---- variance attribution ------------------------------------------------

VarianceAttribution run_variance_attribution(const FeatureSet& fs, const EpisodeSpec& spec, int outer, int inner,
                                             std::uint64_t seed, int fixed_shot_pool, const LogRegConfig& logreg,
                                             ExecPolicy policy) {
  if (outer < 1 || inner < 2) throw_invalid("variance attribution needs outer >= 1 and inner >= 2");
  validate_spec(spec);
  if (spec.k_shot < 1 || spec.test_per_class < 1) throw_invalid("variance attribution needs K >= 1 and a test set");
  const auto n_classes = static_cast<int>(fs.num_classes());
  const int pool = fixed_shot_pool > 0 ? fixed_shot_pool : n_classes;
  if (pool < spec.n_way || pool > n_classes) throw_invalid("fixed-shot pool must hold between N and all classes");

  auto score = [&](const Episode& ep) {
    const auto model = train_logreg(fs.gather(ep.support_rows()), ep.support_labels(), ep.n_way(), logreg);
    return accuracy(model, fs.gather(ep.test_rows()), ep.test_labels());
  };
  const std::uint64_t random_seed = derive_seed(seed, 1);
  const std::uint64_t class_seed = derive_seed(seed, 2);
  const std::uint64_t shot_seed = derive_seed(seed, 3);

  // Random tasks.
  std::vector<double> random_acc(static_cast<std::size_t>(inner));
  parallel_for(random_acc.size(), policy, [&](std::size_t t) {
    EpisodeSpec s = spec;
    s.seed = derive_seed(random_seed, t);
    random_acc[t] = score(sample_episode(fs, s));
  });

  // Fixed classes per outer run.
  std::vector<std::vector<Label>> fixed_classes(static_cast<std::size_t>(outer));
  for (std::size_t o = 0; o < fixed_classes.size(); ++o) {
    EpisodeSpec s = spec;
    s.seed = derive_seed(class_seed, o, 0);
    s.k_shot = 0;
    s.q_query = 1;
    s.test_per_class = 0;
    fixed_classes[o] = sample_episode(fs, s).class_ids;
  }
  // Fixed shots for every class of the pool, per outer run.
  std::vector<std::map<Label, std::vector<std::size_t>>> fixed_shots(static_cast<std::size_t>(outer));
  const auto by_class = fs.rows_by_class();
  for (std::size_t o = 0; o < fixed_shots.size(); ++o) {
    Rng rng = make_rng(derive_seed(shot_seed, o, 0));
    std::vector<Label> classes(static_cast<std::size_t>(n_classes));
    std::iota(classes.begin(), classes.end(), 0);
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(static_cast<std::size_t>(pool));
    std::sort(classes.begin(), classes.end());
    for (Label c : classes) {
      auto rows = by_class[c];
      if (rows.size() < static_cast<std::size_t>(spec.k_shot)) throw_invalid("class too small for fixed shots");
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(static_cast<std::size_t>(spec.k_shot));
      fixed_shots[o][c] = std::move(rows);
    }
  }

  const std::size_t total = static_cast<std::size_t>(outer) * static_cast<std::size_t>(inner);
  std::vector<double> class_acc(total);
  std::vector<double> shot_acc(total);
  parallel_for(total, policy, [&](std::size_t idx) {
    const std::size_t o = idx / static_cast<std::size_t>(inner);
    const std::size_t i = idx % static_cast<std::size_t>(inner);
    EpisodeSpec s = spec;
    s.seed = derive_seed(class_seed, o, i + 1);
    class_acc[idx] = score(sample_episode_fixed_classes(fs, s, fixed_classes[o]));
    s.seed = derive_seed(shot_seed, o, i + 1);
    shot_acc[idx] = score(sample_episode_fixed_shots(fs, s, fixed_shots[o]));
  });

  std::vector<double> class_stds;
  std::vector<double> shot_stds;
  for (std::size_t o = 0; o < static_cast<std::size_t>(outer); ++o) {
    const auto begin = static_cast<std::ptrdiff_t>(o * static_cast<std::size_t>(inner));
    const auto end = begin + inner;
    class_stds.push_back(stddev({class_acc.begin() + begin, class_acc.begin() + end}));
    shot_stds.push_back(stddev({shot_acc.begin() + begin, shot_acc.begin() + end}));
  }
  VarianceAttribution out;
  out.outer = outer;
  out.inner = inner;
  out.std_random = stddev(random_acc);
  out.fixed_class_mean_std = mean(class_stds);
  out.fixed_class_std_of_std = stddev(class_stds);
  out.fixed_shot_mean_std = mean(shot_stds);
  out.fixed_shot_std_of_std = stddev(shot_stds);
  return out;
}

// ---- ROC -----------------------------------------------------------------

std::vector<RocPoint> roc_curve(const std::vector<double>& gauge, const std::vector<bool>& hard, bool higher_harder) {
  if (gauge.size() != hard.size()) throw_invalid("gauge and label counts differ");
  std::size_t n_hard = 0;
  for (bool h : hard) n_hard += h ? 1 : 0;
  const std::size_t n_easy = hard.size() - n_hard;
  if (n_hard == 0 || n_easy == 0) throw_invalid("single-class calibration: tasks are all hard or all easy");

  std::vector<double> thresholds = gauge;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  if (thresholds.size() < 2) throw_invalid("ROC needs at least 2 distinct gauge values");
  // Order thresholds so that the predicted-hard set grows along the curve.
  if (higher_harder) std::reverse(thresholds.begin(), thresholds.end());

  std::vector<std::size_t> order(gauge.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return higher_harder ? gauge[a] > gauge[b] : gauge[a] < gauge[b];
  });

  std::vector<RocPoint> curve;
  curve.push_back({higher_harder ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(),
                   0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t cursor = 0;
  for (double t : thresholds) {
    while (cursor < order.size() && gauge[order[cursor]] == t) {
      (hard[order[cursor]] ? tp : fp) += 1;
      ++cursor;
    }
    curve.push_back({t, static_cast<double>(fp) / static_cast<double>(n_easy),
                     static_cast<double>(tp) / static_cast<double>(n_hard)});
  }
  return curve;
}

double roc_area(const std::vector<RocPoint>& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].one_minus_specificity - curve[i - 1].one_minus_specificity) *
            (curve[i].sensibility + curve[i - 1].sensibility) / 2.0;
  }
  return area;
}

std::size_t choose_operating_point(const std::vector<RocPoint>& curve, double target) {
  if (curve.empty()) throw_invalid("empty ROC curve");
  std::size_t best = curve.size() - 1;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].sensibility < target) continue;
    const auto& c = curve[i];
    const auto& b = curve[best];
    if (c.one_minus_specificity < b.one_minus_specificity ||
        (c.one_minus_specificity == b.one_minus_specificity && c.sensibility > b.sensibility)) {
      best = i;
    }
  }
  return best;
}

RocResult roc_from_values(GaugeId gauge, const std::vector<double>& calib_gauge, const std::vector<double>& calib_perf,
                          const std::vector<double>& hold_gauge, const std::vector<double>& hold_perf,
                          double accuracy_cut, double target_sensibility) {
  if (calib_gauge.size() != calib_perf.size() || hold_gauge.size() != hold_perf.size()) {
    throw_invalid("gauge and performance counts differ");
  }
  RocResult out;
  out.gauge = gauge;
  out.accuracy_cut = accuracy_cut;
  const bool harder = higher_is_harder(gauge);
  std::vector<bool> hard;
  for (std::size_t i = 0; i < calib_perf.size(); ++i) {
    hard.push_back(calib_perf[i] < accuracy_cut);
    out.calibration.emplace_back(calib_gauge[i], hard.back());
  }
  out.curve = roc_curve(calib_gauge, hard, harder);
  out.area = roc_area(out.curve);
  out.chosen = choose_operating_point(out.curve, target_sensibility);
  const double threshold = out.curve[out.chosen].threshold;

  std::size_t counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < hold_gauge.size(); ++i) {
    const bool truly_hard = hold_perf[i] < accuracy_cut;
    const bool predicted_hard = harder ? hold_gauge[i] >= threshold : hold_gauge[i] <= threshold;
    ++counts[truly_hard ? 0 : 1][predicted_hard ? 0 : 1];
  }
  out.holdout_hard = counts[0][0] + counts[0][1];
  out.holdout_easy = counts[1][0] + counts[1][1];
  for (int row = 0; row < 2; ++row) {
    const double total = static_cast<double>(counts[row][0] + counts[row][1]);
    for (int col = 0; col < 2; ++col) {
      out.confusion[row][col] = total > 0.0 ? 100.0 * static_cast<double>(counts[row][col]) / total : std::nan("");
    }
  }
  return out;
}

RocResult run_roc_prediction(const FeatureSet& calibrate, const FeatureSet& holdout, GaugeId gauge,
                             const TaskParams& params, int n_tasks, std::uint64_t seed, double accuracy_cut,
                             ExecPolicy policy) {
  for (const auto& name : calibrate.class_names) {
    if (std::find(holdout.class_names.begin(), holdout.class_names.end(), name) != holdout.class_names.end()) {
      throw_invalid("calibration and holdout class pools overlap on '" + name + "'");
    }
  }
  auto collect = [&](const FeatureSet& fs, std::uint64_t s, std::vector<double>& g, std::vector<double>& perf) {
    for (const auto& t : run_tasks(fs, params, n_tasks, s, policy)) {
      if (t.dropped) continue;
      const auto v = gauge_value(t, gauge);
      if (!v) throw_invalid("gauge " + to_string(gauge) + " is not available in the " + to_string(params.setting) + " setting");
      g.push_back(*v);
      perf.push_back(t.report.realized_performance);
    }
  };
  std::vector<double> cg, cp, hg, hp;
  collect(calibrate, derive_seed(seed, 1), cg, cp);
  collect(holdout, derive_seed(seed, 2), hg, hp);
  return roc_from_values(gauge, cg, cp, hg, hp, accuracy_cut);
}

std::string roc_csv(const RocResult& roc) {
  std::ostringstream out;
  out << "threshold,one_minus_specificity,sensibility\n";
  for (const auto& p : roc.curve) {
    out << (std::isinf(p.threshold) ? (p.threshold > 0 ? "inf" : "-inf") : fmt(p.threshold)) << ','
        << fmt(p.one_minus_specificity) << ',' << fmt(p.sensibility) << "\n";
  }
  return out.str();
}

std::string confusion_text(const RocResult& roc) {
  char buf[512];
  const auto& p = roc.curve[roc.chosen];
  std::snprintf(buf, sizeof buf,
                "gauge: %s\naccuracy_cut: %.4f\nthreshold: %.9g\ncalibration_point: %.6f %.6f\nroc_area: %.6f\n"
                "holdout_hard: %zu\nholdout_easy: %zu\n"
                "confusion_percent:            predicted_hard  predicted_easy\n"
                "  hard                        %14.2f  %14.2f\n"
                "  easy                        %14.2f  %14.2f\n",
                to_string(roc.gauge).c_str(), roc.accuracy_cut, p.threshold, p.one_minus_specificity, p.sensibility,
                roc.area, roc.holdout_hard, roc.holdout_easy, roc.confusion[0][0], roc.confusion[0][1],
                roc.confusion[1][0], roc.confusion[1][1]);
  return buf;
}

// ---- accuracy prediction -------------------------------------------------

AccuracyPrediction score_accuracy_prediction(const std::vector<double>& predicted, const std::vector<double>& realized) {
  if (predicted.size() != realized.size() || predicted.empty()) throw_invalid("need matching nonempty vectors");
  AccuracyPrediction out;
  out.predicted = predicted;
  out.realized = realized;
  const bool constant =
      std::all_of(realized.begin(), realized.end(), [&](double r) { return r == realized.front(); });
  const double m = constant ? realized.front() : mean(realized);
  for (std::size_t i = 0; i < realized.size(); ++i) {
    out.mae += std::abs(predicted[i] - realized[i]);
    out.mad_baseline += std::abs(realized[i] - m);
  }
  out.mae /= static_cast<double>(realized.size());
  out.mad_baseline /= static_cast<double>(realized.size());
  return out;
}

AccuracyPrediction run_accuracy_prediction(const FeatureSet& fs, const TaskParams& params, int n_tasks,
                                           std::uint64_t seed, ExecPolicy policy) {
  if (params.setting != Setting::SemiSupervised) throw_invalid("accuracy prediction runs in the semi-supervised setting");
  std::vector<double> predicted;
  std::vector<double> realized;
  for (const auto& t : run_tasks(fs, params, n_tasks, seed, policy)) {
    if (t.dropped) continue;
    predicted.push_back(*t.report.lr_confidence_mean_max_prob);
    realized.push_back(t.report.realized_performance);
  }
  return score_accuracy_prediction(predicted, realized);
}

// ---- eigenvalue index sweep ---------------------------------------------

std::vector<EigenIndexPoint> run_eigenindex_sweep(const FeatureSet& fs, const TaskParams& base,
                                                  const std::vector<int>& way_grid, int n_tasks, std::uint64_t seed,
                                                  ExecPolicy policy) {
  if (way_grid.empty()) throw_invalid("eigenvalue sweep needs a nonempty way grid");
  if (n_tasks < 2) throw_invalid("eigenvalue sweep needs n_tasks >= 2");
  std::vector<EigenIndexPoint> out;
  for (std::size_t w = 0; w < way_grid.size(); ++w) {
    TaskParams params = with_point(base, {way_grid[w], base.spec.k_shot, base.spec.q_query});
    params.keep_spectrum = true;
    const auto tasks = run_tasks(fs, params, n_tasks, derive_seed(seed, w), policy);
    EigenIndexPoint point;
    point.n_way = way_grid[w];
    std::size_t n_values = std::numeric_limits<std::size_t>::max();
    std::vector<double> perf;
    for (const auto& t : tasks) {
      if (t.dropped) continue;
      n_values = std::min(n_values, t.spectrum.size());
      perf.push_back(t.report.realized_performance);
    }
    if (perf.size() < 2) throw_numerical("too few valid tasks for the eigenvalue sweep");
    point.r_by_index.assign(n_values, std::nan(""));
    for (std::size_t i = 0; i < n_values; ++i) {
      std::vector<double> x;
      for (const auto& t : tasks) {
        if (!t.dropped) x.push_back(t.spectrum[i]);
      }
      try {
        point.r_by_index[i] = std::abs(pearson(x, perf));
      } catch (const Error&) {
        // constant eigenvalue (e.g. lambda_1 = 0): correlation undefined
      }
    }
    point.r_at_n = point.r_by_index[static_cast<std::size_t>(point.n_way - 1)];
    point.best_index = point.n_way;
    point.r_at_best = point.r_at_n;
    for (std::size_t i = 0; i < n_values; ++i) {
      const double r = point.r_by_index[i];
      if (!std::isnan(r) && (std::isnan(point.r_at_best) || r > point.r_at_best)) {
        point.r_at_best = r;
        point.best_index = static_cast<int>(i + 1);
      }
    }
    out.push_back(std::move(point));
  }
  return out;
}

std::string eigenindex_csv(const std::vector<EigenIndexPoint>& points) {
  std::ostringstream out;
  out << "N,r_at_N,best_index,r_at_best\n";
  for (const auto& p : points) out << p.n_way << ',' << fmt(p.r_at_n) << ',' << p.best_index << ',' << fmt(p.r_at_best) << "\n";
  return out.str();
}

// ---- active labeling ----------------------------------------------------

std::string to_string(LabelPolicy policy) {
  return policy == LabelPolicy::LowestConfidence ? "lowest-confidence" : "random";
}

LabelPolicy label_policy_from_string(const std::string& name) {
  if (name == "lowest-confidence" || name == "confidence") return LabelPolicy::LowestConfidence;
  if (name == "random") return LabelPolicy::Random;
  throw_invalid("unknown labeling policy '" + name + "'");
}

std::vector<ActiveLabelPoint> run_active_labeling(const FeatureSet& fs, const TaskParams& params,
                                                  const std::vector<int>& budget_grid, LabelPolicy policy,
                                                  int n_tasks, std::uint64_t seed, ExecPolicy exec) {
  if (params.setting != Setting::SemiSupervised) throw_invalid("active labeling runs in the semi-supervised setting");
  if (budget_grid.empty()) throw_invalid("active labeling needs a nonempty budget grid");
  if (n_tasks < 1) throw_invalid("n_tasks must be >= 1");
  validate_spec(params.spec);
  const auto counts = query_counts(params.spec);
  const int total_queries = std::accumulate(counts.begin(), counts.end(), 0);
  for (int b : budget_grid) {
    if (b < 0 || b >= total_queries) {
      throw_invalid("budget " + std::to_string(b) + " leaves no query to evaluate (" + std::to_string(total_queries) +
                    " queries)");
    }
  }

  std::vector<std::vector<double>> acc(budget_grid.size(), std::vector<double>(static_cast<std::size_t>(n_tasks)));
  parallel_for(static_cast<std::size_t>(n_tasks), exec, [&](std::size_t t) {
    EpisodeSpec spec = params.spec;
    spec.seed = derive_seed(seed, t);
    const Episode ep = sample_episode(fs, spec);
    const auto support_rows = ep.support_rows();
    const auto query_rows = ep.query_rows();
    std::vector<std::size_t> all = support_rows;
    all.insert(all.end(), query_rows.begin(), query_rows.end());
    const Matrix diffused = diffuse_features(fs.gather(all), params.diffusion);
    const auto ns = static_cast<Eigen::Index>(support_rows.size());
    const auto nq = static_cast<Eigen::Index>(query_rows.size());
    const Matrix support = diffused.topRows(ns);
    const Matrix query = diffused.bottomRows(nq);
    const auto support_labels = ep.support_labels();
    const auto query_labels = ep.query_labels();
    const auto model = train_logreg(support, support_labels, ep.n_way(), params.logreg);

    std::vector<std::size_t> ranking(static_cast<std::size_t>(nq));
    std::iota(ranking.begin(), ranking.end(), 0);
    if (policy == LabelPolicy::LowestConfidence) {
      const auto conf = max_probabilities(predict_proba(model, query));
      std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) { return conf[a] < conf[b]; });
    } else {
      Rng rng = make_rng(derive_seed(spec.seed, 0x6c61626cULL));
      std::shuffle(ranking.begin(), ranking.end(), rng);
    }

    for (std::size_t bi = 0; bi < budget_grid.size(); ++bi) {
      const auto budget = static_cast<std::size_t>(budget_grid[bi]);
      if (budget == 0) {
        acc[bi][t] = accuracy(model, query, query_labels);
        continue;
      }
      Matrix train(ns + static_cast<Eigen::Index>(budget), diffused.cols());
      train.topRows(ns) = support;
      std::vector<int> train_labels = support_labels;
      std::vector<bool> labeled(static_cast<std::size_t>(nq), false);
      for (std::size_t j = 0; j < budget; ++j) {
        train.row(ns + static_cast<Eigen::Index>(j)) = query.row(static_cast<Eigen::Index>(ranking[j]));
        train_labels.push_back(query_labels[ranking[j]]);
        labeled[ranking[j]] = true;
      }
      Matrix rest(nq - static_cast<Eigen::Index>(budget), diffused.cols());
      std::vector<int> rest_labels;
      for (Eigen::Index q = 0, r = 0; q < nq; ++q) {
        if (labeled[static_cast<std::size_t>(q)]) continue;
        rest.row(r++) = query.row(q);
        rest_labels.push_back(query_labels[static_cast<std::size_t>(q)]);
      }
      const auto retrained = train_logreg(train, train_labels, ep.n_way(), params.logreg);
      acc[bi][t] = accuracy(retrained, rest, rest_labels);
    }
  });

  std::vector<ActiveLabelPoint> out;
  for (std::size_t bi = 0; bi < budget_grid.size(); ++bi) {
    out.push_back({budget_grid[bi], mean(acc[bi]), static_cast<std::size_t>(n_tasks)});
  }
  return out;
}

std::string active_label_csv(const std::vector<ActiveLabelPoint>& points, LabelPolicy policy) {
  std::ostringstream out;
  out << "policy,budget,mean_accuracy,n_tasks\n";
  for (const auto& p : points) out << to_string(policy) << ',' << p.budget << ',' << fmt(p.mean_accuracy) << ',' << p.n_tasks << "\n";
  return out.str();
}

}  // namespace fsgauge
