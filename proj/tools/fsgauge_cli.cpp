#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fsgauge/confusion.hpp"
#include "fsgauge/episode.hpp"
#include "fsgauge/errors.hpp"
#include "fsgauge/feature_store.hpp"
#include "fsgauge/harness.hpp"
#include "fsgauge/parallel.hpp"
#include "fsgauge/report.hpp"
#include "fsgauge/rng.hpp"

namespace fsfs = std::filesystem;
using namespace fsgauge;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitFailure = 70;

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = ".";
};

struct TaskOptions {
  std::string features;
  std::string setting = "supervised";
  int ways = 5;
  int shots = 5;
  int queries = 15;
  int test = -1;
  int tasks = 1000;
};

void add_task_options(CLI::App* sub, TaskOptions& t, bool with_setting = true) {
  sub->add_option("--features", t.features, "Input feature set (.fsf or .csv)")->required()->check(CLI::ExistingFile);
  if (with_setting) {
    sub->add_option("--setting", t.setting, "supervised | semi-supervised | unsupervised")
        ->check(CLI::IsMember({"supervised", "semi-supervised", "semi", "unsupervised"}))
        ->capture_default_str();
  }
  sub->add_option("--ways", t.ways, "N, classes per task")->capture_default_str();
  sub->add_option("--shots", t.shots, "K, labeled samples per class")->capture_default_str();
  sub->add_option("--queries", t.queries, "Q, unlabeled samples per class")->capture_default_str();
  sub->add_option("--test", t.test, "Test rows per class (supervised; -1 = 50, else 0)")->capture_default_str();
  sub->add_option("--tasks", t.tasks, "Number of random tasks")->capture_default_str();
}

TaskParams task_params(const TaskOptions& t) {
  TaskParams p;
  p.setting = setting_from_string(t.setting);
  p.spec.n_way = t.ways;
  p.spec.k_shot = p.setting == Setting::Unsupervised ? 0 : t.shots;
  p.spec.q_query = t.queries;
  p.spec.test_per_class = t.test >= 0 ? t.test : (p.setting == Setting::Supervised ? 50 : 0);
  return p;
}

ExecPolicy policy_for(const Globals& g) { return g.jobs > 1 ? ExecPolicy::Parallel : ExecPolicy::Serial; }

fsfs::path out_file(const Globals& g, const std::string& name) { return fsfs::path(g.out) / name; }

std::vector<GridPoint> parse_grid(const std::vector<std::string>& items) {
  std::vector<GridPoint> grid;
  for (const auto& item : items) {
    GridPoint p;
    char c1 = 0, c2 = 0;
    std::istringstream in(item);
    if (!(in >> p.n_way >> c1 >> p.k_shot >> c2 >> p.q_query) || c1 != ':' || c2 != ':' || !in.eof()) {
      throw_invalid("grid point '" + item + "' is not N:K:Q");
    }
    grid.push_back(p);
  }
  return grid;
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_scatters(const Globals& g, const std::vector<TaskResult>& tasks, Setting setting) {
  const std::string perf_label = setting == Setting::Unsupervised ? "ARI" : "accuracy";
  for (GaugeId id : gauges_for(setting)) {
    ScatterSeries s;
    for (const auto& t : tasks) {
      if (t.dropped) continue;
      const auto v = gauge_value(t, id);
      if (!v) continue;
      s.x.push_back(*v);
      s.y.push_back(t.report.realized_performance);
    }
    if (s.x.empty()) continue;
    write_text_file(out_file(g, "scatter_" + to_string(id) + ".svg"), scatter_svg(s, to_string(id), perf_label));
  }
}

nlohmann::ordered_json option_json(const CLI::Option* opt) {
  nlohmann::ordered_json o;
  o["name"] = opt->get_name();
  o["description"] = opt->get_description();
  o["required"] = opt->get_required();
  o["flag"] = opt->get_expected_max() == 0;
  if (!opt->get_default_str().empty()) o["default"] = opt->get_default_str();
  return o;
}

nlohmann::ordered_json app_json(const CLI::App& app) {
  nlohmann::ordered_json j;
  j["name"] = app.get_name();
  j["description"] = app.get_description();
  j["options"] = nlohmann::ordered_json::array();
  for (const auto* opt : app.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "-h,--help") continue;
    j["options"].push_back(option_json(opt));
  }
  const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
  if (!subs.empty()) {
    j["subcommands"] = nlohmann::ordered_json::array();
    for (const auto* sub : subs) j["subcommands"].push_back(app_json(*sub));
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot task difficulty gauges", "fsgauge"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Globals g;
  app.set_config("--config", "", "TOML config file; command-line flags override it");
  app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("-o,--out", g.out, "Output directory")->capture_default_str();
  app.set_version_flag("--version", kVersion);
  bool help_json = false;
  app.add_flag("--help-json", help_json, "Print the command-line interface as JSON");

  // synth
  SynthParams synth;
  std::string synth_file = "features.fsf";
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic feature set");
  s_synth->add_option("--classes", synth.num_classes)->capture_default_str();
  s_synth->add_option("--per-class", synth.per_class)->capture_default_str();
  s_synth->add_option("--dim", synth.dim)->capture_default_str();
  s_synth->add_option("--separation", synth.separation)->capture_default_str();
  s_synth->add_option("--separation-max", synth.separation_max, "Graded separations up to this value")
      ->capture_default_str();
  s_synth->add_option("--spread", synth.spread)->capture_default_str();
  s_synth->add_option("--scale", synth.scale, "Row norm (1 = normalized)")->capture_default_str();
  s_synth->add_option("--file", synth_file, "Output file name (.fsf or .csv)")->capture_default_str();

  // sample
  TaskOptions sample_opt;
  auto* s_sample = app.add_subcommand("sample", "Sample episodes and write their row indices");
  add_task_options(s_sample, sample_opt, false);
  double first_fraction = 0.0;
  s_sample->add_option("--first-fraction", first_fraction, "Query share of the first class (0 = balanced)");

  // gauge
  TaskOptions gauge_opt;
  auto* s_gauge = app.add_subcommand("gauge", "Compute gauges and realized performance per task");
  add_task_options(s_gauge, gauge_opt);

  // correlate
  TaskOptions corr_opt;
  std::vector<std::string> grid_items;
  bool corr_svg = false;
  auto* s_corr = app.add_subcommand("correlate", "Correlation study of gauges against performance");
  add_task_options(s_corr, corr_opt);
  s_corr->add_option("--grid", grid_items, "Grid points N:K:Q (default: the --ways/--shots/--queries point)");
  s_corr->add_flag("--svg", corr_svg, "Write gauge-vs-performance scatter plots");

  // variance
  TaskOptions var_opt;
  int outer = 100, inner = 100, pool = 0;
  auto* s_var = app.add_subcommand("variance", "Variance attribution: random, fixed-class, fixed-shot");
  add_task_options(s_var, var_opt, false);
  s_var->add_option("--outer", outer)->capture_default_str();
  s_var->add_option("--inner", inner)->capture_default_str();
  s_var->add_option("--pool", pool, "Classes with pre-assigned shots (0 = all)")->capture_default_str();

  // confusion
  std::string conf_features, conf_novel;
  OverlapParams overlap;
  std::size_t max_edges = 0;
  auto* s_conf = app.add_subcommand("confusion", "Class overlap scores and confusion graphs");
  s_conf->add_option("--features", conf_features, "Feature set (base classes)")->required()->check(CLI::ExistingFile);
  s_conf->add_option("--novel", conf_novel, "Novel feature set for a base/novel bipartite graph")
      ->check(CLI::ExistingFile);
  s_conf->add_option("--k", overlap.k, "Edges per vertex of the overlap graph")->capture_default_str();
  s_conf->add_option("--runs", overlap.runs, "Louvain runs averaged per pair")->capture_default_str();
  s_conf->add_option("--max-edges", max_edges, "Edges kept in exports (0 = all, bipartite: 2 x novel)");

  // roc
  TaskOptions roc_opt;
  std::string roc_holdout, roc_gauge = "lr_conf_mmp";
  double roc_cut = 0.8;
  bool roc_svg = false;
  auto* s_roc = app.add_subcommand("roc", "Threshold a gauge on calibration tasks, score it on holdout tasks");
  add_task_options(s_roc, roc_opt);
  s_roc->add_option("--holdout", roc_holdout, "Holdout feature set (default: odd classes of --features)")
      ->check(CLI::ExistingFile);
  s_roc->add_option("--gauge", roc_gauge)->capture_default_str();
  s_roc->add_option("--cut", roc_cut, "Accuracy below which a task is hard")->capture_default_str();
  s_roc->add_flag("--svg", roc_svg, "Write the calibration ROC curve");

  // predict-accuracy
  TaskOptions pred_opt;
  auto* s_pred = app.add_subcommand("predict-accuracy", "Mean max probability as predicted accuracy");
  add_task_options(s_pred, pred_opt, false);

  // sweep-eigen
  TaskOptions eig_opt;
  std::vector<int> way_grid{2, 3, 4, 5, 6, 7, 8, 9, 10};
  auto* s_eig = app.add_subcommand("sweep-eigen", "Correlation of every Laplacian eigenvalue index");
  add_task_options(s_eig, eig_opt);
  s_eig->add_option("--way-grid", way_grid)->capture_default_str();

  // sweep-knn
  TaskOptions knn_opt;
  std::vector<int> k_grid{1, 2, 5, 10, 15, 20, 30};
  auto* s_knn = app.add_subcommand("sweep-knn", "Gauge correlations across k-NN neighbour counts");
  add_task_options(s_knn, knn_opt);
  s_knn->add_option("--k-grid", k_grid)->capture_default_str();

  // active-label
  TaskOptions act_opt;
  std::vector<int> budgets{0, 5, 10, 20, 40};
  std::string act_policy = "lowest-confidence";
  auto* s_act = app.add_subcommand("active-label", "Label queries by confidence or at random, retrain, rescore");
  add_task_options(s_act, act_opt, false);
  s_act->add_option("--budgets", budgets)->capture_default_str();
  s_act->add_option("--policy", act_policy, "lowest-confidence | random")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    app.exit(e);
    return kExitData;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (help_json) {
    std::cout << app_json(app).dump(2) << "\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    set_max_jobs(g.jobs);
    const ExecPolicy policy = policy_for(g);
    fsfs::create_directories(g.out);
    auto* sub = app.get_subcommands().front();
    const std::string cmd = sub->get_name();

    if (cmd == "synth") {
      synth.seed = g.seed;
      const auto fs = synth_generate(synth);
      save_feature_set(fs, out_file(g, synth_file));
      std::printf("synth: %zu rows, %zu classes, dim %zu -> %s\n", fs.num_rows(), fs.num_classes(), fs.dim(),
                  out_file(g, synth_file).string().c_str());
    } else if (cmd == "sample") {
      const auto fs = load_feature_set(sample_opt.features);
      EpisodeSpec spec;
      spec.n_way = sample_opt.ways;
      spec.k_shot = sample_opt.shots;
      spec.q_query = sample_opt.queries;
      spec.test_per_class = sample_opt.test >= 0 ? sample_opt.test : 0;
      if (first_fraction > 0.0) spec.first_class_fraction = first_fraction;
      std::string text;
      for (int t = 0; t < sample_opt.tasks; ++t) {
        spec.seed = derive_seed(g.seed, static_cast<std::uint64_t>(t));
        text += episode_to_json(sample_episode(fs, spec)) + "\n";
      }
      write_text_file(out_file(g, "episodes.jsonl"), text);
      std::printf("sample: %d episodes -> %s\n", sample_opt.tasks, out_file(g, "episodes.jsonl").string().c_str());
    } else if (cmd == "gauge") {
      const auto fs = load_feature_set(gauge_opt.features);
      const auto tasks = run_tasks(fs, task_params(gauge_opt), gauge_opt.tasks, g.seed, policy);
      write_text_file(out_file(g, "tasks.csv"), tasks_csv(tasks));
      std::size_t dropped = 0;
      for (const auto& t : tasks) dropped += t.dropped;
      std::printf("gauge: %zu tasks, %zu dropped -> %s\n", tasks.size(), dropped,
                  out_file(g, "tasks.csv").string().c_str());
    } else if (cmd == "correlate") {
      const auto fs = load_feature_set(corr_opt.features);
      const auto params = task_params(corr_opt);
      auto grid = parse_grid(grid_items);
      if (grid.empty()) grid.push_back({corr_opt.ways, params.spec.k_shot, corr_opt.queries});
      const auto study = run_correlation_study(fs, params, grid, corr_opt.tasks, g.seed, policy);
      write_text_file(out_file(g, "correlation.csv"), correlation_csv(study));
      write_text_file(out_file(g, "tasks.csv"), tasks_csv(study.tasks));
      if (corr_svg) write_scatters(g, study.tasks, params.setting);
      std::printf("correlate: %zu grid points x %d tasks -> %s\n", grid.size(), corr_opt.tasks,
                  out_file(g, "correlation.csv").string().c_str());
    } else if (cmd == "variance") {
      const auto fs = load_feature_set(var_opt.features);
      EpisodeSpec spec;
      spec.n_way = var_opt.ways;
      spec.k_shot = var_opt.shots;
      spec.q_query = var_opt.queries;
      spec.test_per_class = var_opt.test >= 0 ? var_opt.test : 50;
      const auto v = run_variance_attribution(fs, spec, outer, inner, g.seed, pool, {}, policy);
      std::ostringstream csv;
      csv << "protocol,mean_std,std_of_std,outer,inner\n";
      csv << "random," << fmt9(v.std_random) << ",," << 1 << ',' << v.inner << "\n";
      csv << "fixed_class," << fmt9(v.fixed_class_mean_std) << ',' << fmt9(v.fixed_class_std_of_std) << ','
          << v.outer << ',' << v.inner << "\n";
      csv << "fixed_shot," << fmt9(v.fixed_shot_mean_std) << ',' << fmt9(v.fixed_shot_std_of_std) << ',' << v.outer
          << ',' << v.inner << "\n";
      write_text_file(out_file(g, "variance.csv"), csv.str());
      std::printf("variance: random %.4f, fixed-class %.4f, fixed-shot %.4f\n", v.std_random, v.fixed_class_mean_std,
                  v.fixed_shot_mean_std);
    } else if (cmd == "confusion") {
      const auto base = load_feature_set(conf_features);
      overlap.seed = g.seed;
      if (conf_novel.empty()) {
        std::vector<Label> all(base.num_classes());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Label>(i);
        const auto m = overlap_matrix(base, all, overlap, policy);
        write_text_file(out_file(g, "overlap.txt"), overlap_to_text(m, max_edges));
        write_text_file(out_file(g, "overlap.dot"), overlap_to_dot(m, max_edges));
        std::printf("confusion: %zu classes -> %s\n", all.size(), out_file(g, "overlap.txt").string().c_str());
      } else {
        const auto novel = load_feature_set(conf_novel);
        const auto b = bipartite_confusion(base, novel, overlap, max_edges, policy);
        write_text_file(out_file(g, "bipartite.txt"), bipartite_to_text(b));
        write_text_file(out_file(g, "bipartite.dot"), bipartite_to_dot(b));
        std::printf("confusion: %zu base x %zu novel, %zu edges -> %s\n", b.base_names.size(), b.novel_names.size(),
                    b.edges.size(), out_file(g, "bipartite.txt").string().c_str());
      }
    } else if (cmd == "roc") {
      const auto fs = load_feature_set(roc_opt.features);
      FeatureSet calibrate, holdout;
      if (roc_holdout.empty()) {
        std::vector<Label> even, odd;
        for (Label c = 0; c < fs.num_classes(); ++c) (c % 2 ? odd : even).push_back(c);
        calibrate = subset_classes(fs, even);
        holdout = subset_classes(fs, odd);
      } else {
        calibrate = fs;
        holdout = load_feature_set(roc_holdout);
      }
      const auto r = run_roc_prediction(calibrate, holdout, gauge_from_string(roc_gauge), task_params(roc_opt),
                                        roc_opt.tasks, g.seed, roc_cut, policy);
      write_text_file(out_file(g, "roc.csv"), roc_csv(r));
      write_text_file(out_file(g, "confusion.txt"), confusion_text(r));
      if (roc_svg) {
        ScatterSeries s;
        for (const auto& p : r.curve) {
          s.x.push_back(p.one_minus_specificity);
          s.y.push_back(p.sensibility);
        }
        write_text_file(out_file(g, "roc.svg"), line_svg(s, "1 - specificity", "sensibility", roc_gauge));
      }
      std::printf("roc: %s area %.4f, holdout hard %.2f%% / easy %.2f%% correct\n", roc_gauge.c_str(), r.area,
                  r.confusion[0][0], r.confusion[1][1]);
    } else if (cmd == "predict-accuracy") {
      const auto fs = load_feature_set(pred_opt.features);
      TaskOptions opt = pred_opt;
      opt.setting = "semi-supervised";
      const auto a = run_accuracy_prediction(fs, task_params(opt), pred_opt.tasks, g.seed, policy);
      std::ostringstream csv;
      csv << "task,predicted,realized\n";
      for (std::size_t i = 0; i < a.predicted.size(); ++i)
        csv << i << ',' << fmt9(a.predicted[i]) << ',' << fmt9(a.realized[i]) << "\n";
      write_text_file(out_file(g, "accuracy_prediction.csv"), csv.str());
      write_text_file(out_file(g, "accuracy_summary.csv"),
                      "mae,mad_baseline,n_tasks\n" + fmt9(a.mae) + "," + fmt9(a.mad_baseline) + "," +
                          std::to_string(a.predicted.size()) + "\n");
      std::printf("predict-accuracy: MAE %.4f vs MAD %.4f over %zu tasks\n", a.mae, a.mad_baseline,
                  a.predicted.size());
    } else if (cmd == "sweep-eigen") {
      const auto fs = load_feature_set(eig_opt.features);
      const auto pts = run_eigenindex_sweep(fs, task_params(eig_opt), way_grid, eig_opt.tasks, g.seed, policy);
      write_text_file(out_file(g, "eigenindex.csv"), eigenindex_csv(pts));
      std::printf("sweep-eigen: %zu way values -> %s\n", pts.size(), out_file(g, "eigenindex.csv").string().c_str());
    } else if (cmd == "sweep-knn") {
      const auto fs = load_feature_set(knn_opt.features);
      const auto study = run_knn_sweep(fs, task_params(knn_opt), k_grid, knn_opt.tasks, g.seed, policy);
      write_text_file(out_file(g, "knn_sweep.csv"), correlation_csv(study));
      std::printf("sweep-knn: %zu k values -> %s\n", k_grid.size(), out_file(g, "knn_sweep.csv").string().c_str());
    } else if (cmd == "active-label") {
      const auto fs = load_feature_set(act_opt.features);
      TaskOptions opt = act_opt;
      opt.setting = "semi-supervised";
      const auto lp = label_policy_from_string(act_policy);
      const auto pts = run_active_labeling(fs, task_params(opt), budgets, lp, act_opt.tasks, g.seed, policy);
      write_text_file(out_file(g, "active_label.csv"), active_label_csv(pts, lp));
      std::printf("active-label: %zu budgets -> %s\n", pts.size(), out_file(g, "active_label.csv").string().c_str());
    }
  } catch (const NumericalError& e) {
    std::cerr << "fsgauge: " << e.what() << "\n";
    return kExitFailure;
  } catch (const DataError& e) {
    std::cerr << "fsgauge: " << e.what() << "\n";
    return kExitData;
  } catch (const InvalidArgument& e) {
    std::cerr << "fsgauge: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "fsgauge: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
