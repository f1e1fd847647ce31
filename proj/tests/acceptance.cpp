// Acceptance suite: one PASS/FAIL line per criterion.
#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fsgauge/harness.hpp"

using namespace fsgauge;
namespace fsfs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr double kAnalyticBudgetS = 10.0;
constexpr double kOracleBudgetS = 120.0;
constexpr double kStudyBudgetS = 300.0;
constexpr double kVarianceBudgetS = 300.0;
constexpr double kMinAbsR = 0.5;
constexpr double kMinAbsREigen = 0.3;
constexpr double kPerfectDiagonal = 95.0;
constexpr double kRandomAreaTol = 0.05;
constexpr int kStudyTasks = 1000;
constexpr int kRocTasks = 2000;
constexpr int kPredictionTasks = 2000;
constexpr int kVarianceOuter = 100;
constexpr int kVarianceInner = 100;
constexpr std::uint64_t kSeed = 20240607;

int failures = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %s | %s | %.1fs\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), s);
  std::fflush(stdout);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome run_suite(const char* suite, double budget) {
  doctest::Context ctx;
  ctx.setOption("test-suite", suite);
  ctx.setOption("minimal", true);
  ctx.setOption("no-version", true);
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = ctx.run();
  const double s = elapsed(t0);
  return {rc == 0 && s < budget, std::string(suite) + " suite " + (rc == 0 ? "green" : "red") + ", " +
                                     fmt("%.2fs", s) + " (budget " + fmt("%.0fs", budget) + ")"};
}

// Graded-separation synthetic family shared by the statistical criteria.
FeatureSet graded_family(double scale = 1.0, double spread = 1.0) {
  SynthParams p;
  p.num_classes = 20;
  p.per_class = 600;
  p.dim = 64;
  p.separation = 0.3;
  p.separation_max = 1.5;
  p.spread = spread;
  p.scale = scale;
  p.seed = 7;
  return synth_generate(p);
}

std::optional<double> r_of(const CorrelationPoint& p, GaugeId id) {
  for (const auto& g : p.gauges)
    if (g.gauge == id) return g.pearson_signed;
  return std::nullopt;
}

std::pair<FeatureSet, FeatureSet> split_pools(const FeatureSet& fs) {
  std::vector<Label> even, odd;
  for (Label c = 0; c < fs.num_classes(); ++c) (c % 2 ? odd : even).push_back(c);
  return {subset_classes(fs, even), subset_classes(fs, odd)};
}

std::string slurp(const fsfs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int sh(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

}  // namespace

int main(int argc, char** argv) {
  std::string cli = FSGAUGE_CLI_PATH;
  if (argc > 1) cli = argv[1];

  report("analytic unit suite", [] { return run_suite("analytic", kAnalyticBudgetS); });
  report("oracle equivalence", [] { return run_suite("oracle", kOracleBudgetS); });
  report("gradient check", [] { return run_suite("gradient", kOracleBudgetS); });

  report("synthetic correlation study", [] {
    const auto fs = graded_family();
    TaskParams p;
    p.setting = Setting::SemiSupervised;
    p.spec.q_query = 30;
    p.spec.test_per_class = 0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto study = run_correlation_study(fs, p, {{5, 5, 30}}, kStudyTasks, kSeed, ExecPolicy::Serial);
    const double s = elapsed(t0);
    const auto& pt = study.points.front();
    const auto loss = r_of(pt, GaugeId::LrLoss), sim = r_of(pt, GaugeId::Similarity),
               db = r_of(pt, GaugeId::DbScore), mmp = r_of(pt, GaugeId::LrConfMmp),
               egv = r_of(pt, GaugeId::NthEigenvalue);
    const bool ok = loss && sim && db && mmp && egv && *loss <= -kMinAbsR && *sim >= kMinAbsR && *db <= -kMinAbsR &&
                    *mmp >= kMinAbsR && std::abs(*egv) >= kMinAbsREigen && s < kStudyBudgetS;
    std::string d = "r(lr_loss)=" + fmt("%.3f", loss.value_or(NAN)) + " r(similarity)=" + fmt("%.3f", sim.value_or(NAN)) +
                    " r(db)=" + fmt("%.3f", db.value_or(NAN)) + " r(conf_mmp)=" + fmt("%.3f", mmp.value_or(NAN)) +
                    " |r(nth_egv)|=" + fmt("%.3f", std::abs(egv.value_or(NAN))) + " tasks=" +
                    std::to_string(pt.n_tasks - pt.n_dropped) + " serial " + fmt("%.1fs", s);
    return Outcome{ok, d};
  });

  report("variance attribution", [] {
    const auto fs = graded_family();
    EpisodeSpec spec;
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = run_variance_attribution(fs, spec, kVarianceOuter, kVarianceInner, kSeed, 0, {}, ExecPolicy::Parallel);
    const double s = elapsed(t0);
    const bool ok = v.fixed_class_mean_std < v.std_random && v.fixed_shot_mean_std > v.fixed_class_mean_std &&
                    s < kVarianceBudgetS;
    return Outcome{ok, "random=" + fmt("%.4f", v.std_random) + " fixed-class=" + fmt("%.4f", v.fixed_class_mean_std) +
                           " fixed-shot=" + fmt("%.4f", v.fixed_shot_mean_std) + " outer=inner=" +
                           std::to_string(kVarianceOuter)};
  });

  report("ROC protocol", [] {
    const auto [cal, hold] = split_pools(graded_family());
    TaskParams p;
    const auto perfect = run_roc_prediction(cal, hold, GaugeId::OracleError, p, kRocTasks, kSeed, 0.8, ExecPolicy::Parallel);
    const auto random = run_roc_prediction(cal, hold, GaugeId::Random, p, kRocTasks, kSeed, 0.8, ExecPolicy::Parallel);
    const bool ok = perfect.confusion[0][0] >= kPerfectDiagonal && perfect.confusion[1][1] >= kPerfectDiagonal &&
                    std::abs(random.area - 0.5) <= kRandomAreaTol;
    return Outcome{ok, "perfect gauge holdout diagonal " + fmt("%.2f", perfect.confusion[0][0]) + "/" +
                           fmt("%.2f", perfect.confusion[1][1]) + " (hard " + std::to_string(perfect.holdout_hard) +
                           ", easy " + std::to_string(perfect.holdout_easy) + "), random gauge area " +
                           fmt("%.4f", random.area) + " over " + std::to_string(kRocTasks) + " tasks"};
  });

  report("accuracy prediction", [] {
    const auto fs = graded_family(8.0, 1.0);
    TaskParams p;
    p.setting = Setting::SemiSupervised;
    p.spec.q_query = 30;
    p.spec.test_per_class = 0;
    const auto a = run_accuracy_prediction(fs, p, kPredictionTasks, kSeed, ExecPolicy::Parallel);
    return Outcome{a.mae < a.mad_baseline, "MAE=" + fmt("%.4f", a.mae) + " MAD=" + fmt("%.4f", a.mad_baseline) +
                                               " over " + std::to_string(a.predicted.size()) + " tasks"};
  });

  report("CLI reproducibility", [&] {
    const auto root = fsfs::temp_directory_path() / "fsgauge_acceptance";
    fsfs::remove_all(root);
    fsfs::create_directories(root);
    const std::string feats = (root / "feats" / "features.fsf").string();
    if (sh(cli + " --seed 7 -o " + (root / "feats").string() +
           " synth --classes 12 --per-class 120 --dim 32 --separation 0.3 --separation-max 1.5 --spread 1.0") != 0) {
      return Outcome{false, "synth failed"};
    }
    const std::vector<std::string> commands{
        "correlate --features " + feats + " --setting semi-supervised --grid 5:5:15 5:1:15 --tasks 40 --svg",
        "correlate --features " + feats + " --setting unsupervised --tasks 30",
        "gauge --features " + feats + " --tasks 30",
        "variance --features " + feats + " --outer 4 --inner 6 --test 20",
        "roc --features " + feats + " --setting supervised --gauge lr_loss --tasks 60 --cut 0.6",
        "predict-accuracy --features " + feats + " --tasks 30",
        "sweep-eigen --features " + feats + " --setting semi --way-grid 2 3 --tasks 20",
        "sweep-knn --features " + feats + " --setting semi --k-grid 1 5 --tasks 20",
        "active-label --features " + feats + " --budgets 0 10 --tasks 20",
        "confusion --features " + feats + " --runs 2",
        "sample --features " + feats + " --tasks 5"};
    std::size_t files = 0;
    for (std::size_t c = 0; c < commands.size(); ++c) {
      std::vector<std::string> runs;
      for (const auto& [tag, jobs] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 2}, {"d", 4}}) {
        const auto dir = root / ("cmd" + std::to_string(c) + tag);
        if (sh(cli + " --seed 11 --jobs " + std::to_string(jobs) + " -o " + dir.string() + " " + commands[c]) != 0) {
          return Outcome{false, "command failed: " + commands[c]};
        }
        runs.push_back(dir.string());
      }
      for (const auto& entry : fsfs::directory_iterator(runs[0])) {
        const auto name = entry.path().filename();
        const auto ref = slurp(entry.path());
        ++files;
        for (std::size_t r = 1; r < runs.size(); ++r) {
          if (slurp(fsfs::path(runs[r]) / name) != ref) {
            return Outcome{false, "differs: " + commands[c] + " -> " + name.string()};
          }
        }
      }
    }
    return Outcome{true, std::to_string(commands.size()) + " subcommands, " + std::to_string(files) +
                             " output files byte-identical across 2 repeats and --jobs 1/2/4"};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
