// Serial reference vs OpenMP timings for the parallel kernels.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

#include "fsgauge/confusion.hpp"
#include "fsgauge/harness.hpp"
#include "fsgauge/parallel.hpp"

using namespace fsgauge;

namespace {

double seconds(const std::function<void()>& fn, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void row(const char* name, const std::function<void(ExecPolicy)>& kernel, int reps) {
  const double serial = seconds([&] { kernel(ExecPolicy::Serial); }, reps);
  const double parallel = seconds([&] { kernel(ExecPolicy::Parallel); }, reps);
  std::printf("%-22s %12.4f %12.4f %8.2fx\n", name, serial * 1e3, parallel * 1e3, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  const int scale = quick ? 1 : 4;
  std::printf("threads: %d\n", max_jobs());
  std::printf("%-22s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");

  SynthParams sp;
  sp.num_classes = 20;
  sp.per_class = 100 * scale;
  sp.dim = 64;
  sp.separation = 0.3;
  sp.separation_max = 1.5;
  sp.spread = 1.0;
  sp.seed = 1;
  const auto fs = synth_generate(sp);
  const Matrix rows = fs.features.topRows(200 * scale).cast<double>();

  row("cosine_matrix", [&](ExecPolicy p) { (void)cosine_matrix(rows, p); }, 5);
  const Matrix cos = cosine_matrix(rows);
  row("knn_sparsify", [&](ExecPolicy p) { (void)knn_sparsify(cos, 15, p); }, 5);
  row("diffuse_features", [&](ExecPolicy p) { (void)diffuse_features(rows, {}, p); }, 3);
  row("n_means", [&](ExecPolicy p) { (void)n_means(rows, 5, 3, {}, p); }, 3);

  TaskParams semi;
  semi.setting = Setting::SemiSupervised;
  semi.spec.test_per_class = 0;
  row("run_tasks (semi)", [&](ExecPolicy p) { (void)run_tasks(fs, semi, 20 * scale, 7, p); }, 1);

  OverlapParams op;
  op.runs = 1;
  const std::vector<Label> classes{0, 1, 2, 3, 4, 5};
  row("overlap_matrix", [&](ExecPolicy p) { (void)overlap_matrix(fs, classes, op, p); }, 1);
  return 0;
}
