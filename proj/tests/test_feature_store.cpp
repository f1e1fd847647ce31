#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fsgauge/errors.hpp"
#include "fsgauge/feature_store.hpp"
#include "fsgauge/learners.hpp"

using namespace fsgauge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fsgauge_tests";
  fs::create_directories(dir);
  return dir / name;
}

FeatureSet small_set() {
  FeatureSet s;
  s.features.resize(3, 2);
  s.features << 0.6f, 0.8f, 1.0f, 0.0f, 0.0f, 1.0f;
  s.labels = {0, 0, 1};
  s.class_names = {"a", "b"};
  s.normalized = true;
  s.dataset_name = "toy";
  s.split_name = "train";
  return s;
}

std::vector<int> as_int(const std::vector<Label>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("binary round trip keeps rows, labels and classes" * doctest::test_suite("analytic")) {
  const auto path = scratch("small.fsf");
  save_feature_set(small_set(), path);
  const auto back = load_feature_set(path);
  CHECK(back.num_rows() == 3);
  CHECK(back.num_classes() == 2);
  CHECK(back.labels == std::vector<Label>{0, 0, 1});
  CHECK(back.features == small_set().features);
  CHECK(fs::exists(manifest_path_for(path)));
}

TEST_CASE("random valid set survives save and load" * doctest::test_suite("analytic")) {
  auto s = synth_generate(4, 7, 5, 1.0, 0.2, 3);
  const auto path = scratch("random.fsf");
  save_feature_set(s, path);
  const auto back = load_feature_set(path);
  CHECK(back.features == s.features);
  CHECK(back.labels == s.labels);
  CHECK(back.class_names == s.class_names);
}

TEST_CASE("NaN entry is rejected" * doctest::test_suite("analytic")) {
  auto s = small_set();
  s.normalized = false;
  s.features(1, 1) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_WITH_AS(validate(s), doctest::Contains("non-finite entry"), DataError);
  // Also through the file path: write raw bytes without validation.
  const auto path = scratch("nan.fsf");
  {
    std::ofstream out(path, std::ios::binary);
    out.write("FSF1", 4);
    const std::uint32_t rows = 3, dim = 2;
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(s.features.data()), 6 * 4);
    for (Label l : s.labels) out.write(reinterpret_cast<const char*>(&l), 4);
  }
  fs::remove(manifest_path_for(path));
  CHECK_THROWS_WITH(load_feature_set(path), doctest::Contains("non-finite entry"));
}

TEST_CASE("CSV with header class,f0,f1" * doctest::test_suite("analytic")) {
  const auto path = scratch("two.csv");
  {
    std::ofstream out(path);
    out << "class,f0,f1\n0,0.6,0.8\n1,1,0\n";
  }
  const auto s = load_feature_set(path);
  CHECK(s.num_rows() == 2);
  CHECK(s.features(0, 1) == doctest::Approx(0.8));
}

TEST_CASE("saving to a read-only location fails" * doctest::test_suite("analytic")) {
  CHECK_THROWS_AS(save_feature_set(small_set(), "/proc/fsgauge_nope/x.fsf"), Error);
}

TEST_CASE("empty set" * doctest::test_suite("analytic")) {
  FeatureSet s;
  s.features.resize(0, 3);
  CHECK_THROWS_WITH(validate(s), doctest::Contains("empty set"));
}

TEST_CASE("l2 normalization" * doctest::test_suite("analytic")) {
  FeatureSet s;
  s.features.resize(2, 2);
  s.features << 3.0f, 4.0f, 1.0f, 0.0f;
  s.labels = {0, 1};
  s.class_names = {"a", "b"};
  const auto n = l2_normalize(s);
  CHECK(n.features(0, 0) == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(n.features(0, 1) == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(n.features(1, 0) == 1.0f);
  CHECK(n.features(1, 1) == 0.0f);
  s.features.row(1).setZero();
  CHECK_THROWS_AS(l2_normalize(s), Error);
}

TEST_CASE("synthetic generation is deterministic" * doctest::test_suite("analytic")) {
  const auto a = synth_generate(5, 20, 8, 1.0, 0.3, 42);
  const auto b = synth_generate(5, 20, 8, 1.0, 0.3, 42);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
}

TEST_CASE("synthetic generation" * doctest::test_suite("properties")) {
  SUBCASE("well separated blobs are recovered exactly") {
    const auto s = synth_generate(4, 50, 32, 4.0, 0.02, 1);
    const Matrix x = s.features.cast<double>();
    const auto c = n_means(x, 4, 9);
    CHECK(adjusted_rand_index(c.assignments, as_int(s.labels)) == doctest::Approx(1.0));
  }
  SUBCASE("coincident centroids cluster at chance") {
    const auto s = synth_generate(4, 50, 32, 0.0, 0.5, 1);
    const auto c = n_means(s.features.cast<double>(), 4, 9);
    CHECK(std::abs(adjusted_rand_index(c.assignments, as_int(s.labels))) <= 0.1);
  }
  SUBCASE("scale gives an unnormalized set of that row norm") {
    SynthParams p;
    p.num_classes = 3;
    p.per_class = 4;
    p.dim = 6;
    p.scale = 5.0;
    const auto s = synth_generate(p);
    CHECK_FALSE(s.normalized);
    CHECK(s.features.row(0).norm() == doctest::Approx(5.0).epsilon(1e-6));
  }
}

TEST_CASE("subset keeps the chosen classes in order" * doctest::test_suite("analytic")) {
  const auto s = synth_generate(5, 3, 4, 1.0, 0.2, 2);
  const auto sub = subset_classes(s, {3, 1});
  CHECK(sub.num_classes() == 2);
  CHECK(sub.class_names == std::vector<std::string>{"synth_3", "synth_1"});
  CHECK(sub.num_rows() == 6);
}
