#include <cmath>
#include <random>

#include "doctest.h"
#include "fsgauge/errors.hpp"
#include "fsgauge/gauges.hpp"
#include "fsgauge/rng.hpp"
#include "oracles.hpp"

using namespace fsgauge;

TEST_CASE("LR training loss" * doctest::test_suite("analytic")) {
  Matrix confident(2, 2);
  confident << 1, 0, 0, 1;
  CHECK(lr_training_loss(confident, {0, 1}) == 0.0);
  const Matrix uniform = Matrix::Constant(3, 5, 0.2);
  CHECK(std::abs(lr_training_loss(uniform, {0, 1, 2}) - std::log(5.0)) < 1e-12);
  Matrix p(2, 2);
  p << 0.5, 0.5, 0.75, 0.25;
  CHECK(std::abs(lr_training_loss(p, {0, 1}) - 1.0397207708399179) < 1e-9);
}

TEST_CASE("similarity metric" * doctest::test_suite("analytic")) {
  SUBCASE("identical support vectors") {
    const Matrix f = Matrix::Ones(6, 3);
    CHECK(std::abs(similarity_metric(f, {0, 0, 1, 1, 2, 2})) < 1e-12);
  }
  SUBCASE("identical within class, orthogonal across") {
    Matrix f = Matrix::Zero(6, 3);
    for (int i = 0; i < 6; ++i) f(i, i / 2) = 1.0;
    CHECK(std::abs(similarity_metric(f, {0, 0, 1, 1, 2, 2}) - 1.0) < 1e-12);
  }
  SUBCASE("one shot: intra is 1") {
    Matrix f(3, 2);
    f << 1, 0, 1, 1, 0, 1;
    const double c = 1.0 / std::sqrt(2.0);
    // max inter per class: c, c, c
    CHECK(std::abs(similarity_metric(f, {0, 1, 2}) - (1.0 - c)) < 1e-12);
  }
}

TEST_CASE("DB score" * doctest::test_suite("analytic")) {
  Matrix x(4, 2);
  x << 0, 0, 0, 2, 4, 0, 4, 2;
  CHECK(std::abs(db_score(x, {0, 0, 1, 1}) - 0.5) < 1e-12);
  Matrix singletons(3, 2);
  singletons << 0, 0, 1, 0, 0, 1;
  CHECK(db_score(singletons, {0, 1, 2}) == 0.0);
  Matrix three(12, 2);
  for (int copy = 0; copy < 3; ++copy) three.middleRows(copy * 4, 4) = x.rowwise() + Eigen::RowVector2d(0, 100.0 * copy);
  std::vector<int> assign;
  for (int copy = 0; copy < 3; ++copy)
    for (int l : {0, 0, 1, 1}) assign.push_back(2 * copy + l);
  CHECK(std::abs(db_score(three, assign) - oracle::direct_db(three, assign)) < 1e-12);
  CHECK(std::abs(db_score(three, assign) - 0.5) < 1e-12);
  Matrix same(4, 2);
  same << 0, 0, 0, 0, 0, 0, 0, 0;
  CHECK_THROWS_AS(db_score(same, {0, 0, 1, 1}), NumericalError);
}

TEST_CASE("DB score matches the direct definition" * doctest::test_suite("oracle")) {
  Rng rng = make_rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 6 + trial % 20, k = 2 + trial % 4;
    Matrix x(rows, 3);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < 3; ++j) x(i, j) = n(rng);
    std::vector<int> assign(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) assign[static_cast<std::size_t>(i)] = i < k ? i : static_cast<int>(rng() % k);
    CHECK(std::abs(db_score(x, assign) - oracle::direct_db(x, assign)) < 1e-9);
  }
}

TEST_CASE("N-th eigenvalue gauge" * doctest::test_suite("analytic")) {
  SUBCASE("N components") {
    Matrix f = Matrix::Zero(9, 3);
    for (int i = 0; i < 9; ++i) f(i, i / 3) = 1.0 + 0.01 * i;
    CHECK(std::abs(nth_eigenvalue_gauge(f, 3, 2)) < 1e-8);
  }
  SUBCASE("connected graph") {
    const Matrix f = Matrix::Ones(5, 2) + 0.01 * Matrix::Identity(5, 2);
    CHECK(nth_eigenvalue_gauge(f, 2, 4) > 0.0);
  }
  SUBCASE("complete graph of n vertices") {
    // Five equal rows: every cosine is 1, so the k-NN graph is complete.
    const Matrix f = Matrix::Ones(5, 3);
    CHECK(std::abs(nth_eigenvalue_gauge(f, 5, 4) - 5.0) < 1e-9);
  }
}

TEST_CASE("LR confidence" * doctest::test_suite("analytic")) {
  Matrix sure(2, 3);
  sure << 1, 0, 0, 0, 0, 1;
  auto c = lr_confidence(sure);
  CHECK(c.log_form == 0.0);
  CHECK(c.mean_max_prob == 1.0);
  c = lr_confidence(Matrix::Constant(4, 5, 0.2));
  CHECK(std::abs(c.log_form - std::log(5.0)) < 1e-12);
  CHECK(std::abs(c.mean_max_prob - 0.2) < 1e-12);
  Matrix two(2, 2);
  two << 0.5, 0.5, 1.0, 0.0;
  c = lr_confidence(two);
  CHECK(std::abs(c.log_form - 0.34657359027997264) < 1e-9);
  CHECK(std::abs(c.mean_max_prob - 0.75) < 1e-12);
}

TEST_CASE("gauge csv rows" * doctest::test_suite("analytic")) {
  GaugeReport r;
  r.episode_id = 3;
  r.setting = Setting::SemiSupervised;
  r.n_way = 5;
  r.k_shot = 1;
  r.q_query = 15;
  r.lr_training_loss = 0.5;
  r.realized_performance = 0.8;
  CHECK(gauge_csv_row(r) == "3,semi-supervised,5,1,15,0.5,,,,,,0.8");
  CHECK(setting_from_string("semi") == Setting::SemiSupervised);
  CHECK_THROWS_AS(setting_from_string("bogus"), InvalidArgument);
}
