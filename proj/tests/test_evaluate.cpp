#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "slowvar/binning.hpp"
#include "slowvar/conditional.hpp"
#include "slowvar/errors.hpp"
#include "slowvar/evaluate.hpp"
#include "slowvar/network.hpp"

using namespace slowvar;

TEST_CASE("jaccard matrix by hand") {
  Partition t, e;
  t.bins = {{0, 1, 2}, {3, 4}};
  e.bins = {{0, 1}, {2, 3, 4}};
  const auto J = jaccard_matrix(t, e, 5);
  CHECK(J(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(J(0, 1) == doctest::Approx(1.0 / 5.0));
  CHECK(J(1, 0) == 0.0);
  CHECK(J(1, 1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("maximum-weight matching") {
  Eigen::MatrixXd J(2, 2);
  J << 0.9, 0.8, 0.8, 0.1;
  const auto m = max_matching(J);
  CHECK(m.total == doctest::Approx(1.6));
  CHECK(m.row_to_col[0] == 1);
  CHECK(m.row_to_col[1] == 0);
}

TEST_CASE("matching agrees with exhaustive search") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 3 + trial % 4, c = 6 - trial % 3;
    Eigen::MatrixXd J(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) J(i, j) = u(gen) < 0.3 ? 0.0 : u(gen);
    // Brute force over injective maps from the smaller side.
    const int n = std::max(r, c);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
      double s = 0.0;
      for (int i = 0; i < r; ++i)
        if (perm[std::size_t(i)] < c) s += J(i, perm[std::size_t(i)]);
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto m = max_matching(J);
    CHECK(m.total == doctest::Approx(best).epsilon(1e-12));
    for (int i = 0; i < r; ++i)
      if (m.row_to_col[std::size_t(i)] >= 0) CHECK(m.col_to_row[std::size_t(m.row_to_col[std::size_t(i)])] == i);
  }
}

TEST_CASE("ordering correlation and aligned errors") {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, 3);
  J(0, 2) = J(1, 1) = J(2, 0) = 1.0;
  const auto m = max_matching(J);
  CHECK(ordering_correlation(m, J, std::vector<double>{1, 2, 3}) == doctest::Approx(-1.0));
  CHECK(matched_jaccard_mean(m, J) == 1.0);
  const std::vector<double> est{0.5, 0.3, 0.2};
  const std::vector<double> truth{0.2, 0.3, 0.5};
  CHECK(aligned_l1_error(est, truth, m, J) == doctest::Approx(0.0).scale(1.0));
  CHECK(l1_error(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.25, 0.25}) == doctest::Approx(0.5));
}

TEST_CASE("CS-I ground truth") {
  const auto m = builtin_cs1();
  const auto gt = ground_truth_cs1(m);
  CHECK(std::accumulate(gt.joint.begin(), gt.joint.end(), 0.0) == doctest::Approx(1.0));
  CHECK(std::accumulate(gt.marginal.begin(), gt.marginal.end(), 0.0) == doctest::Approx(1.0));
  CHECK(gt.levels.size() == 201u);
  // The Poisson marginal and the lattice-restricted joint differ only by the
  // tail mass below the domain.
  double gap = 0.0;
  for (std::size_t q = 0; q < gt.levels.size(); ++q) {
    double s = 0.0;
    for (std::size_t i : gt.level_sets.bins[q]) s += gt.joint[i];
    gap = std::max(gap, std::abs(s - gt.marginal[q]));
  }
  CHECK(gap < 1e-6);
  // The mode of 2s ~ Poisson(200) is near s = 100.
  const auto arg = std::max_element(gt.marginal.begin(), gt.marginal.end()) - gt.marginal.begin();
  CHECK(std::abs(gt.levels[std::size_t(arg)] - 100.0) <= 0.5);
}

TEST_CASE("full CME stationary solve on a small box matches a dense null space") {
  const auto m = builtin_cs2();
  const LatticeDomain d({1, 1}, {12, 9});
  const auto gt = full_cme_stationary(m.network, d, std::vector<double>{1.0, 2.0});
  const Eigen::MatrixXd Q = Eigen::MatrixXd(cme_generator(m.network, d));
  for (Eigen::Index i = 0; i < Q.rows(); ++i) CHECK(std::abs(Q.row(i).sum()) < 1e-9 * Q.row(i).cwiseAbs().sum());
  const auto ref = dense_stationary(Q);
  double l1 = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) l1 += std::abs(ref[i] - gt.joint[i]);
  CHECK(l1 < 1e-9);
  double marg = 0.0;
  for (double p : gt.marginal) marg += p;
  CHECK(marg == doctest::Approx(1.0));
}

TEST_CASE("full CME solve reproduces the CS-I Poisson ground truth") {
  const auto m = builtin_cs1();
  const auto full = full_cme_stationary(m.network, m.domain, *m.network.slow_weights());
  const auto gt = ground_truth_cs1(m);
  CHECK(l1_error(full.marginal, gt.marginal) < 1e-4);
}
