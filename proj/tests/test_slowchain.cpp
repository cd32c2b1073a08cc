#include <doctest.h>

#include <cmath>
#include <numeric>

#include "slowvar/binning.hpp"
#include "slowvar/conditional.hpp"
#include "slowvar/errors.hpp"
#include "slowvar/evaluate.hpp"
#include "slowvar/network.hpp"
#include "slowvar/slowchain.hpp"

using namespace slowvar;

TEST_CASE("birth-death product formula") {
  const std::vector<double> up{2, 3, 1, 0};
  const std::vector<double> down{0, 1, 6, 2};
  const auto pi = stationary_distribution(up, down);
  // Hand solution: ratios 2, 0.5, 0.5 give weights 1, 2, 1, 0.5.
  CHECK(pi[0] == doctest::Approx(1 / 4.5));
  CHECK(pi[1] == doctest::Approx(2 / 4.5));
  CHECK(pi[2] == doctest::Approx(1 / 4.5));
  CHECK(pi[3] == doctest::Approx(0.5 / 4.5));
  for (double r : balance_residuals(up, down, pi)) CHECK(r <= 1e-12);

  // Rescaling every rate leaves pi unchanged.
  std::vector<double> up2 = up, down2 = down;
  for (auto& v : up2) v *= 1e7;
  for (auto& v : down2) v *= 1e7;
  const auto pi2 = stationary_distribution(up2, down2);
  double l1 = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) l1 += std::abs(pi[i] - pi2[i]);
  CHECK(l1 <= 1e-12);
}

TEST_CASE("decomposed chains are rejected") {
  const std::vector<double> up{1, 1, 1};
  const std::vector<double> down{0, 0, 1};
  CHECK_THROWS_AS(stationary_distribution(up, down), NumericalError);
}

TEST_CASE("Fokker-Planck density is normalized and peaks where drift vanishes") {
  std::vector<double> up(41), down(41);
  for (int i = 0; i <= 40; ++i) {
    up[std::size_t(i)] = 20.0;
    down[std::size_t(i)] = double(i);
  }
  const auto p = fokker_planck_stationary(up, down);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
  const auto peak = std::max_element(p.begin(), p.end()) - p.begin();
  CHECK(std::abs(peak - 20) <= 1);
}

TEST_CASE("aggregated CS-I rates from the closed-form conditionals") {
  const auto m = builtin_cs1();
  const auto lv = level_sets(m.domain, *m.network.slow_weights());
  std::vector<ConditionalDistribution> conds;
  for (const auto& bin : lv.partition.bins) {
    std::vector<std::size_t> fast{1, 2};
    conds.push_back(fast_subsystem_conditional(m.network, m.domain, bin, fast));
  }
  const auto r = aggregate_rates(m.network, m.domain, lv.partition, conds);
  // Up moves come from R1 alone; down moves from R4 at rate E[x2 | s].
  const std::size_t mid = 100;
  CHECK(lv.values[mid] == 100.0);
  CHECK(r.up[mid] == doctest::Approx(100.0));
  CHECK(r.down[mid] == doctest::Approx(100.0).epsilon(1e-9));
  const auto pi = stationary_distribution(r.up, r.down);
  const auto res = balance_residuals(r.up, r.down, pi);
  for (std::size_t s = 1; s + 1 < res.size(); ++s) CHECK(res[s] <= 1e-10);
  // The fast subsystem alone ignores the pull of R1 and R4 on x1, which
  // shifts every down rate by a fraction of a percent.
  const auto gt = ground_truth_cs1(m);
  CHECK(l1_error(pi, gt.marginal) < 0.05);

  // The projected law of the conditional SSA accounts for it.
  const LabelSlowCoordinate coord(m.domain, lv.partition.labels(m.domain.size()));
  std::vector<ConditionalDistribution> proj;
  for (std::size_t q = 0; q < lv.partition.size(); ++q)
    proj.push_back(projected_conditional(m.network, m.domain, coord, int(q)));
  const auto rp = aggregate_rates(m.network, m.domain, lv.partition, proj);
  CHECK(l1_error(stationary_distribution(rp.up, rp.down), gt.marginal) < 0.005);
}

TEST_CASE("kernel smoothing") {
  const std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> w{0, 0, 0.1, 0.2, 0.4, 0.2, 0.1, 0, 0};
  double mean = 0, var = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += w[i] * x[i];
  for (std::size_t i = 0; i < x.size(); ++i) var += w[i] * (x[i] - mean) * (x[i] - mean);
  CHECK(silverman_bandwidth(x, w) == doctest::Approx(1.06 * std::sqrt(var) * std::pow(9.0, -0.2)));
  const auto s = kde_smooth(x, w, 0.8);
  CHECK(std::accumulate(s.begin(), s.end(), 0.0) == doctest::Approx(1.0));
  CHECK(s[4] < w[4]);
}

TEST_CASE("CMA baseline on a small box") {
  const auto m = builtin_cs1();
  const LatticeDomain d({90, 90}, {110, 110});
  const auto lv = level_sets(d, *m.network.slow_weights());
  const auto a = cma_baseline(m.network, d, lv.partition, 40, 3, 0, 2);
  const auto b = cma_baseline(m.network, d, lv.partition, 40, 3, 0, 1);
  CHECK(a.pi == b.pi);
  CHECK(std::accumulate(a.pi.begin(), a.pi.end(), 0.0) == doctest::Approx(1.0));
  CHECK(a.up.size() == lv.partition.size());
}
