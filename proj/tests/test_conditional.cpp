#include <doctest.h>

#include <cmath>

#include "slowvar/binning.hpp"
#include "slowvar/conditional.hpp"
#include "slowvar/errors.hpp"
#include "slowvar/network.hpp"
#include "slowvar/slowchain.hpp"

using namespace slowvar;

TEST_CASE("closed-form conditionals") {
  const auto c1 = closed_form_cs1(1.0, 1.0);
  REQUIRE(c1.probs.size() == 3u);
  CHECK(c1.probs[0] == doctest::Approx(0.25));
  CHECK(c1.probs[1] == doctest::Approx(0.5));
  CHECK(c1.probs[2] == doctest::Approx(0.25));

  const auto c2 = closed_form_cs2(7, 0.02);
  REQUIRE(c2.fast_values == std::vector<int>{1, 3, 5, 7});
  const double expect[] = {0.00333, 0.0834, 0.4170, 0.4964};
  for (int i = 0; i < 4; ++i) CHECK(c2.probs[std::size_t(i)] == doctest::Approx(expect[i]).epsilon(2e-3));
}

TEST_CASE("null space of the fast generator agrees with the closed form") {
  const auto net = builtin_cs2(VolumeScaling::table).network;
  const LatticeDomain d({0, 0}, {20, 20});
  const auto lv = level_sets(d, std::vector<double>{1.0, 2.0});
  const std::vector<std::size_t> fast{4, 5};
  const auto seven = fast_subsystem_conditional(net, d, lv.partition.bins[7], fast);
  const auto closed = closed_form_cs2(7, cs2_ratio(net));
  CHECK(cs2_ratio(net) == doctest::Approx(0.02));
  CHECK(total_variation(seven, closed) <= 1e-12);
}

TEST_CASE("aggregated up rate out of S = 7 under the table convention") {
  const auto net = builtin_cs2(VolumeScaling::table).network;
  const LatticeDomain d({0, 0}, {20, 20});
  const auto lv = level_sets(d, std::vector<double>{1.0, 2.0});
  const std::vector<std::size_t> fast{4, 5};
  std::vector<ConditionalDistribution> conds;
  for (const auto& bin : lv.partition.bins) conds.push_back(fast_subsystem_conditional(net, d, bin, fast));
  const auto r = aggregate_rates(net, d, lv.partition, conds);
  CHECK(r.up[7] == doctest::Approx(203.4).epsilon(5e-4));
}

TEST_CASE("dense stationary solve") {
  // Three-state cycle 0 -> 1 -> 2 -> 0 with rates 1, 2, 4.
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(3, 3);
  Q(0, 1) = 1;
  Q(1, 2) = 2;
  Q(2, 0) = 4;
  for (int i = 0; i < 3; ++i) Q(i, i) = -Q.row(i).sum();
  const auto p = dense_stationary(Q);
  // Flux balance: p0 * 1 = p1 * 2 = p2 * 4.
  CHECK(p[0] == doctest::Approx(4.0 / 7.0));
  CHECK(p[1] == doctest::Approx(2.0 / 7.0));
  CHECK(p[2] == doctest::Approx(1.0 / 7.0));

  Eigen::MatrixXd split = Eigen::MatrixXd::Zero(4, 4);
  split(0, 1) = split(1, 0) = 1;
  split(2, 3) = split(3, 2) = 1;
  for (int i = 0; i < 4; ++i) split(i, i) = -split.row(i).sum();
  CHECK_THROWS_AS(dense_stationary(split), NumericalError);
}

TEST_CASE("reaction classification on the true CS-I level sets") {
  const auto m = builtin_cs1();
  const auto lv = level_sets(m.domain, *m.network.slow_weights());
  const auto rc = classify_reactions(m.network, m.domain, lv.partition);
  CHECK(rc.fast == std::vector<std::size_t>{1, 2});
  CHECK(rc.slow == std::vector<std::size_t>{0, 3});
  CHECK(rc.ambiguous.empty());
}

TEST_CASE("CSSA conditional converges to the projected law") {
  const auto m = builtin_cs1();
  const LatticeDomain d({80, 80}, {120, 120});
  const auto lv = level_sets(d, *m.network.slow_weights());
  const LabelSlowCoordinate coord(d, lv.partition.labels(d.size()));
  const int q = int(lv.values.size() / 2);
  const auto exact = projected_conditional(m.network, d, coord, q);
  RngStream rng(17, 3);
  const auto x0 = representative_state(d, lv.partition.bins[std::size_t(q)]);
  const auto est = cssa_conditional(m.network, d, coord, x0, 20000, rng);
  CHECK(total_variation(exact, est) < 0.05);
  double total = 0.0;
  for (double p : exact.probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("total variation and restriction") {
  ConditionalDistribution a, b;
  a.fast_values = {1, 2, 3};
  a.probs = {0.2, 0.3, 0.5};
  b.fast_values = {2, 3, 4};
  b.probs = {0.5, 0.4, 0.1};
  CHECK(total_variation(a, b) == doctest::Approx(0.5 * (0.2 + 0.2 + 0.1 + 0.1)));
  const auto r = restrict_to(a, std::vector<int>{2, 3});
  CHECK(r.probs[0] == doctest::Approx(0.375));
  CHECK_THROWS_AS(restrict_to(a, std::vector<int>{9}), DomainError);
}
