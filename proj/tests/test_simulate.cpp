#include <doctest.h>

#include <cmath>

#include "slowvar/errors.hpp"
#include "slowvar/network.hpp"
#include "slowvar/rng.hpp"
#include "slowvar/simulate.hpp"

using namespace slowvar;

TEST_CASE("reaction selection follows the propensity ratios") {
  const auto m = builtin_cs1();
  const auto a = propensities(m.network, State{100, 100});
  RngStream rng(11, 0);
  const int n = 200000;
  int hits = 0;
  double wait = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto step = gillespie_select(a, rng);
    hits += step.reaction == 1;
    wait += step.wait;
  }
  const double p = 20000.0 / 40200.0;
  const double sd = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(double(hits) / n - p) < 5 * sd);
  CHECK(wait / n == doctest::Approx(1.0 / 40200.0).epsilon(0.02));
}

TEST_CASE("a state with no active reaction is absorbing") {
  const std::vector<double> a{0.0, 0.0};
  RngStream rng(1, 0);
  CHECK_THROWS_AS(gillespie_select(a, rng), AbsorbingStateError);
}

TEST_CASE("CLE step without noise applies the drift") {
  const auto m = builtin_cs1();
  const std::vector<double> x{100.0, 100.0};
  const std::vector<double> zero(4, 0.0);
  const auto y = cle_step(m.network, x, 1e-4, zero);
  CHECK(y[0] == doctest::Approx(100.01).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(99.99).epsilon(1e-14));
}

TEST_CASE("SSA trajectories are deterministic per seed and stay on the lattice") {
  const auto m = builtin_cs1();
  const State x0{100, 100};
  RngStream r1(3, 5), r2(3, 5), r3(4, 5);
  const auto a = ssa_run(m.network, x0, 0.05, r1);
  const auto b = ssa_run(m.network, x0, 0.05, r2);
  const auto c = ssa_run(m.network, x0, 0.05, r3);
  CHECK(a.states == b.states);
  CHECK(a.times == b.times);
  CHECK(a.states != c.states);
  for (std::size_t i = 1; i < a.times.size(); ++i) CHECK(a.times[i] >= a.times[i - 1]);
  CHECK(a.times.back() == doctest::Approx(0.05));
  // Each jump is one stoichiometric vector.
  for (std::size_t i = 1; i + 1 < a.states.size(); ++i) {
    const int d1 = a.states[i][0] - a.states[i - 1][0];
    const int d2 = a.states[i][1] - a.states[i - 1][1];
    CHECK(std::abs(d1) + std::abs(d2) <= 2);
  }
}

TEST_CASE("CSSA event classes on CS-I") {
  const auto m = builtin_cs1();
  const WeightedSlowCoordinate slow({0.5, 0.5}, m.domain);

  State x{100, 100};
  CHECK(cssa_apply(m.network, x, 1, slow, m.domain) == EventClass::fast);
  CHECK(x == State{99, 101});

  // R1 raises S; the fast variable keeps its new value and S is restored.
  x = {100, 100};
  CHECK(cssa_apply(m.network, x, 0, slow, m.domain) == EventClass::slow_up);
  CHECK(x == State{101, 99});

  x = {100, 100};
  CHECK(cssa_apply(m.network, x, 3, slow, m.domain) == EventClass::slow_down);
  CHECK(x == State{100, 100});

  // Leaving the lattice box is reverted.
  x = {150, 100};
  CHECK(cssa_apply(m.network, x, 0, slow, m.domain) == EventClass::boundary_revert);
  CHECK(x == State{150, 100});
}

TEST_CASE("CSSA keeps the slow variable fixed") {
  const auto m = builtin_cs2();
  const WeightedSlowCoordinate slow({1.0, 2.0}, m.domain);
  RngStream rng(2, 9);
  State x{21, 30};
  const double s0 = slow.value(x);
  for (int i = 0; i < 20000; ++i) {
    cssa_step(m.network, x, slow, m.domain, rng);
    REQUIRE(slow.value(x) == s0);
    REQUIRE(m.domain.contains(x));
  }
}

TEST_CASE("CSSA run counts attempts and occupancy") {
  const auto m = builtin_cs1();
  const WeightedSlowCoordinate slow({0.5, 0.5}, m.domain);
  RngStream rng(5, 1);
  const State x0{100, 100};
  const auto st = cssa_run(m.network, m.domain, slow, x0, 500, rng, true);
  CHECK(st.up + st.down == 500u);
  double occ = 0.0;
  for (double v : st.occupancy) occ += v;
  CHECK(occ == doctest::Approx(st.time).epsilon(1e-12));
  // Up attempts come from R1 (rate 100) and down attempts from R4 (rate x2 near 100).
  CHECK(double(st.up) / 500.0 == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("label coordinate projects to the same fast value") {
  const LatticeDomain d({0, 0}, {3, 3});
  // Two bins: x1 + x2 <= 3 and the rest.
  std::vector<int> labels(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.state(i);
    labels[i] = x[0] + x[1] <= 3 ? 0 : 1;
  }
  const LabelSlowCoordinate coord(d, labels);
  State out(2);
  CHECK(coord.project(State{2, 3}, State{1, 1}, out));
  CHECK(out[0] == 2);
  CHECK(out[0] + out[1] <= 3);
  CHECK(out == State{2, 1});
  CHECK(*coord.compare(State{0, 0}, State{3, 3}) == 1);
  CHECK(*coord.compare(State{3, 3}, State{0, 0}) == -1);
  CHECK_FALSE(coord.compare(State{0, 0}, State{4, 0}).has_value());
}
