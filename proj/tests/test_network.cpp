#include <doctest.h>

#include <sstream>

#include "slowvar/errors.hpp"
#include "slowvar/network.hpp"
#include "slowvar/network_file.hpp"

using namespace slowvar;

TEST_CASE("cs1 propensities at the centre of the domain") {
  const auto m = builtin_cs1();
  const auto a = propensities(m.network, State{100, 100});
  REQUIRE(a.size() == 4);
  CHECK(a[0] == 100.0);
  CHECK(a[1] == 20000.0);
  CHECK(a[2] == 20000.0);
  CHECK(a[3] == 100.0);
  CHECK(m.domain.size() == 101u * 101u);
  CHECK(*m.network.slow_value(State{100, 101}) == doctest::Approx(100.5));
}

// Rows of the published propensity table for the states with S = 7.
TEST_CASE("cs2 table convention reproduces the published propensities") {
  const auto m = builtin_cs2(VolumeScaling::table);
  struct Row {
    int x1, x2;
    std::size_t j;
    double alpha;
  };
  const Row rows[] = {
      {1, 3, 0, 96},  {1, 3, 1, 0.96}, {1, 3, 2, 184.38}, {1, 3, 3, 19.75}, {1, 3, 5, 12000},
      {3, 2, 0, 64},  {3, 2, 1, 1.92}, {3, 2, 2, 184.38}, {3, 2, 3, 59.25}, {3, 2, 4, 480},
      {3, 2, 5, 8000}, {5, 1, 0, 32},  {5, 1, 1, 1.6},    {5, 1, 2, 184.38}, {5, 1, 3, 98.75},
      {5, 1, 4, 1600}, {5, 1, 5, 4000}, {7, 0, 2, 184.38}, {7, 0, 3, 138.25}, {7, 0, 4, 3360},
  };
  for (const auto& r : rows) {
    const auto a = propensities(m.network, State{r.x1, r.x2});
    CAPTURE(r.x1);
    CAPTURE(r.j);
    CHECK(a[r.j] == doctest::Approx(r.alpha).epsilon(0.005 / r.alpha + 1e-12));
  }
}

TEST_CASE("cs2 stated convention applies the volume powers") {
  const auto m = builtin_cs2(VolumeScaling::stated);
  const auto a = propensities(m.network, State{3, 2});
  CHECK(a[1] == doctest::Approx(0.32 / 8 * 6));
  CHECK(a[2] == doctest::Approx(184.375 * 8));
  CHECK(a[4] == doctest::Approx(80.0 / 8 * 6));
  CHECK(a[5] == doctest::Approx(4000.0 * 2));
}

TEST_CASE("propensities reject negative counts") {
  const auto m = builtin_cs1();
  CHECK_THROWS_AS(propensities(m.network, State{-1, 4}), DomainError);
}

TEST_CASE("lattice domain indexing round trips") {
  const LatticeDomain d({1, 2}, {4, 6});
  CHECK(d.size() == 20u);
  CHECK(d.index(State{1, 2}) == 0u);
  CHECK(d.index(State{2, 2}) == 1u);
  CHECK(d.index(State{1, 3}) == 4u);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.index(d.state(i)) == i);
  CHECK(d.contains(State{4, 6}));
  CHECK_FALSE(d.contains(State{5, 6}));
  CHECK(d.boundary_distance(State{1, 4}) == 0);
  CHECK(d.boundary_distance(State{3, 4}) == 1);
}

TEST_CASE("network file defines the same system as the built-in") {
  std::istringstream in(R"(# CS-I
species = X1, X2
volume = 1
slow_weights = 0.5, 0.5
domain_lo = 50, 50
domain_hi = 150, 150
reaction = 0 -> X1 @ 100
reaction = X1 -> X2 @ 200
reaction = X2 -> X1 @ 200
reaction = X2 -> 0 @ 1
)");
  const Model f = parse_network(in, "file-cs1");
  const Model b = builtin_cs1();
  REQUIRE(f.network.reaction_count() == b.network.reaction_count());
  for (int x1 : {50, 77, 150})
    for (int x2 : {50, 101, 149}) {
      const auto af = propensities(f.network, State{x1, x2});
      const auto ab = propensities(b.network, State{x1, x2});
      for (std::size_t j = 0; j < af.size(); ++j) CHECK(af[j] == doctest::Approx(ab[j]));
    }
  CHECK(f.domain.size() == b.domain.size());
}

TEST_CASE("network file volume powers and pair reactions") {
  std::istringstream in(R"(species = A, B
volume = 8
domain_lo = 0, 0
domain_hi = 10, 10
reaction = 2 A -> B @ 80 V^-1
reaction = B -> 2 A @ 4000
reaction = A + B -> B @ 0.32 V^-1
)");
  const Model m = parse_network(in);
  const auto a = propensities(m.network, State{3, 2});
  CHECK(a[0] == doctest::Approx(10.0 * 3 * 2));
  CHECK(a[1] == doctest::Approx(8000.0));
  CHECK(a[2] == doctest::Approx(0.04 * 6));
}

TEST_CASE("network file errors are configuration errors") {
  std::istringstream bad(R"(species = A
domain_lo = 0
domain_hi = 3
reaction = 3 A -> 0 @ 1
)");
  CHECK_THROWS_AS(parse_network(bad), ConfigError);
  std::istringstream unknown(R"(species = A
domain_lo = 0
domain_hi = 3
reaction = B -> 0 @ 1
)");
  CHECK_THROWS_AS(parse_network(unknown), ConfigError);
}
