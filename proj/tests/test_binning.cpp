#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "slowvar/binning.hpp"
#include "slowvar/errors.hpp"
#include "slowvar/network.hpp"

using namespace slowvar;

namespace {

Partition from_cardinalities(const std::vector<std::size_t>& card) {
  Partition p;
  std::size_t next = 0;
  for (std::size_t c : card) {
    std::vector<std::size_t> bin(c);
    std::iota(bin.begin(), bin.end(), next);
    next += c;
    p.bins.push_back(bin);
  }
  p.theta = theta_score(p);
  return p;
}

}  // namespace

TEST_CASE("sorting and increments") {
  const std::vector<double> phi{3, 1, 2};
  const auto inc = sort_and_increments(phi);
  CHECK(inc.sorted == std::vector<double>{3, 2, 1});
  CHECK(inc.delta == std::vector<double>{1, 1});
  CHECK(inc.order == std::vector<std::size_t>{0, 2, 1});

  const auto flat = sort_and_increments(std::vector<double>(5, 0.25));
  for (double d : flat.delta) CHECK(d == 0.0);
  CHECK(flat.order == std::vector<std::size_t>{0, 1, 2, 3, 4});

  const auto pc = sort_and_increments(std::vector<double>{0.1, 0.9, 0.9, 0.1, 0.9});
  int nonzero = 0;
  for (std::size_t i = 0; i < pc.delta.size(); ++i)
    if (pc.delta[i] != 0.0) {
      ++nonzero;
      CHECK(i + 1 == 3u);
      CHECK(pc.delta[i] == doctest::Approx(0.8));
    }
  CHECK(nonzero == 1);
}

TEST_CASE("number of bins from the largest relative gap") {
  std::vector<double> d{10, 9, 8, 0.01, 0.009, 0.008, 0.007, 0.006, 0.005, 0.004, 0.003};
  CHECK(select_k(d) == 4u);
  CHECK(select_k(d, 314) == 314u);
  CHECK(select_k(std::vector<double>(9, 0.0)) == 1u);
}

TEST_CASE("partitions from delimiters") {
  const std::vector<double> phi{0.9, 0.9, 0.1};
  const auto two = partition_from_delimiters(phi, 2);
  REQUIRE(two.size() == 2u);
  CHECK(two.bins[0] == std::vector<std::size_t>{0, 1});
  CHECK(two.bins[1] == std::vector<std::size_t>{2});
  CHECK(partition_from_delimiters(phi, 1).size() == 1u);
  const auto all = partition_from_delimiters(std::vector<double>{0.3, 0.1, 0.2, 0.4}, 4);
  CHECK(all.size() == 4u);
  CHECK(all.bins[0] == std::vector<std::size_t>{3});
  CHECK(all.bins[3] == std::vector<std::size_t>{1});
}

TEST_CASE("within-bin increments never exceed the selected delimiters") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> phi(300);
  for (double& v : phi) v = u(gen);
  const auto inc = sort_and_increments(phi);
  const std::size_t k = 17;
  const auto p = partition_from_delimiters(inc, k);
  std::vector<double> desc = inc.delta;
  std::sort(desc.begin(), desc.end(), std::greater<>());
  const double smallest_cut = desc[k - 2];
  std::size_t pos = 0;
  for (const auto& bin : p.bins) {
    for (std::size_t t = 0; t + 1 < bin.size(); ++t) CHECK(inc.delta[pos + t] <= smallest_cut);
    pos += bin.size();
  }
  CHECK(pos == phi.size());
}

TEST_CASE("theta score") {
  CHECK(theta_score(std::vector<std::size_t>{4, 4, 4}) == 0.0);
  CHECK(theta_score(std::vector<std::size_t>{1, 3, 2}) == 5.0);
  CHECK(from_cardinalities({1, 3, 2}).theta == 5.0);
}

TEST_CASE("denoising merges noisy neighbors") {
  const auto flat = denoise(from_cardinalities({5, 5, 5}));
  CHECK(flat.cardinalities() == std::vector<std::size_t>{5, 5, 5});
  const auto noisy = from_cardinalities({5, 2, 3, 5});
  CHECK(noisy.theta == 14.0);
  const auto fixed = denoise(noisy);
  CHECK(fixed.cardinalities() == std::vector<std::size_t>{5, 5, 5});
  CHECK(fixed.theta == 0.0);
  CHECK(fixed.source == PartitionSource::denoised);
}

TEST_CASE("denoising never increases theta or the bin count") {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<std::size_t> c(1, 12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> card(30);
    for (auto& v : card) v = c(gen);
    const auto p = from_cardinalities(card);
    const auto q = denoise(p);
    CHECK(q.theta <= p.theta);
    CHECK(q.size() <= p.size());
    CHECK(q.theta == theta_score(q));
    std::size_t total = 0;
    for (auto v : q.cardinalities()) total += v;
    CHECK(total == std::accumulate(card.begin(), card.end(), std::size_t(0)));
  }
}

TEST_CASE("level sets of the built-in systems") {
  const auto cs1 = builtin_cs1();
  const auto l1 = level_sets(cs1.domain, *cs1.network.slow_weights());
  CHECK(l1.partition.size() == 201u);
  CHECK(l1.values.front() == 50.0);
  CHECK(l1.values.back() == 150.0);
  CHECK(l1.partition.theta == 200.0);

  const auto cs2 = builtin_cs2();
  const auto l2 = level_sets(cs2.domain, *cs2.network.slow_weights());
  CHECK(l2.partition.theta == 108.0);
}

TEST_CASE("boundary truncation") {
  const auto cs1 = builtin_cs1();
  const auto l = level_sets(cs1.domain, *cs1.network.slow_weights()).partition;
  const auto same = truncate_boundary(l, cs1.domain, 0);
  CHECK(same.size() == l.size());
  const auto t1 = truncate_boundary(l, cs1.domain, 1);
  CHECK(l.bins.front().size() == 1u);
  CHECK(t1.bins.front() != l.bins.front());
  // s = 50, 50.5 and their mirror images at the top lie entirely on the boundary.
  CHECK(t1.size() == l.size() - 4);
  // A bin strictly inside the band is kept whatever the band.
  const LatticeDomain d({0, 0}, {9, 9});
  Partition p;
  p.bins = {{d.index(State{5, 5})}, {d.index(State{0, 0})}};
  p.theta = theta_score(p);
  CHECK(truncate_boundary(p, d, 4).size() == 1u);
  CHECK_THROWS(truncate_boundary(p, d, 9));
}

TEST_CASE("partition CSV round trip") {
  const LatticeDomain d({0, 0}, {4, 4});
  Partition p = from_cardinalities({3, 7, 5});
  std::stringstream buf;
  write_partition_csv(buf, p, d);
  const auto back = read_partition_csv(buf, d.size());
  CHECK(back.bins == p.bins);
  CHECK(back.theta == p.theta);
}
