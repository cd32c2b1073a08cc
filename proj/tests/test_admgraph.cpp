#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "slowvar/admgraph.hpp"
#include "slowvar/covariance.hpp"
#include "slowvar/errors.hpp"
#include "slowvar/network.hpp"

using namespace slowvar;

namespace {

LocalCovariance from_sigma(const Eigen::Matrix2d& s) {
  LocalCovariance c;
  c.sigma = s;
  c.inverse = s.inverse();
  const auto e = eig_sym(s);
  c.eigvals = e.values;
  c.eigvecs = e.vectors;
  c.tau = e.tau;
  return c;
}

}  // namespace

TEST_CASE("sigma distance examples") {
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  const Eigen::VectorXd a = Eigen::Vector2d(1, 2), b = Eigen::Vector2d(4, 6);
  CHECK(sigma_distance(a, a, id, id) == 0.0);
  CHECK(sigma_distance(a, b, id, id) == doctest::Approx(25.0));
  const Eigen::Matrix2d inv = Eigen::Vector2d(2, 1).asDiagonal().inverse();
  CHECK(sigma_distance(Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 0), inv, inv) == doctest::Approx(2.0));
  const Eigen::Matrix2d other = Eigen::Vector2d(0.5, 3).asDiagonal();
  CHECK(sigma_distance(a, b, inv, other) == sigma_distance(b, a, other, inv));
}

TEST_CASE("ellipse neighborhoods on the lattice") {
  const LatticeDomain d({0, 0}, {40, 40});
  const State c{20, 20};
  const auto unit = ellipse_neighborhood(d, c, from_sigma(Eigen::Matrix2d::Identity()), 1.0);
  CHECK(unit.size() == 4u);

  Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
  s(0, 0) = 100.0;
  s(1, 1) = 1.0;
  const auto nb = ellipse_neighborhood(d, c, from_sigma(s), 1.0);
  CHECK(nb.size() == 22u);
  for (std::size_t i : nb) {
    const auto y = d.state(i);
    CHECK(((y[1] == 20 && y[0] != 20 && std::abs(y[0] - 20) <= 10) || (y[0] == 20 && std::abs(y[1] - 20) == 1)));
  }
  CHECK(std::is_sorted(nb.begin(), nb.end()));

  // A corner keeps only in-domain points.
  const auto corner = ellipse_neighborhood(d, State{0, 0}, from_sigma(s), 1.0);
  CHECK(corner.size() == 11u);
}

TEST_CASE("ellipse neighborhood matches brute force for a tilted covariance") {
  const LatticeDomain d({0, 0}, {30, 30});
  Eigen::Matrix2d s;
  s << 20.0, -15.0, -15.0, 14.0;
  const auto cov = from_sigma(s);
  const State c{14, 17};
  const double r = 2.0;
  std::vector<std::size_t> brute;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto y = d.state(i);
    const Eigen::Vector2d dx(y[0] - c[0], y[1] - c[1]);
    if (dx.squaredNorm() > 0 && dx.dot(cov.inverse * dx) <= r * r) brute.push_back(i);
  }
  CHECK(ellipse_neighborhood(d, c, cov, r) == brute);
}

TEST_CASE("graph on a small CS-I box") {
  const auto m = builtin_cs1();
  const LatticeDomain d({90, 90}, {110, 110});
  std::vector<LocalCovariance> covs;
  for (std::size_t i = 0; i < d.size(); ++i) covs.push_back(local_covariance(m.network, d.state(i), 1.0));
  const auto g = build_graph(d, covs, 4.0, 0.1, 2);
  const SparseRowMatrix Wt = g.W.transpose();
  CHECK((g.W - Wt).norm() == 0.0);
  double max_w = 0.0, min_w = 1.0;
  for (int r = 0; r < g.W.outerSize(); ++r) {
    double sum = 0.0;
    for (SparseRowMatrix::InnerIterator it(g.W, r); it; ++it) {
      CHECK(it.col() != r);
      max_w = std::max(max_w, it.value());
      min_w = std::min(min_w, it.value());
      sum += it.value();
    }
    CHECK(g.degree(r) == doctest::Approx(sum).epsilon(1e-14));
  }
  CHECK(max_w <= 1.0);
  CHECK(min_w > 0.0);

  // Same-line neighbors against one level apart. With the slow variance
  // calibrated to 1/eps^2, a half-level step costs d^2/eps^2 close to 1/2.
  const auto i0 = d.index(State{100, 100});
  const auto same = g.W.coeff(Eigen::Index(i0), Eigen::Index(d.index(State{99, 101})));
  const auto cross = g.W.coeff(Eigen::Index(i0), Eigen::Index(d.index(State{101, 100})));
  CHECK(same > 0.99);
  CHECK(cross > 0.0);
  CHECK(cross < std::exp(-0.45));
  CHECK(same / cross > 1.5);

  // Graph construction does not depend on the worker count.
  const auto g1 = build_graph(d, covs, 4.0, 0.1, 1);
  CHECK((g1.W - g.W).norm() == 0.0);

  // Larger epsilon raises every weight.
  const auto g2 = build_graph(d, covs, 4.0, 0.2, 1);
  for (int r = 0; r < g.W.outerSize(); ++r)
    for (SparseRowMatrix::InnerIterator it(g.W, r); it; ++it) CHECK(g2.W.coeff(r, it.col()) >= it.value());

  std::stringstream buf;
  write_graph_binary(buf, g);
  const auto back = read_graph_binary(buf);
  CHECK((back.W - g.W).norm() == 0.0);
  CHECK(back.epsilon == g.epsilon);

  // Random-walk rows sum to one; the combinatorial Laplacian is PSD.
  const auto lap = laplacian(g);
  for (int r = 0; r < lap.L.outerSize(); ++r) CHECK(lap.L.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  const Eigen::SparseMatrix<double> K = Eigen::SparseMatrix<double>(g.degree.asDiagonal().toDenseMatrix().sparseView()) - Eigen::SparseMatrix<double>(g.W);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd v(g.node_count());
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = nd(gen);
    CHECK(v.dot(K * v) / v.squaredNorm() >= -1e-10);
  }
}

TEST_CASE("edge count per node stays bounded as the box grows") {
  const auto m = builtin_cs1();
  std::vector<double> per_node;
  for (int half : {5, 10, 20}) {
    const LatticeDomain d({100 - half, 100 - half}, {100 + half, 100 + half});
    std::vector<LocalCovariance> covs;
    for (std::size_t i = 0; i < d.size(); ++i) covs.push_back(local_covariance(m.network, d.state(i), 1.0));
    const auto g = build_graph(d, covs, 4.0, 0.1, 1);
    per_node.push_back(double(g.edge_count()) / double(g.node_count()));
  }
  for (double v : per_node) CHECK(v < 400.0);
  CHECK(per_node[2] >= per_node[1]);
}

TEST_CASE("two-node graph and disconnected graphs") {
  SparseRowMatrix W(2, 2);
  W.insert(0, 1) = 0.3;
  W.insert(1, 0) = 0.3;
  W.makeCompressed();
  const auto g = similarity_from_weights(W);
  const auto lap = laplacian(g);
  CHECK(lap.L.coeff(0, 1) == 1.0);
  CHECK(lap.L.coeff(1, 0) == 1.0);

  SparseRowMatrix V(4, 4);
  V.insert(0, 1) = 1;
  V.insert(1, 0) = 1;
  V.insert(2, 3) = 1;
  V.insert(3, 2) = 1;
  V.makeCompressed();
  CHECK(connected_components(V) == std::vector<std::size_t>{2, 2});
  CHECK_THROWS_AS(similarity_from_weights(V), NumericalError);
}

TEST_CASE("compensated summation recovers small terms") {
  std::vector<double> v{1.0, 1e-17, 1e-17, 1e-17, 1e-17, -1.0};
  CHECK(compensated_sum(v) == doctest::Approx(4e-17).epsilon(1e-6));
}
