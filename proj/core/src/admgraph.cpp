#include "slowvar/admgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "slowvar/errors.hpp"
#include "slowvar/parallel.hpp"

namespace slowvar {

double sigma_distance(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj, const Eigen::MatrixXd& inv_i,
                      const Eigen::MatrixXd& inv_j) {
  const Eigen::VectorXd d = xi - xj;
  return std::max(0.0, 0.5 * d.dot((inv_i + inv_j) * d));
}

namespace {

// Quadratic form dy^T M dy for the 2x2 case without temporaries.
inline double quad2(const Eigen::MatrixXd& m, int d1, int d2) {
  return m(0, 0) * d1 * d1 + 2.0 * m(0, 1) * d1 * d2 + m(1, 1) * d2 * d2;
}

void neighborhood_2d(const LatticeDomain& domain, std::span<const int> x, const LocalCovariance& cov,
                     double radius, std::vector<std::size_t>& out) {
  const Eigen::MatrixXd& m = cov.inverse;
  const double r2 = radius * radius;
  const double a = m(0, 0), b = 0.5 * (m(0, 1) + m(1, 0)), c = m(1, 1);
  const auto& lo = domain.lo();
  const auto& hi = domain.hi();
  // Extent along x2 of the ellipse is radius * sqrt(Sigma_22).
  const int e2 = int(std::floor(radius * std::sqrt(std::max(0.0, cov.sigma(1, 1))) + 1e-9));
  const int e1max = int(std::floor(radius * std::sqrt(std::max(0.0, cov.sigma(0, 0))) + 1e-9));
  const int y2lo = std::max(lo[1], x[1] - e2), y2hi = std::min(hi[1], x[1] + e2);
  for (int y2 = y2lo; y2 <= y2hi; ++y2) {
    const int d2 = y2 - x[1];
    // a d1^2 + 2 b d1 d2 + c d2^2 <= r2 solved for d1.
    int d1lo = -e1max, d1hi = e1max;
    if (a > 0.0) {
      const double disc = b * b * d2 * d2 - a * (c * d2 * d2 - r2);
      if (disc < 0.0) continue;
      const double sq = std::sqrt(disc);
      d1lo = std::max(d1lo, int(std::ceil((-b * d2 - sq) / a)) - 1);
      d1hi = std::min(d1hi, int(std::floor((-b * d2 + sq) / a)) + 1);
    }
    const int y1lo = std::max(lo[0], x[0] + d1lo), y1hi = std::min(hi[0], x[0] + d1hi);
    for (int y1 = y1lo; y1 <= y1hi; ++y1) {
      const int d1 = y1 - x[0];
      if (d1 == 0 && d2 == 0) continue;
      if (quad2(m, d1, d2) <= r2) {
        const int y[2] = {y1, y2};
        out.push_back(domain.index(std::span<const int>(y, 2)));
      }
    }
  }
}

void neighborhood_general(const LatticeDomain& domain, std::span<const int> x, const LocalCovariance& cov,
                          double radius, std::vector<std::size_t>& out) {
  const std::size_t l = domain.dim();
  std::vector<int> lo(l), hi(l), y(l);
  for (std::size_t k = 0; k < l; ++k) {
    const int e = int(std::floor(radius * std::sqrt(std::max(0.0, cov.sigma(Eigen::Index(k), Eigen::Index(k)))) + 1e-9));
    lo[k] = std::max(domain.lo()[k], x[k] - e);
    hi[k] = std::min(domain.hi()[k], x[k] + e);
    if (lo[k] > hi[k]) return;
  }
  y = lo;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(Eigen::Index(l));
  const double r2 = radius * radius;
  for (;;) {
    bool self = true;
    for (std::size_t k = 0; k < l; ++k) {
      d(Eigen::Index(k)) = y[k] - x[k];
      self = self && y[k] == x[k];
    }
    if (!self && d.dot(cov.inverse * d) <= r2) out.push_back(domain.index(y));
    std::size_t k = 0;
    while (k < l && y[k] == hi[k]) {
      y[k] = lo[k];
      ++k;
    }
    if (k == l) break;
    ++y[k];
  }
}

}  // namespace

std::vector<std::size_t> ellipse_neighborhood(const LatticeDomain& domain, std::span<const int> x,
                                              const LocalCovariance& cov, double radius) {
  if (!(radius > 0.0)) throw ConfigError("ellipse radius must be positive");
  std::vector<std::size_t> out;
  if (domain.dim() == 2)
    neighborhood_2d(domain, x, cov, radius, out);
  else
    neighborhood_general(domain, x, cov, radius, out);
  if (out.empty()) {
    std::ostringstream msg;
    msg << "isolated node at state index " << domain.index(x) << ": empty ellipse neighborhood, increase rho";
    throw NumericalError(msg.str());
  }
  std::sort(out.begin(), out.end());
  return out;
}

double compensated_sum(std::span<const double> v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

std::vector<std::size_t> connected_components(const SparseRowMatrix& W) {
  const auto n = std::size_t(W.rows());
  std::vector<int> seen(n, 0);
  std::vector<std::size_t> sizes, stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::size_t count = 0;
    stack.push_back(s);
    seen[s] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      ++count;
      for (SparseRowMatrix::InnerIterator it(W, Eigen::Index(u)); it; ++it) {
        const auto v = std::size_t(it.col());
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    sizes.push_back(count);
  }
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

namespace {

SparseSimilarity finalize(SparseRowMatrix W, double epsilon, double rho) {
  SparseSimilarity g;
  g.epsilon = epsilon;
  g.rho = rho;
  g.W = std::move(W);
  g.W.makeCompressed();
  const auto n = g.W.rows();
  g.degree.resize(n);
  const double* vals = g.W.valuePtr();
  const auto* outer = g.W.outerIndexPtr();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto b = outer[i], e = outer[i + 1];
    g.degree(i) = compensated_sum(std::span<const double>(vals + b, std::size_t(e - b)));
    if (!(g.degree(i) > 0.0)) throw NumericalError("node " + std::to_string(i) + " has zero degree");
  }
  const auto comps = connected_components(g.W);
  if (comps.size() > 1) {
    std::ostringstream msg;
    msg << "similarity graph is disconnected: " << comps.size() << " components of sizes";
    for (std::size_t k = 0; k < std::min<std::size_t>(comps.size(), 20); ++k) msg << " " << comps[k];
    if (comps.size() > 20) msg << " ...";
    throw NumericalError(msg.str());
  }
  return g;
}

}  // namespace

SparseSimilarity build_graph(const LatticeDomain& domain, std::span<const LocalCovariance> covs, double rho,
                             double epsilon, int workers) {
  if (!(rho > 0.0) || !(epsilon > 0.0)) throw ConfigError("rho and epsilon must be positive");
  const std::size_t n = domain.size();
  if (covs.size() != n) throw ConfigError("build_graph: one covariance per state required");
  if (n < 2) throw NumericalError("build_graph: need at least two states");
  const double radius = rho * epsilon;

  // Per-node neighborhoods, each sorted.
  std::vector<std::vector<std::size_t>> nbr(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const State x = domain.state(i);
    nbr[i] = ellipse_neighborhood(domain, x, covs[i], radius);
  });

  // Unordered pair keys (i < j), deduplicated.
  std::vector<std::uint64_t> keys;
  std::size_t total = 0;
  for (const auto& v : nbr) total += v.size();
  keys.reserve(total);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : nbr[i]) {
      const std::uint64_t a = std::min(i, j), b = std::max(i, j);
      keys.push_back(a * n + b);
    }
    std::vector<std::size_t>().swap(nbr[i]);
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  const std::size_t m = keys.size();

  // Weights, one evaluation per unordered pair.
  std::vector<double> w(m);
  const double inv_eps2 = 1.0 / (epsilon * epsilon);
  const double floor_w = std::numeric_limits<double>::min();
  const std::size_t l = domain.dim();
  const std::size_t chunks = std::max<std::size_t>(1, m / 4096);
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t b = c * m / chunks, e = (c + 1) * m / chunks;
    State xi(l), xj(l);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(Eigen::Index(l));
    for (std::size_t t = b; t < e; ++t) {
      const std::size_t i = keys[t] / n, j = keys[t] % n;
      domain.state(i, xi);
      domain.state(j, xj);
      double d2;
      if (l == 2) {
        const int d1 = xi[0] - xj[0], dd2 = xi[1] - xj[1];
        d2 = 0.5 * (quad2(covs[i].inverse, d1, dd2) + quad2(covs[j].inverse, d1, dd2));
      } else {
        for (std::size_t k = 0; k < l; ++k) d(Eigen::Index(k)) = xi[k] - xj[k];
        d2 = 0.5 * d.dot((covs[i].inverse + covs[j].inverse) * d);
      }
      w[t] = std::max(floor_w, std::exp(-std::max(0.0, d2) * inv_eps2));
    }
  });

  // CSR: row r holds lower entries (pairs (a, r)) then upper entries (pairs (r, b)).
  std::vector<int> lower(n, 0), upper(n, 0);
  for (std::uint64_t k : keys) {
    ++upper[k / n];
    ++lower[k % n];
  }
  std::vector<int> outer(n + 1, 0);
  for (std::size_t r = 0; r < n; ++r) outer[r + 1] = outer[r] + lower[r] + upper[r];
  std::vector<int> lpos(n), upos(n);
  for (std::size_t r = 0; r < n; ++r) {
    lpos[r] = outer[r];
    upos[r] = outer[r] + lower[r];
  }
  const auto nnz = static_cast<std::size_t>(outer[n]);
  std::vector<int> inner(nnz);
  std::vector<double> vals(nnz);
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t a = keys[t] / n, b = keys[t] % n;
    inner[std::size_t(upos[a])] = int(b);
    vals[std::size_t(upos[a]++)] = w[t];
    inner[std::size_t(lpos[b])] = int(a);
    vals[std::size_t(lpos[b]++)] = w[t];
  }
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::Map<const SparseRowMatrix> map(rows, rows, outer[n], outer.data(), inner.data(),
                                        vals.data());
  return finalize(SparseRowMatrix(map), epsilon, rho);
}

SparseSimilarity similarity_from_weights(const SparseRowMatrix& W) {
  if (W.rows() != W.cols()) throw ConfigError("weight matrix must be square");
  SparseRowMatrix S = W;
  S.prune([](Eigen::Index r, Eigen::Index c, double v) { return r != c && v != 0.0; });
  for (Eigen::Index r = 0; r < S.rows(); ++r)
    for (SparseRowMatrix::InnerIterator it(S, r); it; ++it) {
      if (!(it.value() > 0.0 && it.value() <= 1.0)) throw ConfigError("weights must lie in (0,1]");
      if (S.coeff(it.col(), r) != it.value()) throw ConfigError("weight matrix must be exactly symmetric");
    }
  return finalize(std::move(S), 0.0, 0.0);
}

RandomWalkLaplacian laplacian(const SparseSimilarity& g) {
  RandomWalkLaplacian out;
  out.degree = g.degree;
  out.L = g.W;
  for (Eigen::Index r = 0; r < out.L.rows(); ++r) {
    const double d = g.degree(r);
    if (!(d > 0.0)) throw NumericalError("laplacian: zero degree at node " + std::to_string(r));
    for (SparseRowMatrix::InnerIterator it(out.L, r); it; ++it) it.valueRef() /= d;
  }
  return out;
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError("truncated graph file");
  return v;
}

}  // namespace

void write_graph_binary(std::ostream& out, const SparseSimilarity& g) {
  out.write("SVGRAPH1", 8);
  put<std::uint64_t>(out, g.node_count());
  put<std::uint64_t>(out, g.edge_count());
  put<double>(out, g.epsilon);
  put<double>(out, g.rho);
  for (Eigen::Index r = 0; r < g.W.rows(); ++r)
    for (SparseRowMatrix::InnerIterator it(g.W, r); it; ++it)
      if (it.col() > r) {
        put<std::uint32_t>(out, std::uint32_t(r));
        put<std::uint32_t>(out, std::uint32_t(it.col()));
        put<double>(out, it.value());
      }
}

SparseSimilarity read_graph_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, "SVGRAPH1", 8) != 0) throw ConfigError("not a slowvar graph file");
  const auto n = get<std::uint64_t>(in);
  const auto m = get<std::uint64_t>(in);
  const double eps = get<double>(in);
  const double rho = get<double>(in);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * m);
  for (std::uint64_t t = 0; t < m; ++t) {
    const auto i = get<std::uint32_t>(in);
    const auto j = get<std::uint32_t>(in);
    const auto w = get<double>(in);
    trips.emplace_back(int(i), int(j), w);
    trips.emplace_back(int(j), int(i), w);
  }
  const auto rows = static_cast<Eigen::Index>(n);
  SparseRowMatrix W(rows, rows);
  W.setFromTriplets(trips.begin(), trips.end());
  return finalize(std::move(W), eps, rho);
}

void write_degree_histogram_csv(std::ostream& out, const SparseSimilarity& g, int bins) {
  const double lo = g.degree.minCoeff(), hi = g.degree.maxCoeff();
  std::vector<long> counts(std::size_t(bins), 0);
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  for (Eigen::Index i = 0; i < g.degree.size(); ++i) {
    int b = int((g.degree(i) - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++counts[std::size_t(b)];
  }
  out << "bin_lo,bin_hi,count\n";
  out.precision(12);
  for (int b = 0; b < bins; ++b) out << lo + b * width << "," << lo + (b + 1) * width << "," << counts[std::size_t(b)] << "\n";
}

void write_degree_scatter_csv(std::ostream& out, const SparseSimilarity& g, const LatticeDomain& domain) {
  out << "i";
  for (std::size_t k = 0; k < domain.dim(); ++k) out << ",x" << k + 1;
  out << ",degree\n";
  out.precision(15);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    out << i;
    for (int v : domain.state(i)) out << "," << v;
    out << "," << g.degree(Eigen::Index(i)) << "\n";
  }
}

}  // namespace slowvar
