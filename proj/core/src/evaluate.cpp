#include "slowvar/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/SparseLU>

#include "slowvar/errors.hpp"

namespace slowvar {

namespace {

double log_poisson(int n, double lambda) { return n * std::log(lambda) - lambda - std::lgamma(n + 1.0); }

void marginal_from_joint(GroundTruth& gt, const LatticeDomain& domain, std::span<const double> weights) {
  LevelSets ls = level_sets(domain, weights);
  gt.level_sets = std::move(ls.partition);
  gt.levels = std::move(ls.values);
  gt.marginal.assign(gt.levels.size(), 0.0);
  for (std::size_t q = 0; q < gt.level_sets.bins.size(); ++q)
    for (std::size_t i : gt.level_sets.bins[q]) gt.marginal[q] += gt.joint[i];
  State x(domain.dim());
  gt.boundary_mass = 0.0;
  for (std::size_t i = 0; i < domain.size(); ++i) {
    domain.state(i, x);
    if (domain.boundary_distance(x) == 0) gt.boundary_mass += gt.joint[i];
  }
}

}  // namespace

GroundTruth ground_truth_cs1(const Model& m) {
  const auto& net = m.network;
  if (net.reaction_count() != 4 || net.species_count() != 2) throw ConfigError("ground_truth_cs1: not a CS-I network");
  const double a = net.reaction(0).rate, k2 = net.reaction(1).rate, k3 = net.reaction(2).rate,
               k4 = net.reaction(3).rate;
  const double lam2 = a / k4;
  const double lam1 = (k3 + k4) * lam2 / k2;
  const auto& dom = m.domain;
  GroundTruth gt;
  gt.joint.resize(dom.size());
  State x(2);
  double total = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    dom.state(i, x);
    gt.joint[i] = std::exp(log_poisson(x[0], lam1) + log_poisson(x[1], lam2));
    total += gt.joint[i];
  }
  for (double& v : gt.joint) v /= total;
  const std::vector<double> w{0.5, 0.5};
  marginal_from_joint(gt, dom, w);
  // Replace the level sums by the Poisson mass of the sum at n = 2s.
  double mt = 0.0;
  for (std::size_t q = 0; q < gt.levels.size(); ++q) {
    const int n = int(std::lround(2.0 * gt.levels[q]));
    gt.marginal[q] = std::exp(log_poisson(n, lam1 + lam2));
    mt += gt.marginal[q];
  }
  for (double& v : gt.marginal) v /= mt;
  return gt;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> cme_generator(const ReactionNetwork& net, const LatticeDomain& domain) {
  const std::size_t n = domain.size();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(n * (net.reaction_count() + 1));
  State x(domain.dim()), y(domain.dim());
  std::vector<double> alpha(net.reaction_count());
  for (std::size_t i = 0; i < n; ++i) {
    domain.state(i, x);
    propensities(net, x, alpha);
    double out = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] == 0.0) continue;
      const auto& nu = net.reaction(j).stoich;
      for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + nu[k];
      if (!domain.contains(y)) continue;
      trips.emplace_back(int(i), int(domain.index(y)), alpha[j]);
      out += alpha[j];
    }
    trips.emplace_back(int(i), int(i), -out);
  }
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::SparseMatrix<double, Eigen::RowMajor> Q(rows, rows);
  Q.setFromTriplets(trips.begin(), trips.end());
  return Q;
}

namespace {

std::vector<char> reach(const Eigen::SparseMatrix<double, Eigen::RowMajor>& Q, std::size_t start) {
  std::vector<char> seen(std::size_t(Q.rows()), 0);
  std::vector<std::size_t> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Q, Eigen::Index(u)); it; ++it) {
      const auto v = std::size_t(it.col());
      if (v != u && it.value() > 0.0 && !seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

GroundTruth full_cme_stationary(const ReactionNetwork& net, const LatticeDomain& domain,
                                std::span<const double> weights) {
  const auto Q = cme_generator(net, domain);
  const std::size_t n = domain.size();
  const Eigen::SparseMatrix<double, Eigen::RowMajor> Qt_row = Q.transpose();
  const auto fwd = reach(Q, 0);
  const auto bwd = reach(Qt_row, 0);
  std::size_t nf = 0, nb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    nf += fwd[i];
    nb += bwd[i];
  }
  if (nf < n || nb < n) {
    std::ostringstream msg;
    msg << "truncated generator is reducible: " << nf << " of " << n << " states reachable from state 0, " << nb
        << " of " << n << " states reach it";
    throw NumericalError(msg.str());
  }

  double max_rate = 0.0;
  for (Eigen::Index i = 0; i < Q.rows(); ++i) max_rate = std::max(max_rate, -Q.coeff(i, i));
  // Solve (Q^T - sigma I) x_{k+1} = x_k; the null vector dominates after a few steps.
  Eigen::SparseMatrix<double> A = Q.transpose();
  const double sigma = 1e-10 * max_rate;
  Eigen::SparseMatrix<double> shifted = A;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) -= sigma;
  shifted.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success) throw NumericalError("full CME: sparse LU factorization failed");

  Eigen::VectorXd x = Eigen::VectorXd::Constant(Eigen::Index(n), 1.0 / double(n));
  double rel = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 50; ++it) {
    x = lu.solve(x);
    if (lu.info() != Eigen::Success) throw NumericalError("full CME: sparse solve failed");
    x /= x.sum();
    rel = (A * x).cwiseAbs().maxCoeff() / (max_rate * x.cwiseAbs().maxCoeff());
    if (rel <= 1e-13) break;
  }
  if (!(rel <= 1e-10)) {
    std::ostringstream msg;
    msg << "full CME inverse iteration did not converge, relative residual " << rel;
    throw NumericalError(msg.str());
  }
  GroundTruth gt;
  gt.joint.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = x(Eigen::Index(i));
    if (v < 0.0) {
      if (v < -1e-12) throw NumericalError("full CME solution has a negative entry");
      v = 0.0;
    }
    gt.joint[i] = v;
    total += v;
  }
  for (double& v : gt.joint) v /= total;
  marginal_from_joint(gt, domain, weights);
  return gt;
}

Eigen::MatrixXd jaccard_matrix(const Partition& truth, const Partition& est, std::size_t n_states) {
  const auto lt = truth.labels(n_states);
  const auto le = est.labels(n_states);
  std::map<std::pair<int, int>, std::size_t> inter;
  for (std::size_t i = 0; i < n_states; ++i)
    if (lt[i] >= 0 && le[i] >= 0) ++inter[{lt[i], le[i]}];
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(Eigen::Index(truth.size()), Eigen::Index(est.size()));
  for (const auto& [key, c] : inter) {
    const double a = double(truth.bins[std::size_t(key.first)].size());
    const double b = double(est.bins[std::size_t(key.second)].size());
    J(key.first, key.second) = double(c) / (a + b - double(c));
  }
  return J;
}

Matching max_matching(const Eigen::MatrixXd& J) {
  const auto r = J.rows(), c = J.cols();
  const Eigen::Index n = std::max(r, c);
  // Square cost matrix, 1-based, minimizing -J; padding entries cost 0.
  auto cost = [&](Eigen::Index i, Eigen::Index j) { return (i <= r && j <= c) ? -J(i - 1, j - 1) : 0.0; };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(std::size_t(n + 1), 0.0), v(std::size_t(n + 1), 0.0);
  std::vector<Eigen::Index> p(std::size_t(n + 1), 0), way(std::size_t(n + 1), 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    p[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(std::size_t(n + 1), inf);
    std::vector<char> used(std::size_t(n + 1), 0);
    do {
      used[std::size_t(j0)] = 1;
      const Eigen::Index i0 = p[std::size_t(j0)];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[std::size_t(j)]) continue;
        const double cur = cost(i0, j) - u[std::size_t(i0)] - v[std::size_t(j)];
        if (cur < minv[std::size_t(j)]) {
          minv[std::size_t(j)] = cur;
          way[std::size_t(j)] = j0;
        }
        if (minv[std::size_t(j)] < delta) {
          delta = minv[std::size_t(j)];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[std::size_t(j)]) {
          u[std::size_t(p[std::size_t(j)])] += delta;
          v[std::size_t(j)] -= delta;
        } else {
          minv[std::size_t(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[std::size_t(j0)] != 0);
    do {
      const Eigen::Index j1 = way[std::size_t(j0)];
      p[std::size_t(j0)] = p[std::size_t(j1)];
      j0 = j1;
    } while (j0);
  }
  Matching m;
  m.row_to_col.assign(std::size_t(r), -1);
  m.col_to_row.assign(std::size_t(c), -1);
  for (Eigen::Index j = 1; j <= n; ++j) {
    const Eigen::Index i = p[std::size_t(j)];
    if (i >= 1 && i <= r && j <= c) {
      m.row_to_col[std::size_t(i - 1)] = int(j - 1);
      m.col_to_row[std::size_t(j - 1)] = int(i - 1);
      m.total += J(i - 1, j - 1);
    }
  }
  for (Eigen::Index i = 0; i < r; ++i)
    if (m.row_to_col[std::size_t(i)] < 0) m.unmatched_rows.push_back(std::size_t(i));
  for (Eigen::Index j = 0; j < c; ++j)
    if (m.col_to_row[std::size_t(j)] < 0) m.unmatched_cols.push_back(std::size_t(j));
  return m;
}

double ordering_correlation(const Matching& m, const Eigen::MatrixXd& J, std::span<const double> true_values) {
  std::vector<double> a, b;
  for (std::size_t i = 0; i < m.row_to_col.size(); ++i) {
    const int j = m.row_to_col[i];
    if (j < 0 || !(J(Eigen::Index(i), j) > 0.0)) continue;
    a.push_back(double(j));
    b.push_back(true_values[i]);
  }
  if (a.size() < 2) throw DomainError("ordering_correlation: fewer than two matched bins");
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0 && sbb > 0.0)) throw DomainError("ordering_correlation: constant input");
  return sab / std::sqrt(saa * sbb);
}

double l1_error(std::span<const double> a, std::span<const double> b) {
  double e = 0.0;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < a.size() ? a[i] : 0.0;
    const double y = i < b.size() ? b[i] : 0.0;
    e += std::abs(x - y);
  }
  return e;
}

double aligned_l1_error(std::span<const double> pi_est, std::span<const double> truth, const Matching& m,
                        const Eigen::MatrixXd& J) {
  double e = 0.0;
  std::vector<char> used(pi_est.size(), 0);
  for (std::size_t q = 0; q < truth.size(); ++q) {
    const int j = q < m.row_to_col.size() ? m.row_to_col[q] : -1;
    if (j >= 0 && J(Eigen::Index(q), j) > 0.0) {
      e += std::abs(pi_est[std::size_t(j)] - truth[q]);
      used[std::size_t(j)] = 1;
    } else {
      e += truth[q];
    }
  }
  for (std::size_t j = 0; j < pi_est.size(); ++j)
    if (!used[j]) e += pi_est[j];
  return e;
}

double matched_jaccard_mean(const Matching& m, const Eigen::MatrixXd& J) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.row_to_col.size(); ++i)
    if (m.row_to_col[i] >= 0) {
      s += J(Eigen::Index(i), m.row_to_col[i]);
      ++n;
    }
  return n ? s / double(n) : 0.0;
}

void write_jaccard_csv(std::ostream& out, const Eigen::MatrixXd& J) {
  out << "truth_bin,estimated_bin,jaccard\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < J.rows(); ++i)
    for (Eigen::Index j = 0; j < J.cols(); ++j)
      if (J(i, j) > 0.0) out << i << "," << j << "," << J(i, j) << "\n";
}

}  // namespace slowvar
