#include "slowvar/covariance.hpp"

#include <algorithm>
#include <cmath>

#include "slowvar/errors.hpp"
#include "slowvar/parallel.hpp"

namespace slowvar {

SymEigen eig_sym(const Eigen::MatrixXd& sigma) {
  SymEigen out;
  const auto n = sigma.rows();
  if (n == 2) {
    const double a = sigma(0, 0), b = 0.5 * (sigma(0, 1) + sigma(1, 0)), c = sigma(1, 1);
    const double mean = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    out.values.resize(2);
    out.values << mean + rad, mean - rad;
    // Eigenvector of the larger eigenvalue, built from whichever row is better conditioned.
    Eigen::Vector2d v;
    if (rad == 0.0) {
      v << 1.0, 0.0;
    } else if (a >= c) {
      v << a - out.values(1), b;
    } else {
      v << b, c - out.values(1);
    }
    v.normalize();
    out.vectors.resize(2, 2);
    out.vectors.col(0) = v;
    out.vectors.col(1) << -v(1), v(0);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
  }
  const double top = out.values(0);
  const double bottom = std::max(0.0, out.values(n - 1));
  out.tau = top > 0.0 ? bottom / top : 0.0;
  return out;
}

LocalCovariance local_covariance(const ReactionNetwork& net, std::span<const int> x, double dt) {
  if (!(dt > 0.0)) throw DomainError("local_covariance: dt must be positive");
  const std::size_t l = net.species_count();
  const std::vector<double> a = propensities(net, x);
  LocalCovariance c;
  c.sigma = Eigen::MatrixXd::Zero(Eigen::Index(l), Eigen::Index(l));
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] == 0.0) continue;
    const auto& nu = net.reaction(j).stoich;
    for (std::size_t p = 0; p < l; ++p)
      for (std::size_t q = 0; q < l; ++q) c.sigma(Eigen::Index(p), Eigen::Index(q)) += double(nu[p] * nu[q]) * a[j];
  }
  c.sigma *= dt;
  const SymEigen e = eig_sym(c.sigma);
  c.eigvals = e.values;
  c.eigvecs = e.vectors;
  c.tau = e.tau;
  const double top = std::abs(e.values(0));
  const double cutoff = 1e-12 * std::max(top, 1e-300);
  c.singular = !(e.values(Eigen::Index(l) - 1) > cutoff);
  if (!c.singular) {
    c.inverse = c.sigma.inverse();
    if (l != 2) c.inverse = 0.5 * (c.inverse + c.inverse.transpose()).eval();
  } else {
    // Pseudo-inverse through the eigendecomposition.
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(Eigen::Index(l));
    for (Eigen::Index k = 0; k < Eigen::Index(l); ++k)
      if (e.values(k) > cutoff) inv(k) = 1.0 / e.values(k);
    c.inverse = e.vectors * inv.asDiagonal() * e.vectors.transpose();
  }
  return c;
}

double median_min_eigenvalue(const ReactionNetwork& net, const LatticeDomain& domain) {
  if (domain.size() == 0) throw DomainError("empty domain");
  std::vector<double> mins(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const State x = domain.state(i);
    mins[i] = local_covariance(net, x, 1.0).min_eigenvalue();
  }
  std::sort(mins.begin(), mins.end());
  const std::size_t n = mins.size();
  return n % 2 ? mins[n / 2] : 0.5 * (mins[n / 2 - 1] + mins[n / 2]);
}

double calibrate_dt(const ReactionNetwork& net, const LatticeDomain& domain, double target) {
  if (!(target > 0.0)) throw ConfigError("calibration target must be positive");
  const double med = median_min_eigenvalue(net, domain);
  if (!(med > 0.0)) throw NumericalError("calibrate_dt: median smallest covariance eigenvalue is zero");
  return target / med;
}

std::vector<LocalCovariance> all_covariances(const ReactionNetwork& net, const LatticeDomain& domain, double dt,
                                             int workers) {
  std::vector<LocalCovariance> covs(domain.size());
  parallel_for(domain.size(), workers, [&](std::size_t i) {
    const State x = domain.state(i);
    covs[i] = local_covariance(net, x, dt);
  });
  return covs;
}

void write_covariance_csv(std::ostream& out, const LatticeDomain& domain, std::span<const LocalCovariance> covs) {
  const std::size_t l = domain.dim();
  out << "i";
  for (std::size_t k = 0; k < l; ++k) out << ",x" << k + 1;
  for (std::size_t p = 0; p < l; ++p)
    for (std::size_t q = p; q < l; ++q) out << ",s" << p + 1 << q + 1;
  for (std::size_t k = 0; k < l; ++k) out << ",lam" << k + 1;
  out << ",tau\n";
  out.precision(12);
  for (std::size_t i = 0; i < covs.size(); ++i) {
    const State x = domain.state(i);
    out << i;
    for (int v : x) out << "," << v;
    const auto& c = covs[i];
    for (std::size_t p = 0; p < l; ++p)
      for (std::size_t q = p; q < l; ++q) out << "," << c.sigma(Eigen::Index(p), Eigen::Index(q));
    for (std::size_t k = 0; k < l; ++k) out << "," << c.eigvals(Eigen::Index(k));
    out << "," << c.tau << "\n";
  }
}

}  // namespace slowvar
