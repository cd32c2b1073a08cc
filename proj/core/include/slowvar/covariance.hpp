#pragma once

#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slowvar/network.hpp"

namespace slowvar {

struct SymEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, orthonormal
  double tau = 0.0;         // smallest / largest eigenvalue
};

// Closed form for 2x2, Eigen's self-adjoint solver otherwise.
SymEigen eig_sym(const Eigen::MatrixXd& sigma);

struct LocalCovariance {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd inverse;  // pseudo-inverse when singular
  Eigen::VectorXd eigvals;
  Eigen::MatrixXd eigvecs;
  double tau = 0.0;
  bool singular = false;

  double min_eigenvalue() const { return eigvals(eigvals.size() - 1); }
};

// Sigma_ik = dt * sum_j nu_ji nu_jk alpha_j(x).
LocalCovariance local_covariance(const ReactionNetwork& net, std::span<const int> x, double dt);

// Median over the domain of the smallest eigenvalue of Sigma(x, 1).
double median_min_eigenvalue(const ReactionNetwork& net, const LatticeDomain& domain);

// Time step that brings the median smallest eigenvalue to `target`.
double calibrate_dt(const ReactionNetwork& net, const LatticeDomain& domain, double target = 1.0);

// One covariance per domain state, in index order.
std::vector<LocalCovariance> all_covariances(const ReactionNetwork& net, const LatticeDomain& domain, double dt,
                                             int workers = 1);

// `i,x1,..,xl,s11,s12,..,sll,lam1,..,laml,tau`
void write_covariance_csv(std::ostream& out, const LatticeDomain& domain, std::span<const LocalCovariance> covs);

}  // namespace slowvar
