#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "slowvar/admgraph.hpp"

namespace slowvar {

struct EigenOptions {
  double tol = 1e-10;
  int max_iters = 100000;
  // Shift of the inverted operator ((1 + shift) I - A)^-1, A = D^-1/2 W D^-1/2.
  double shift = 1e-6;
};

struct EigenResult {
  Eigen::VectorXd values;     // lambda_1 >= ... >= lambda_d, trivial pair excluded
  Eigen::MatrixXd vectors;    // N x d, phi^T D phi = 1
  Eigen::VectorXd residuals;  // ||L phi - lambda phi||_2
  int iterations = 0;
};

// Top d nontrivial eigenpairs of L = D^-1 W. Block subspace iteration on the
// shift-inverted symmetrized operator with the trivial vector D^1/2 1
// deflated, followed by a Rayleigh-Ritz step on the symmetrized operator.
EigenResult top_eigenpairs(const SparseSimilarity& g, int d, const EigenOptions& opt = {});

// 1 - lambda_i for the top k eigenvalues of L, starting with the trivial 0.
std::vector<double> combinatorial_spectrum(const SparseSimilarity& g, int k, const EigenOptions& opt = {});

// `i,x1,..,xl,phi1,..,phid`
void write_eigenvectors_csv(std::ostream& out, const EigenResult& r, const LatticeDomain& domain);

}  // namespace slowvar
