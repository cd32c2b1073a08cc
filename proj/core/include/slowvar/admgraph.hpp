#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "slowvar/covariance.hpp"
#include "slowvar/network.hpp"

namespace slowvar {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SparseSimilarity {
  SparseRowMatrix W;       // symmetric, zero diagonal, columns sorted per row
  Eigen::VectorXd degree;  // row sums of W
  double epsilon = 0.1;
  double rho = 4.0;

  std::size_t node_count() const { return std::size_t(W.rows()); }
  std::size_t edge_count() const { return std::size_t(W.nonZeros()) / 2; }
};

// d^2 = 1/2 (xi - xj)(inv_i + inv_j)(xi - xj)^T
double sigma_distance(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj, const Eigen::MatrixXd& inv_i,
                      const Eigen::MatrixXd& inv_j);

// Lattice points y != x with (y - x) Sigma^-1 (y - x)^T <= radius^2, clipped
// to the domain, sorted by index. Throws NumericalError when empty.
std::vector<std::size_t> ellipse_neighborhood(const LatticeDomain& domain, std::span<const int> x,
                                              const LocalCovariance& cov, double radius);

// Union of the ellipse neighborhoods with radius rho * epsilon (rho counts
// kernel widths), weighted by exp(-d^2 / epsilon^2). Throws NumericalError
// if the graph is disconnected.
SparseSimilarity build_graph(const LatticeDomain& domain, std::span<const LocalCovariance> covs, double rho,
                             double epsilon, int workers = 1);

// Builds the similarity structure from an explicit symmetric weight matrix.
SparseSimilarity similarity_from_weights(const SparseRowMatrix& W);

// Sizes of the connected components, largest first.
std::vector<std::size_t> connected_components(const SparseRowMatrix& W);

struct RandomWalkLaplacian {
  Eigen::VectorXd degree;
  SparseRowMatrix L;  // D^-1 W
};

RandomWalkLaplacian laplacian(const SparseSimilarity& g);

// Sum with Neumaier compensation in the given order.
double compensated_sum(std::span<const double> v);

// Binary edge list: magic "SVGRAPH1", u64 nodes, u64 edges, f64 epsilon,
// f64 rho, then per undirected edge (u32 i, u32 j, f64 w) with i < j.
void write_graph_binary(std::ostream& out, const SparseSimilarity& g);
SparseSimilarity read_graph_binary(std::istream& in);

// `bin_lo,bin_hi,count` over `bins` equal-width degree bins.
void write_degree_histogram_csv(std::ostream& out, const SparseSimilarity& g, int bins = 50);
// `i,x1,..,xl,degree`
void write_degree_scatter_csv(std::ostream& out, const SparseSimilarity& g, const LatticeDomain& domain);

}  // namespace slowvar
