#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "slowvar/binning.hpp"
#include "slowvar/network.hpp"

namespace slowvar {

struct GroundTruth {
  std::vector<double> joint;     // over domain states
  std::vector<double> levels;    // slow values, increasing
  std::vector<double> marginal;  // P(S = levels[q])
  Partition level_sets;          // level sets in the same order
  double boundary_mass = 0.0;    // joint mass on the domain boundary
};

// Product Poisson law of CS-I (means k1V(k3+k4)/(k2 k4) and k1V/k4) restricted
// to the domain; the slow marginal is the Poisson mass of the sum at 2s,
// renormalized over the in-domain levels.
GroundTruth ground_truth_cs1(const Model& cs1);

// Null vector of the truncated generator (no-flux) by shifted inverse iteration.
GroundTruth full_cme_stationary(const ReactionNetwork& net, const LatticeDomain& domain,
                                std::span<const double> weights);

// Sparse generator Q with rows summing to zero (Q_ab = rate a -> b).
Eigen::SparseMatrix<double, Eigen::RowMajor> cme_generator(const ReactionNetwork& net, const LatticeDomain& domain);

// Rows: truth bins, columns: estimated bins.
Eigen::MatrixXd jaccard_matrix(const Partition& truth, const Partition& estimate, std::size_t n_states);

struct Matching {
  std::vector<int> row_to_col;  // -1 when unmatched
  std::vector<int> col_to_row;
  double total = 0.0;
  std::vector<std::size_t> unmatched_rows, unmatched_cols;
};

// Hungarian algorithm maximizing the total entry over a one-to-one assignment.
Matching max_matching(const Eigen::MatrixXd& J);

// Pearson correlation between estimated bin rank and matched true slow value
// over pairs with positive Jaccard.
double ordering_correlation(const Matching& m, const Eigen::MatrixXd& J, std::span<const double> true_values);

// Sum |a - b| with the shorter vector padded by zeros.
double l1_error(std::span<const double> a, std::span<const double> b);

// L1 between the estimated bin distribution and the true marginal after
// alignment by the matching. Pairs with zero Jaccard count as unmatched;
// unmatched estimated bins add their mass, unmatched levels add theirs.
double aligned_l1_error(std::span<const double> pi_est, std::span<const double> truth, const Matching& m,
                        const Eigen::MatrixXd& J);

// Mean Jaccard over matched pairs.
double matched_jaccard_mean(const Matching& m, const Eigen::MatrixXd& J);

// Nonzero entries as `truth_bin,estimated_bin,jaccard`.
void write_jaccard_csv(std::ostream& out, const Eigen::MatrixXd& J);

}  // namespace slowvar
