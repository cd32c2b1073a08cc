#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slowvar/binning.hpp"
#include "slowvar/network.hpp"
#include "slowvar/rng.hpp"
#include "slowvar/simulate.hpp"

namespace slowvar {

struct ConditionalDistribution {
  int bin = -1;
  double slow_value = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> states;  // domain indices; empty for closed forms
  std::vector<int> fast_values;     // x1 of each support point
  std::vector<double> probs;
};

// Null space of the generator of `fast` reactions restricted to `bin`.
// Transitions leaving the bin are dropped. Throws NumericalError when the
// bin splits into several components under the fast reactions.
ConditionalDistribution fast_subsystem_conditional(const ReactionNetwork& net, const LatticeDomain& domain,
                                                   std::span<const std::size_t> bin,
                                                   std::span<const std::size_t> fast);

// Stationary law of the conditional SSA on one bin: every reaction is used,
// moves that leave the bin are projected back with the same x1 or reverted.
// This is what cssa_conditional converges to as L_c grows.
ConditionalDistribution projected_conditional(const ReactionNetwork& net, const LatticeDomain& domain,
                                              const LabelSlowCoordinate& coord, int bin);

// Stationary distribution of a small dense generator Q (rows sum to zero).
std::vector<double> dense_stationary(const Eigen::MatrixXd& Q);

// CS-I: p(x1) ~ r^(2s - x1) / (x1! (2s - x1)!) with r = k2/k3, 0 <= x1 <= 2s.
ConditionalDistribution closed_form_cs1(double s, double k2_over_k3);
// CS-II: p(x1) ~ r^x2 / (x1! x2!) with x2 = (s - x1)/2 integer, r = k5/k6.
ConditionalDistribution closed_form_cs2(int s, double k5_over_k6);

// Rate-coefficient ratios of the built-in systems as configured.
double cs1_ratio(const ReactionNetwork& net);
double cs2_ratio(const ReactionNetwork& net);

// Empirical time-weighted conditional from a CSSA run of L_c slow attempts.
ConditionalDistribution cssa_conditional(const ReactionNetwork& net, const LatticeDomain& domain,
                                         const SlowCoordinate& coord, std::span<const int> x0, std::uint64_t lc,
                                         RngStream& rng);

// A bin member near the bin's centroid, used to start CSSA runs.
State representative_state(const LatticeDomain& domain, std::span<const std::size_t> bin);

// In-domain state with w.x == s closest to the middle of its level.
State state_with_slow_value(const LatticeDomain& domain, std::span<const double> weights, double s);

struct ReactionClasses {
  std::vector<std::size_t> fast, slow, ambiguous;
  std::vector<double> slow_fraction;  // per reaction
};

ReactionClasses classify_reactions(const ReactionNetwork& net, const LatticeDomain& domain, const Partition& p);

// Total variation distance, matching support points by fast value x1.
double total_variation(const ConditionalDistribution& a, const ConditionalDistribution& b);

// Restricts a closed form to the given fast values and renormalizes.
ConditionalDistribution restrict_to(const ConditionalDistribution& c, std::span<const int> fast_values);

// `bin_id,x1,prob`
void write_conditionals_csv(std::ostream& out, std::span<const ConditionalDistribution> cs);

}  // namespace slowvar
