#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "slowvar/binning.hpp"
#include "slowvar/conditional.hpp"
#include "slowvar/network.hpp"

namespace slowvar {

struct AggregatedRates {
  std::vector<double> up;    // toward the next bin
  std::vector<double> down;  // toward the previous bin
};

// Conditional-weighted propensity flux between adjacent bins. Targets outside
// the domain or outside every bin contribute nothing. Any flux to a
// non-adjacent bin above 1e-12 raises NumericalError.
AggregatedRates aggregate_rates(const ReactionNetwork& net, const LatticeDomain& domain, const Partition& p,
                                std::span<const ConditionalDistribution> conditionals);

// Birth-death product formula in log space; the first down rate and the last
// up rate are ignored (no flux).
std::vector<double> stationary_distribution(std::span<const double> up, std::span<const double> down);

// Per-bin balance residual divided by (up + down) * pi; zero where pi = 0.
std::vector<double> balance_residuals(std::span<const double> up, std::span<const double> down,
                                      std::span<const double> pi);

// Discrete Fokker-Planck density with V = up - down, D = up + down:
// pi ~ exp(trapezoid cumulative of 2V/D) / D over the level index.
std::vector<double> fokker_planck_stationary(std::span<const double> up, std::span<const double> down);

struct CmaResult {
  std::vector<double> up, down;  // estimated attempt rates per level
  std::vector<double> time;      // CSSA time per level
  std::vector<double> pi;
};

// Constrained multiscale baseline: one CSSA run of L_c slow attempts per
// level of `levels`, stream id = stream_base + level index.
CmaResult cma_baseline(const ReactionNetwork& net, const LatticeDomain& domain, const Partition& levels,
                       std::uint64_t lc, std::uint64_t seed, std::uint64_t stream_base = 0, int workers = 1);

double silverman_bandwidth(std::span<const double> x, std::span<const double> w);

// Gaussian kernel smoothing of a distribution on the points x, renormalized.
std::vector<double> kde_smooth(std::span<const double> x, std::span<const double> w, double bandwidth);

// `s,theta1,theta2,theta1_minus_theta2`
void write_rates_csv(std::ostream& out, std::span<const double> s, std::span<const double> up,
                     std::span<const double> down);
// `s,pi`
void write_pi_csv(std::ostream& out, std::span<const double> s, std::span<const double> pi);

}  // namespace slowvar
