#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slowvar/network.hpp"

namespace slowvar {

enum class PartitionSource { ground_truth, eigenvector, denoised, truncated };

std::string to_string(PartitionSource s);

struct Partition {
  std::vector<std::vector<std::size_t>> bins;  // each sorted ascending
  double theta = 0.0;
  PartitionSource source = PartitionSource::eigenvector;

  std::size_t size() const { return bins.size(); }
  std::vector<std::size_t> cardinalities() const;
  // Bin id per state (-1 for states in no bin).
  std::vector<int> labels(std::size_t n_states) const;
};

// Theta from cardinalities: sum of squared differences of neighbours.
double theta_score(std::span<const std::size_t> cardinalities);
double theta_score(const Partition& p);

struct SortedIncrements {
  std::vector<std::size_t> order;  // sigma: states by descending value, ties by index
  std::vector<double> sorted;      // values in that order
  std::vector<double> delta;       // sorted[i] - sorted[i+1], length N-1
};

SortedIncrements sort_and_increments(std::span<const double> phi);

// Largest-ratio rule on the increments sorted in decreasing order, searched
// over t in [k_min, N/2] (1-based); k = t + 1. Returns 1 when all vanish.
std::size_t select_k(std::span<const double> delta_sorted_desc, std::optional<std::size_t> override_k = std::nullopt,
                     std::size_t k_min = 2);

// Convenience: sorts the increments and applies select_k.
std::size_t select_k_from_increments(std::span<const double> delta, std::optional<std::size_t> override_k = std::nullopt);

// Cuts the sorted order at the k-1 largest increments (ties: earlier position).
Partition partition_from_delimiters(const SortedIncrements& inc, std::size_t k);
Partition partition_from_delimiters(std::span<const double> phi, std::size_t k);

// Bin merging: merge the adjacent pair whose merge lowers Theta the most
// (ties: smallest position) until no merge lowers it.
Partition denoise(const Partition& p);

// Drops bins whose members all lie at Chebyshev distance < w from the boundary.
Partition truncate_boundary(const Partition& p, const LatticeDomain& domain, int w);

// Level sets of w.x over the domain, ordered by increasing slow value.
struct LevelSets {
  Partition partition;
  std::vector<double> values;
};
LevelSets level_sets(const LatticeDomain& domain, std::span<const double> weights);

// `state_index,x1,..,xl,bin_id` for every binned state.
void write_partition_csv(std::ostream& out, const Partition& p, const LatticeDomain& domain);
Partition read_partition_csv(std::istream& in, std::size_t n_states);
// `bin_id,cardinality`
void write_cardinality_csv(std::ostream& out, const Partition& p);

}  // namespace slowvar
