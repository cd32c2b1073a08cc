#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slowvar {

using State = std::vector<int>;

enum class RateLaw { constant, linear, bilinear, pair_quadratic };

// Which power of the volume multiplies each rate constant.
// `stated` applies the per-reaction exponent, `table` ignores it.
enum class VolumeScaling { stated, table };

std::string to_string(VolumeScaling v);
VolumeScaling volume_scaling_from_string(const std::string& s);

struct Reaction {
  std::vector<int> stoich;
  RateLaw law = RateLaw::constant;
  std::size_t i = 0;  // first operand species (linear, bilinear, pair-quadratic)
  std::size_t j = 0;  // second operand species (bilinear only)
  double rate = 0.0;  // effective coefficient after volume scaling
  std::string label;
};

// Validates stoich/law/rate and throws ConfigError on a malformed reaction.
void validate_reaction(const Reaction& r, std::size_t species_count);

class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions,
                  double volume = 1.0, VolumeScaling scaling = VolumeScaling::stated,
                  std::optional<std::vector<double>> slow_weights = std::nullopt);

  std::size_t species_count() const { return species_.size(); }
  std::size_t reaction_count() const { return reactions_.size(); }
  const std::vector<std::string>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Reaction& reaction(std::size_t j) const { return reactions_.at(j); }
  double volume() const { return volume_; }
  VolumeScaling scaling() const { return scaling_; }
  const std::optional<std::vector<double>>& slow_weights() const { return slow_weights_; }

  // w·x when slow weights are known.
  std::optional<double> slow_value(std::span<const int> x) const;

  // Copy with every rate multiplied by c.
  ReactionNetwork scaled(double c) const;

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
  double volume_;
  VolumeScaling scaling_;
  std::optional<std::vector<double>> slow_weights_;
};

// Propensity of one reaction at a real-valued state. No sign checks.
inline double propensity(const Reaction& r, const double* x) {
  switch (r.law) {
    case RateLaw::constant:
      return r.rate;
    case RateLaw::linear:
      return r.rate * x[r.i];
    case RateLaw::bilinear:
      return r.rate * x[r.i] * x[r.j];
    case RateLaw::pair_quadratic:
      return r.rate * x[r.i] * (x[r.i] - 1.0);
  }
  return 0.0;
}

inline double propensity(const Reaction& r, const int* x) {
  switch (r.law) {
    case RateLaw::constant:
      return r.rate;
    case RateLaw::linear:
      return r.rate * x[r.i];
    case RateLaw::bilinear:
      return r.rate * double(x[r.i]) * double(x[r.j]);
    case RateLaw::pair_quadratic:
      return r.rate * double(x[r.i]) * double(x[r.i] - 1);
  }
  return 0.0;
}

// All propensities at an integer state; throws DomainError on negative entries.
std::vector<double> propensities(const ReactionNetwork& net, std::span<const int> x);
void propensities(const ReactionNetwork& net, std::span<const int> x, std::span<double> out);

// Real-valued evaluation used by the CLE. Entries may come out negative.
void propensities_real(const ReactionNetwork& net, std::span<const double> x, std::span<double> out);

class LatticeDomain {
 public:
  LatticeDomain(std::vector<int> lo, std::vector<int> hi);

  std::size_t dim() const { return lo_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<int>& lo() const { return lo_; }
  const std::vector<int>& hi() const { return hi_; }

  bool contains(std::span<const int> x) const;

  // 0-based row-major index with species 1 varying fastest.
  std::size_t index(std::span<const int> x) const;
  State state(std::size_t idx) const;
  void state(std::size_t idx, std::span<int> out) const;

  // Chebyshev distance to the domain boundary (0 on the boundary).
  int boundary_distance(std::span<const int> x) const;

  std::size_t stride(std::size_t k) const { return stride_[k]; }

 private:
  std::vector<int> lo_, hi_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

struct Model {
  ReactionNetwork network;
  LatticeDomain domain;
  std::string name;
};

// CS-I: 0 -> X1 (100), X1 -> X2 (200 x1), X2 -> X1 (200 x2), X2 -> 0 (x2) on [50,150]^2.
Model builtin_cs1();

// CS-II with V = 8 on [1,110]^2 and slow weights (1,2).
Model builtin_cs2(VolumeScaling scaling = VolumeScaling::stated);

}  // namespace slowvar
