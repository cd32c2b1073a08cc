#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slowvar/network.hpp"
#include "slowvar/rng.hpp"

namespace slowvar {

template <typename T>
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<T>> states;
  bool truncated = false;  // the run hit an absorbing state before t_end
};

using SsaTrajectory = Trajectory<int>;

struct GillespieStep {
  double wait = 0.0;
  std::size_t reaction = 0;
};

// Draws the waiting time and reaction index from the propensity vector `a`.
GillespieStep gillespie_select(std::span<const double> a, RngStream& rng);

// Throws AbsorbingStateError when every propensity vanishes.
GillespieStep gillespie_step(const ReactionNetwork& net, std::span<const int> x, RngStream& rng);

// Holding-interval callback: the state `x` was occupied on [t0, t1).
using SsaObserver = std::function<void(double t0, double t1, std::span<const int> x)>;

// Event-driven run without storing the path. Returns false if an absorbing
// state was reached before t_end. `x` holds the final state on return.
bool ssa_simulate(const ReactionNetwork& net, std::span<int> x, double t_end, RngStream& rng,
                  const SsaObserver& observer);

// Records every event and the terminal point at t_end.
SsaTrajectory ssa_run(const ReactionNetwork& net, std::span<const int> x0, double t_end, RngStream& rng,
                      const LatticeDomain* domain = nullptr);

// Euler-Maruyama step of the chemical Langevin equation with explicit
// standard normal draws (one per reaction).
std::vector<double> cle_step(const ReactionNetwork& net, std::span<const double> x, double dt,
                             std::span<const double> normals);
std::vector<double> cle_step(const ReactionNetwork& net, std::span<const double> x, double dt, RngStream& rng);

// Slow coordinate used by the conditional SSA. `compare` returns the sign of
// the level change between two in-domain states, or nothing if `to` has no
// level. `project` finds the state on the level of `anchor` that keeps the
// fast coordinate x1 of `moved`.
class SlowCoordinate {
 public:
  virtual ~SlowCoordinate() = default;
  virtual std::optional<int> compare(std::span<const int> from, std::span<const int> to) const = 0;
  virtual bool project(std::span<const int> moved, std::span<const int> anchor, std::span<int> out) const = 0;
};

// s = w·x. Projection keeps every coordinate of the moved state except the
// last species with a nonzero weight, which is solved from the old level.
class WeightedSlowCoordinate : public SlowCoordinate {
 public:
  WeightedSlowCoordinate(std::vector<double> weights, const LatticeDomain& domain);
  std::optional<int> compare(std::span<const int> from, std::span<const int> to) const override;
  bool project(std::span<const int> moved, std::span<const int> anchor, std::span<int> out) const override;
  double value(std::span<const int> x) const;

 private:
  std::vector<double> w_;
  const LatticeDomain* domain_;
  std::size_t solve_for_;
};

// Levels given by bin labels over the domain (negative label: no level).
// Projection picks, among the anchor's bin members with the moved state's
// x1, the one closest to the moved state (ties: smallest index).
class LabelSlowCoordinate : public SlowCoordinate {
 public:
  LabelSlowCoordinate(const LatticeDomain& domain, std::vector<int> labels);
  std::optional<int> compare(std::span<const int> from, std::span<const int> to) const override;
  bool project(std::span<const int> moved, std::span<const int> anchor, std::span<int> out) const override;
  int label(std::span<const int> x) const;
  const std::vector<int>& labels() const { return labels_; }

 private:
  const LatticeDomain* domain_;
  std::vector<int> labels_;
  int bin_count_ = 0;
  // Per bin: members sorted by x1 for projection lookups.
  std::vector<std::vector<std::size_t>> members_by_x1_;
};

enum class EventClass { fast, slow_up, slow_down, boundary_revert };

std::string to_string(EventClass c);

// Applies reaction j to x under the conditional SSA rules. `x` is updated in
// place; the returned class says what happened.
EventClass cssa_apply(const ReactionNetwork& net, std::span<int> x, std::size_t j, const SlowCoordinate& slow,
                      const LatticeDomain& domain);

struct CssaStep {
  double wait = 0.0;
  std::size_t reaction = 0;
  EventClass event = EventClass::fast;
};

CssaStep cssa_step(const ReactionNetwork& net, std::span<int> x, const SlowCoordinate& slow,
                   const LatticeDomain& domain, RngStream& rng);

struct CssaStats {
  double time = 0.0;
  std::uint64_t up = 0;
  std::uint64_t down = 0;
  std::uint64_t fast = 0;
  std::uint64_t reverts = 0;
  // Time spent in each domain state, indexed by state index (empty if not requested).
  std::vector<double> occupancy;
};

// Runs the conditional SSA from x0 until `attempts` slow transitions were attempted.
CssaStats cssa_run(const ReactionNetwork& net, const LatticeDomain& domain, const SlowCoordinate& slow,
                   std::span<const int> x0, std::uint64_t attempts, RngStream& rng, bool track_occupancy);

// CSV with header `t,x1,...,xl[,s]`.
void write_trajectory_csv(std::ostream& out, const SsaTrajectory& traj, const ReactionNetwork& net);

}  // namespace slowvar
