#include "slowvar/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "slowvar/errors.hpp"

namespace slowvar {

namespace {

constexpr std::size_t kMaxSpecies = 16;
using Buffer = std::array<int, kMaxSpecies>;

void check_dim(std::size_t l) {
  if (l > kMaxSpecies) throw ConfigError("simulation supports at most 16 species");
}

}  // namespace

GillespieStep gillespie_select(std::span<const double> a, RngStream& rng) {
  double a0 = 0.0;
  for (double v : a) a0 += v;
  if (!(a0 > 0.0)) throw AbsorbingStateError("all propensities vanish (absorbing state)");
  GillespieStep step;
  step.wait = -std::log(rng.uniform()) / a0;
  const double target = rng.uniform() * a0;
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] <= 0.0) continue;
    last_positive = j;
    cum += a[j];
    if (cum > target) {
      step.reaction = j;
      return step;
    }
  }
  // Rounding left target at the very top of the scan.
  step.reaction = last_positive;
  return step;
}

GillespieStep gillespie_step(const ReactionNetwork& net, std::span<const int> x, RngStream& rng) {
  std::vector<double> a = propensities(net, x);
  return gillespie_select(a, rng);
}

bool ssa_simulate(const ReactionNetwork& net, std::span<int> x, double t_end, RngStream& rng,
                  const SsaObserver& observer) {
  std::vector<double> a(net.reaction_count());
  double t = 0.0;
  while (t < t_end) {
    propensities(net, x, a);
    double a0 = 0.0;
    for (double v : a) a0 += v;
    if (!(a0 > 0.0)) {
      if (observer) observer(t, t_end, x);
      return false;
    }
    const GillespieStep step = gillespie_select(a, rng);
    if (t + step.wait >= t_end) {
      if (observer) observer(t, t_end, x);
      return true;
    }
    if (observer) observer(t, t + step.wait, x);
    const auto& nu = net.reaction(step.reaction).stoich;
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += nu[k];
    t += step.wait;
  }
  return true;
}

SsaTrajectory ssa_run(const ReactionNetwork& net, std::span<const int> x0, double t_end, RngStream& rng,
                      const LatticeDomain* domain) {
  if (x0.size() != net.species_count()) throw DomainError("ssa_run: initial state has wrong length");
  if (domain && !domain->contains(x0)) throw DomainError("ssa_run: initial state outside the domain");
  for (int v : x0)
    if (v < 0) throw DomainError("ssa_run: negative initial state");

  SsaTrajectory traj;
  State x(x0.begin(), x0.end());
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  std::vector<double> a(net.reaction_count());
  double t = 0.0;
  while (t < t_end) {
    propensities(net, x, a);
    double a0 = 0.0;
    for (double v : a) a0 += v;
    if (!(a0 > 0.0)) {
      traj.truncated = true;
      return traj;
    }
    const GillespieStep step = gillespie_select(a, rng);
    if (t + step.wait >= t_end) break;
    t += step.wait;
    const auto& nu = net.reaction(step.reaction).stoich;
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += nu[k];
    traj.times.push_back(t);
    traj.states.push_back(x);
  }
  if (t_end > traj.times.back()) {
    traj.times.push_back(t_end);
    traj.states.push_back(x);
  }
  return traj;
}

std::vector<double> cle_step(const ReactionNetwork& net, std::span<const double> x, double dt,
                             std::span<const double> normals) {
  const std::size_t m = net.reaction_count();
  if (normals.size() != m) throw DomainError("cle_step: need one normal draw per reaction");
  if (dt < 0.0) throw DomainError("cle_step: negative time step");
  std::vector<double> a(m);
  propensities_real(net, x, a);
  for (std::size_t j = 0; j < m; ++j) {
    if (a[j] >= 0.0) continue;
    const double tol = 1e-9 * std::max(1.0, net.reaction(j).rate);
    if (a[j] < -tol) throw DomainError("cle_step: negative propensity for " + net.reaction(j).label);
    a[j] = 0.0;
  }
  std::vector<double> out(x.begin(), x.end());
  const double sq = std::sqrt(dt);
  for (std::size_t j = 0; j < m; ++j) {
    const double inc = dt * a[j] + std::sqrt(a[j]) * normals[j] * sq;
    if (inc == 0.0) continue;
    const auto& nu = net.reaction(j).stoich;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += nu[k] * inc;
  }
  return out;
}

std::vector<double> cle_step(const ReactionNetwork& net, std::span<const double> x, double dt, RngStream& rng) {
  std::vector<double> z(net.reaction_count());
  for (double& v : z) v = rng.normal();
  return cle_step(net, x, dt, z);
}

WeightedSlowCoordinate::WeightedSlowCoordinate(std::vector<double> weights, const LatticeDomain& domain)
    : w_(std::move(weights)), domain_(&domain), solve_for_(0) {
  if (w_.size() != domain.dim()) throw ConfigError("slow weights do not match the domain dimension");
  bool found = false;
  for (std::size_t k = 0; k < w_.size(); ++k)
    if (w_[k] != 0.0) {
      solve_for_ = k;
      found = true;
    }
  if (!found) throw ConfigError("slow weights must not be all zero");
}

double WeightedSlowCoordinate::value(std::span<const int> x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < w_.size(); ++k) s += w_[k] * x[k];
  return s;
}

std::optional<int> WeightedSlowCoordinate::compare(std::span<const int> from, std::span<const int> to) const {
  double ds = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < w_.size(); ++k) {
    ds += w_[k] * double(to[k] - from[k]);
    scale += std::abs(w_[k]);
  }
  if (std::abs(ds) <= 1e-12 * scale) return 0;
  return ds > 0.0 ? 1 : -1;
}

bool WeightedSlowCoordinate::project(std::span<const int> moved, std::span<const int> anchor,
                                     std::span<int> out) const {
  // The fast coordinate is x1, so it cannot also be the solved-for coordinate.
  if (solve_for_ == 0) return false;
  double rest = value(anchor);
  for (std::size_t k = 0; k < w_.size(); ++k) {
    out[k] = moved[k];
    if (k != solve_for_) rest -= w_[k] * moved[k];
  }
  const double v = rest / w_[solve_for_];
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9) return false;
  out[solve_for_] = int(r);
  return domain_->contains(out);
}

LabelSlowCoordinate::LabelSlowCoordinate(const LatticeDomain& domain, std::vector<int> labels)
    : domain_(&domain), labels_(std::move(labels)) {
  if (labels_.size() != domain.size()) throw ConfigError("label vector does not match the domain size");
  for (int b : labels_) bin_count_ = std::max(bin_count_, b + 1);
  members_by_x1_.assign(std::size_t(bin_count_), {});
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] >= 0) members_by_x1_[std::size_t(labels_[i])].push_back(i);
  // Index order already sorts by x1 within each higher coordinate; sort by (x1, index).
  Buffer buf{};
  for (auto& mem : members_by_x1_) {
    std::vector<std::pair<int, std::size_t>> keyed;
    keyed.reserve(mem.size());
    for (std::size_t i : mem) {
      domain.state(i, std::span<int>(buf.data(), domain.dim()));
      keyed.emplace_back(buf[0], i);
    }
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t t = 0; t < mem.size(); ++t) mem[t] = keyed[t].second;
  }
}

int LabelSlowCoordinate::label(std::span<const int> x) const { return labels_[domain_->index(x)]; }

std::optional<int> LabelSlowCoordinate::compare(std::span<const int> from, std::span<const int> to) const {
  if (!domain_->contains(to)) return std::nullopt;
  const int lf = label(from);
  const int lt = label(to);
  if (lt < 0 || lf < 0) return std::nullopt;
  return lt == lf ? 0 : (lt > lf ? 1 : -1);
}

bool LabelSlowCoordinate::project(std::span<const int> moved, std::span<const int> anchor,
                                  std::span<int> out) const {
  const int b = label(anchor);
  if (b < 0) return false;
  const auto& mem = members_by_x1_[std::size_t(b)];
  const std::size_t l = domain_->dim();
  Buffer buf{};
  std::span<int> y(buf.data(), l);
  // Binary search for the first member with x1 >= moved[0].
  auto x1_of = [&](std::size_t idx) {
    domain_->state(idx, y);
    return y[0];
  };
  std::size_t lo = 0, hi = mem.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (x1_of(mem[mid]) < moved[0])
      lo = mid + 1;
    else
      hi = mid;
  }
  long best = -1;
  long best_dist = 0;
  for (std::size_t t = lo; t < mem.size(); ++t) {
    domain_->state(mem[t], y);
    if (y[0] != moved[0]) break;
    long dist = 0;
    for (std::size_t k = 1; k < l; ++k) dist += std::abs(y[k] - moved[k]);
    if (best < 0 || dist < best_dist || (dist == best_dist && long(mem[t]) < best)) {
      best = long(mem[t]);
      best_dist = dist;
    }
  }
  if (best < 0) return false;
  domain_->state(std::size_t(best), out);
  return true;
}

std::string to_string(EventClass c) {
  switch (c) {
    case EventClass::fast:
      return "fast";
    case EventClass::slow_up:
      return "slow-up-attempt";
    case EventClass::slow_down:
      return "slow-down-attempt";
    case EventClass::boundary_revert:
      return "boundary-revert";
  }
  return "?";
}

EventClass cssa_apply(const ReactionNetwork& net, std::span<int> x, std::size_t j, const SlowCoordinate& slow,
                      const LatticeDomain& domain) {
  const std::size_t l = x.size();
  check_dim(l);
  Buffer ybuf{}, zbuf{};
  std::span<int> y(ybuf.data(), l), z(zbuf.data(), l);
  const auto& nu = net.reaction(j).stoich;
  for (std::size_t k = 0; k < l; ++k) y[k] = x[k] + nu[k];
  if (!domain.contains(y)) return EventClass::boundary_revert;
  const auto cmp = slow.compare(x, y);
  if (!cmp) return EventClass::boundary_revert;
  if (*cmp == 0) {
    std::copy(y.begin(), y.end(), x.begin());
    return EventClass::fast;
  }
  // Slow attempt: keep the new fast value, restore the old level, or revert.
  if (slow.project(y, x, z)) std::copy(z.begin(), z.end(), x.begin());
  return *cmp > 0 ? EventClass::slow_up : EventClass::slow_down;
}

CssaStep cssa_step(const ReactionNetwork& net, std::span<int> x, const SlowCoordinate& slow,
                   const LatticeDomain& domain, RngStream& rng) {
  std::vector<double> a = propensities(net, x);
  const GillespieStep g = gillespie_select(a, rng);
  CssaStep step;
  step.wait = g.wait;
  step.reaction = g.reaction;
  step.event = cssa_apply(net, x, g.reaction, slow, domain);
  return step;
}

CssaStats cssa_run(const ReactionNetwork& net, const LatticeDomain& domain, const SlowCoordinate& slow,
                   std::span<const int> x0, std::uint64_t attempts, RngStream& rng, bool track_occupancy) {
  if (attempts < 1) throw ConfigError("L_c must be at least 1");
  if (!domain.contains(x0)) throw DomainError("cssa_run: initial state outside the domain");
  const std::size_t l = x0.size();
  check_dim(l);
  Buffer xbuf{};
  std::span<int> x(xbuf.data(), l);
  std::copy(x0.begin(), x0.end(), x.begin());

  CssaStats st;
  if (track_occupancy) st.occupancy.assign(domain.size(), 0.0);
  const auto& rs = net.reactions();
  std::vector<double> a(rs.size());
  std::uint64_t since_attempt = 0;
  constexpr std::uint64_t kStall = 2'000'000'000ull;
  while (st.up + st.down < attempts) {
    if (++since_attempt > kStall)
      throw NumericalError("conditional SSA made no slow-transition attempt in 2e9 events");
    for (std::size_t j = 0; j < rs.size(); ++j) a[j] = propensity(rs[j], x.data());
    const GillespieStep g = gillespie_select(a, rng);
    if (track_occupancy) st.occupancy[domain.index(x)] += g.wait;
    st.time += g.wait;
    switch (cssa_apply(net, x, g.reaction, slow, domain)) {
      case EventClass::fast:
        ++st.fast;
        break;
      case EventClass::slow_up:
        ++st.up;
        since_attempt = 0;
        break;
      case EventClass::slow_down:
        ++st.down;
        since_attempt = 0;
        break;
      case EventClass::boundary_revert:
        ++st.reverts;
        break;
    }
  }
  return st;
}

void write_trajectory_csv(std::ostream& out, const SsaTrajectory& traj, const ReactionNetwork& net) {
  out << "t";
  for (std::size_t k = 0; k < net.species_count(); ++k) out << ",x" << (k + 1);
  const bool with_s = net.slow_weights().has_value();
  if (with_s) out << ",s";
  out << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << traj.times[i];
    for (int v : traj.states[i]) out << "," << v;
    if (with_s) out << "," << *net.slow_value(traj.states[i]);
    out << "\n";
  }
}

}  // namespace slowvar
