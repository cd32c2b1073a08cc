#include "slowvar/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "slowvar/errors.hpp"

namespace slowvar {

std::string to_string(VolumeScaling v) {
  return v == VolumeScaling::stated ? "stated" : "table";
}

VolumeScaling volume_scaling_from_string(const std::string& s) {
  if (s == "stated") return VolumeScaling::stated;
  if (s == "table") return VolumeScaling::table;
  throw ConfigError("unknown volume scaling convention '" + s + "' (expected stated or table)");
}

void validate_reaction(const Reaction& r, std::size_t species_count) {
  if (r.stoich.size() != species_count)
    throw ConfigError("reaction '" + r.label + "': stoichiometry length does not match species count");
  bool nonzero = false;
  for (int v : r.stoich) nonzero = nonzero || v != 0;
  if (!nonzero) throw ConfigError("reaction '" + r.label + "': zero stoichiometry vector");
  if (!(r.rate >= 0.0) || !std::isfinite(r.rate))
    throw ConfigError("reaction '" + r.label + "': rate must be finite and non-negative");
  if (r.law != RateLaw::constant && r.i >= species_count)
    throw ConfigError("reaction '" + r.label + "': operand species out of range");
  if (r.law == RateLaw::bilinear && (r.j >= species_count || r.j == r.i))
    throw ConfigError("reaction '" + r.label + "': bilinear law needs two distinct species");
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions,
                                 double volume, VolumeScaling scaling,
                                 std::optional<std::vector<double>> slow_weights)
    : species_(std::move(species)),
      reactions_(std::move(reactions)),
      volume_(volume),
      scaling_(scaling),
      slow_weights_(std::move(slow_weights)) {
  if (species_.empty()) throw ConfigError("network needs at least one species");
  if (!(volume_ > 0.0)) throw ConfigError("volume must be positive");
  for (std::size_t j = 0; j < reactions_.size(); ++j) {
    if (reactions_[j].label.empty()) reactions_[j].label = "R" + std::to_string(j + 1);
    validate_reaction(reactions_[j], species_.size());
  }
  if (slow_weights_) {
    if (slow_weights_->size() != species_.size())
      throw ConfigError("slow weights length does not match species count");
    bool nonzero = false;
    for (double w : *slow_weights_) nonzero = nonzero || w != 0.0;
    if (!nonzero) throw ConfigError("slow weights must not be all zero");
  }
}

std::optional<double> ReactionNetwork::slow_value(std::span<const int> x) const {
  if (!slow_weights_) return std::nullopt;
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (*slow_weights_)[k] * x[k];
  return s;
}

ReactionNetwork ReactionNetwork::scaled(double c) const {
  auto rs = reactions_;
  for (auto& r : rs) r.rate *= c;
  return ReactionNetwork(species_, std::move(rs), volume_, scaling_, slow_weights_);
}

void propensities(const ReactionNetwork& net, std::span<const int> x, std::span<double> out) {
  for (int v : x)
    if (v < 0) throw DomainError("propensities: negative state component");
  const auto& rs = net.reactions();
  for (std::size_t j = 0; j < rs.size(); ++j) out[j] = propensity(rs[j], x.data());
}

std::vector<double> propensities(const ReactionNetwork& net, std::span<const int> x) {
  std::vector<double> a(net.reaction_count());
  propensities(net, x, a);
  return a;
}

void propensities_real(const ReactionNetwork& net, std::span<const double> x, std::span<double> out) {
  const auto& rs = net.reactions();
  for (std::size_t j = 0; j < rs.size(); ++j) out[j] = propensity(rs[j], x.data());
}

LatticeDomain::LatticeDomain(std::vector<int> lo, std::vector<int> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.empty() || lo_.size() != hi_.size()) throw ConfigError("domain bounds must be non-empty and of equal length");
  stride_.resize(lo_.size());
  size_ = 1;
  for (std::size_t k = 0; k < lo_.size(); ++k) {
    if (lo_[k] > hi_[k]) throw ConfigError("domain: lo must not exceed hi");
    if (lo_[k] < 0) throw ConfigError("domain: populations must be non-negative");
    stride_[k] = size_;
    size_ *= std::size_t(hi_[k] - lo_[k] + 1);
  }
}

bool LatticeDomain::contains(std::span<const int> x) const {
  if (x.size() != lo_.size()) return false;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] < lo_[k] || x[k] > hi_[k]) return false;
  return true;
}

std::size_t LatticeDomain::index(std::span<const int> x) const {
  if (!contains(x)) {
    std::ostringstream msg;
    msg << "state (";
    for (std::size_t k = 0; k < x.size(); ++k) msg << (k ? "," : "") << x[k];
    msg << ") is outside the domain";
    throw DomainError(msg.str());
  }
  std::size_t idx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) idx += stride_[k] * std::size_t(x[k] - lo_[k]);
  return idx;
}

void LatticeDomain::state(std::size_t idx, std::span<int> out) const {
  if (idx >= size_) throw DomainError("state index out of range");
  for (std::size_t k = 0; k < lo_.size(); ++k) {
    const std::size_t extent = std::size_t(hi_[k] - lo_[k] + 1);
    out[k] = lo_[k] + int(idx % extent);
    idx /= extent;
  }
}

State LatticeDomain::state(std::size_t idx) const {
  State x(lo_.size());
  state(idx, x);
  return x;
}

int LatticeDomain::boundary_distance(std::span<const int> x) const {
  int d = std::numeric_limits<int>::max();
  for (std::size_t k = 0; k < x.size(); ++k) d = std::min({d, x[k] - lo_[k], hi_[k] - x[k]});
  return d;
}

namespace {

Reaction make(std::vector<int> stoich, RateLaw law, std::size_t i, std::size_t j, double rate, std::string label) {
  Reaction r;
  r.stoich = std::move(stoich);
  r.law = law;
  r.i = i;
  r.j = j;
  r.rate = rate;
  r.label = std::move(label);
  return r;
}

}  // namespace

Model builtin_cs1() {
  // k1 V = 100, k2 = k3 = 200, k4 = 1
  std::vector<Reaction> rs{
      make({1, 0}, RateLaw::constant, 0, 0, 100.0, "R1"),
      make({-1, 1}, RateLaw::linear, 0, 0, 200.0, "R2"),
      make({1, -1}, RateLaw::linear, 1, 0, 200.0, "R3"),
      make({0, -1}, RateLaw::linear, 1, 0, 1.0, "R4"),
  };
  ReactionNetwork net({"X1", "X2"}, std::move(rs), 1.0, VolumeScaling::stated, std::vector<double>{0.5, 0.5});
  return Model{std::move(net), LatticeDomain({50, 50}, {150, 150}), "cs1"};
}

Model builtin_cs2(VolumeScaling scaling) {
  const double V = 8.0;
  const double k1 = 32, k2 = 0.32, k3 = 1475.0 / V, k4 = 19.75, k5 = 80, k6 = 4000;
  // Exponent of V multiplying each rate under the stated convention.
  auto vpow = [&](double k, int p) { return scaling == VolumeScaling::stated ? k * std::pow(V, p) : k; };
  std::vector<Reaction> rs{
      make({1, 0}, RateLaw::linear, 1, 0, k1, "R1"),
      make({-1, 0}, RateLaw::bilinear, 0, 1, vpow(k2, -1), "R2"),
      make({1, 0}, RateLaw::constant, 0, 0, vpow(k3, 1), "R3"),
      make({-1, 0}, RateLaw::linear, 0, 0, k4, "R4"),
      make({-2, 1}, RateLaw::pair_quadratic, 0, 0, vpow(k5, -1), "R5"),
      make({2, -1}, RateLaw::linear, 1, 0, k6, "R6"),
  };
  ReactionNetwork net({"X1", "X2"}, std::move(rs), V, scaling, std::vector<double>{1.0, 2.0});
  return Model{std::move(net), LatticeDomain({1, 1}, {110, 110}), "cs2"};
}

}  // namespace slowvar
