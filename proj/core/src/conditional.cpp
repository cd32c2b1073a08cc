#include "slowvar/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>

#include "slowvar/errors.hpp"

namespace slowvar {

namespace {

std::vector<std::size_t> undirected_components(const Eigen::MatrixXd& Q) {
  const auto m = Q.rows();
  std::vector<int> comp(std::size_t(m), -1);
  std::vector<std::size_t> sizes;
  for (Eigen::Index s = 0; s < m; ++s) {
    if (comp[std::size_t(s)] >= 0) continue;
    const int id = int(sizes.size());
    sizes.push_back(0);
    std::vector<Eigen::Index> stack{s};
    comp[std::size_t(s)] = id;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      ++sizes.back();
      for (Eigen::Index v = 0; v < m; ++v)
        if (v != u && comp[std::size_t(v)] < 0 && (Q(u, v) > 0.0 || Q(v, u) > 0.0)) {
          comp[std::size_t(v)] = id;
          stack.push_back(v);
        }
    }
  }
  return sizes;
}

ConditionalDistribution from_states(const LatticeDomain& domain, std::span<const std::size_t> bin,
                                    std::vector<double> probs) {
  ConditionalDistribution c;
  c.states.assign(bin.begin(), bin.end());
  c.probs = std::move(probs);
  State x(domain.dim());
  for (std::size_t i : bin) {
    domain.state(i, x);
    c.fast_values.push_back(x[0]);
  }
  return c;
}

}  // namespace

std::vector<double> dense_stationary(const Eigen::MatrixXd& Q) {
  const auto m = Q.rows();
  if (m == 1) return {1.0};
  const auto sizes = undirected_components(Q);
  if (sizes.size() > 1) {
    std::ostringstream msg;
    msg << "generator splits into " << sizes.size() << " components of sizes";
    for (std::size_t s : sizes) msg << " " << s;
    throw NumericalError(msg.str());
  }
  // Scale so that the largest exit rate is one; this keeps the normalization row balanced.
  const double scale = std::max(1e-300, (-Q.diagonal()).maxCoeff());
  Eigen::MatrixXd A = Q.transpose() / scale;
  A.row(m - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(m - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (lu.rank() < m) throw NumericalError("stationary distribution is not unique (reducible generator)");
  Eigen::VectorXd pi = lu.solve(b);
  pi += lu.solve(b - A * pi);  // one refinement step
  std::vector<double> out(static_cast<std::size_t>(m));
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double v = pi(i);
    if (v < 0.0) {
      if (v < -1e-9) throw NumericalError("stationary solve produced a negative probability");
      v = 0.0;
    }
    out[std::size_t(i)] = v;
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

ConditionalDistribution fast_subsystem_conditional(const ReactionNetwork& net, const LatticeDomain& domain,
                                                   std::span<const std::size_t> bin,
                                                   std::span<const std::size_t> fast) {
  if (bin.empty()) throw DomainError("empty bin");
  const auto m = Eigen::Index(bin.size());
  std::unordered_map<std::size_t, Eigen::Index> local;
  for (Eigen::Index a = 0; a < m; ++a) local[bin[std::size_t(a)]] = a;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);
  State x(domain.dim()), y(domain.dim());
  std::vector<double> alpha(net.reaction_count());
  for (Eigen::Index a = 0; a < m; ++a) {
    domain.state(bin[std::size_t(a)], x);
    propensities(net, x, alpha);
    for (std::size_t j : fast) {
      if (j >= net.reaction_count()) throw DomainError("fast reaction index out of range");
      if (alpha[j] <= 0.0) continue;
      const auto& nu = net.reaction(j).stoich;
      for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + nu[k];
      if (!domain.contains(y)) continue;
      const auto it = local.find(domain.index(y));
      if (it == local.end()) continue;
      Q(a, it->second) += alpha[j];
      Q(a, a) -= alpha[j];
    }
  }
  return from_states(domain, bin, dense_stationary(Q));
}

ConditionalDistribution projected_conditional(const ReactionNetwork& net, const LatticeDomain& domain,
                                              const LabelSlowCoordinate& coord, int bin) {
  std::vector<std::size_t> members;
  const auto& lab = coord.labels();
  for (std::size_t i = 0; i < lab.size(); ++i)
    if (lab[i] == bin) members.push_back(i);
  if (members.empty()) throw DomainError("projected_conditional: empty bin");
  const auto m = Eigen::Index(members.size());
  std::unordered_map<std::size_t, Eigen::Index> local;
  for (Eigen::Index a = 0; a < m; ++a) local[members[std::size_t(a)]] = a;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);
  State x(domain.dim()), y(domain.dim()), z(domain.dim());
  std::vector<double> alpha(net.reaction_count());
  for (Eigen::Index a = 0; a < m; ++a) {
    domain.state(members[std::size_t(a)], x);
    propensities(net, x, alpha);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] <= 0.0) continue;
      std::copy(x.begin(), x.end(), z.begin());
      if (cssa_apply(net, z, j, coord, domain) == EventClass::boundary_revert) continue;
      if (z == x) continue;
      const Eigen::Index b = local.at(domain.index(z));
      Q(a, b) += alpha[j];
      Q(a, a) -= alpha[j];
    }
  }
  auto c = from_states(domain, members, dense_stationary(Q));
  c.bin = bin;
  return c;
}

ConditionalDistribution closed_form_cs1(double s, double ratio) {
  if (s < 0.0) throw DomainError("closed_form_cs1: s must be non-negative");
  const double two_s = 2.0 * s;
  if (std::abs(two_s - std::round(two_s)) > 1e-9) throw DomainError("closed_form_cs1: 2s must be an integer");
  if (!(ratio > 0.0)) throw DomainError("closed_form_cs1: rate ratio must be positive");
  const int n = int(std::round(two_s));
  ConditionalDistribution c;
  c.slow_value = s;
  std::vector<double> logp;
  for (int x1 = 0; x1 <= n; ++x1) {
    const int x2 = n - x1;
    c.fast_values.push_back(x1);
    logp.push_back(-std::lgamma(x1 + 1.0) - std::lgamma(x2 + 1.0) + x2 * std::log(ratio));
  }
  const double top = *std::max_element(logp.begin(), logp.end());
  double total = 0.0;
  for (double& v : logp) total += (v = std::exp(v - top));
  for (double v : logp) c.probs.push_back(v / total);
  return c;
}

ConditionalDistribution closed_form_cs2(int s, double ratio) {
  if (s < 0) throw DomainError("closed_form_cs2: s must be non-negative");
  if (!(ratio > 0.0)) throw DomainError("closed_form_cs2: rate ratio must be positive");
  ConditionalDistribution c;
  c.slow_value = s;
  std::vector<double> logp;
  for (int x1 = s % 2; x1 <= s; x1 += 2) {
    const int x2 = (s - x1) / 2;
    c.fast_values.push_back(x1);
    logp.push_back(-std::lgamma(x1 + 1.0) - std::lgamma(x2 + 1.0) + x2 * std::log(ratio));
  }
  const double top = *std::max_element(logp.begin(), logp.end());
  double total = 0.0;
  for (double& v : logp) total += (v = std::exp(v - top));
  for (double v : logp) c.probs.push_back(v / total);
  return c;
}

double cs1_ratio(const ReactionNetwork& net) {
  if (net.reaction_count() != 4) throw ConfigError("cs1_ratio: not a CS-I network");
  return net.reaction(1).rate / net.reaction(2).rate;
}

double cs2_ratio(const ReactionNetwork& net) {
  if (net.reaction_count() != 6) throw ConfigError("cs2_ratio: not a CS-II network");
  return net.reaction(4).rate / net.reaction(5).rate;
}

ConditionalDistribution cssa_conditional(const ReactionNetwork& net, const LatticeDomain& domain,
                                         const SlowCoordinate& coord, std::span<const int> x0, std::uint64_t lc,
                                         RngStream& rng) {
  const CssaStats st = cssa_run(net, domain, coord, x0, lc, rng, true);
  std::vector<std::pair<int, std::size_t>> support;
  State x(domain.dim());
  for (std::size_t i = 0; i < st.occupancy.size(); ++i)
    if (st.occupancy[i] > 0.0) {
      domain.state(i, x);
      support.emplace_back(x[0], i);
    }
  std::sort(support.begin(), support.end());
  ConditionalDistribution c;
  for (const auto& [f, i] : support) {
    c.states.push_back(i);
    c.fast_values.push_back(f);
    c.probs.push_back(st.occupancy[i] / st.time);
  }
  double total = 0.0;
  for (double p : c.probs) total += p;
  for (double& p : c.probs) p /= total;
  return c;
}

State representative_state(const LatticeDomain& domain, std::span<const std::size_t> bin) {
  if (bin.empty()) throw DomainError("representative_state: empty bin");
  const std::size_t l = domain.dim();
  std::vector<double> mean(l, 0.0);
  State x(l);
  for (std::size_t i : bin) {
    domain.state(i, x);
    for (std::size_t k = 0; k < l; ++k) mean[k] += x[k];
  }
  for (double& v : mean) v /= double(bin.size());
  std::size_t best = bin[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i : bin) {
    domain.state(i, x);
    double d = 0.0;
    for (std::size_t k = 0; k < l; ++k) d += (x[k] - mean[k]) * (x[k] - mean[k]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return domain.state(best);
}

State state_with_slow_value(const LatticeDomain& domain, std::span<const double> weights, double s) {
  std::vector<std::size_t> members;
  State x(domain.dim());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    domain.state(i, x);
    double v = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) v += weights[k] * x[k];
    if (std::abs(v - s) < 1e-9) members.push_back(i);
  }
  if (members.empty()) {
    std::ostringstream msg;
    msg << "no in-domain state has slow value " << s;
    throw DomainError(msg.str());
  }
  return representative_state(domain, members);
}

ReactionClasses classify_reactions(const ReactionNetwork& net, const LatticeDomain& domain, const Partition& p) {
  const auto lab = p.labels(domain.size());
  ReactionClasses rc;
  State x(domain.dim()), y(domain.dim());
  for (std::size_t j = 0; j < net.reaction_count(); ++j) {
    const auto& nu = net.reaction(j).stoich;
    std::size_t moved = 0, total = 0;
    for (std::size_t i = 0; i < lab.size(); ++i) {
      if (lab[i] < 0) continue;
      domain.state(i, x);
      for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + nu[k];
      if (!domain.contains(y)) continue;
      const int ly = lab[domain.index(y)];
      if (ly < 0) continue;
      ++total;
      if (ly != lab[i]) ++moved;
    }
    const double frac = total ? double(moved) / double(total) : 1.0;
    rc.slow_fraction.push_back(frac);
    if (frac > 0.5)
      rc.slow.push_back(j);
    else
      rc.fast.push_back(j);
    if (frac >= 0.4 && frac <= 0.6) rc.ambiguous.push_back(j);
  }
  return rc;
}

double total_variation(const ConditionalDistribution& a, const ConditionalDistribution& b) {
  std::map<int, double> diff;
  for (std::size_t i = 0; i < a.fast_values.size(); ++i) diff[a.fast_values[i]] += a.probs[i];
  for (std::size_t i = 0; i < b.fast_values.size(); ++i) diff[b.fast_values[i]] -= b.probs[i];
  double tv = 0.0;
  for (const auto& [f, d] : diff) tv += std::abs(d);
  return 0.5 * tv;
}

ConditionalDistribution restrict_to(const ConditionalDistribution& c, std::span<const int> fast_values) {
  ConditionalDistribution out;
  out.bin = c.bin;
  out.slow_value = c.slow_value;
  double total = 0.0;
  for (std::size_t i = 0; i < c.fast_values.size(); ++i)
    if (std::find(fast_values.begin(), fast_values.end(), c.fast_values[i]) != fast_values.end()) {
      out.fast_values.push_back(c.fast_values[i]);
      out.probs.push_back(c.probs[i]);
      total += c.probs[i];
    }
  if (!(total > 0.0)) throw DomainError("restrict_to: no mass on the requested support");
  for (double& p : out.probs) p /= total;
  return out;
}

void write_conditionals_csv(std::ostream& out, std::span<const ConditionalDistribution> cs) {
  out << "bin_id,x1,prob\n";
  out.precision(17);
  for (std::size_t q = 0; q < cs.size(); ++q)
    for (std::size_t i = 0; i < cs[q].probs.size(); ++i)
      out << (cs[q].bin >= 0 ? cs[q].bin : int(q)) << "," << cs[q].fast_values[i] << "," << cs[q].probs[i] << "\n";
}

}  // namespace slowvar
